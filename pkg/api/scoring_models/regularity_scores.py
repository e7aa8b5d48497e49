import numpy as np
from scipy.stats import gmean

from utils.exceptions import EmptyCognateSet, InconsistentReport

SCORE_DECIMALS = 4


def _as_recurrences(values) -> np.ndarray:
    recurrences = np.asarray(list(values), dtype=np.float64)
    if recurrences.ndim != 1:
        raise InconsistentReport("recurrences must be a flat sequence")
    return recurrences


def cogset_score(recurrences) -> float:
    """
    사이트 재현값(recurrence)의 기하평균으로 계산하는 코그네이트 세트 점수.

    Args:
        recurrences: Positive integer recurrences of the sites of one cognate set.

    Returns:
        float: exp(mean(ln r)), between 1 and the largest recurrence.

    Raises:
        EmptyCognateSet: If no recurrence is given.
        InconsistentReport: If a recurrence is below 1.
    """
    values = _as_recurrences(recurrences)
    if values.size == 0:
        raise EmptyCognateSet("a cognate set score needs at least one site")
    if np.any(values < 1):
        raise InconsistentReport("site recurrences must be at least 1")
    return float(gmean(values))


def normalized_log_recurrences(recurrences, total_sites: int) -> np.ndarray:
    """ln(r / N) per site; the values whose mean defines the dataset score."""
    values = _as_recurrences(recurrences)
    if total_sites < 1:
        raise InconsistentReport(f"total_sites must be positive, got {total_sites}")
    if np.any(values < 1) or np.any(values > total_sites):
        raise InconsistentReport(f"site recurrences must lie in [1, {total_sites}]")
    return np.log(values / total_sites)


def dataset_score(all_recurrences, total_sites: int) -> float:
    """
    데이터셋 전체의 정규화 점수: 모든 사이트 재현값의 기하평균 / 전체 사이트 수.

    Args:
        all_recurrences: One recurrence per site of the dataset.
        total_sites (int): Number of sites; must equal len(all_recurrences).

    Returns:
        float: Score in (0, 1].

    Raises:
        InconsistentReport: On a length mismatch or a recurrence outside [1, total_sites].
    """
    values = _as_recurrences(all_recurrences)
    if values.size != total_sites:
        raise InconsistentReport(f"{values.size} recurrences reported for {total_sites} sites")
    return float(np.exp(np.mean(normalized_log_recurrences(values, total_sites))))


# 사용 예시
if __name__ == '__main__':
    uneven, even = [1, 1, 1, 15], [2, 2, 2, 2]
    for name, recurrences in (("uneven", uneven), ("even", even)):
        print(f"{name:<8}: arithmetic mean {np.mean(recurrences):.4f}, "
              f"log mean {np.mean(np.log(recurrences)):.4f}, score {cogset_score(recurrences):.4f}")

    print("-" * 20)
    print(f"dataset score (all singletons, N=4): {dataset_score([1, 1, 1, 1], 4):.4f}")
