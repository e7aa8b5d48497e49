import pytest

from Correspondence_Analysis.Pattern_Analyzer.patterns import wordlist_patterns
from Correspondence_Analysis.Wordlist_Processor.wordlist import parse_wordlist

# Four languages, three concepts. Concept B has no word in L4.
TOY_ROWS = [
    (1, "L1", "A", "k a n a", 1),
    (2, "L2", "A", "k a n a", 1),
    (3, "L3", "A", "k o n a", 1),
    (4, "L4", "A", "k a n e", 1),
    (5, "L1", "B", "k i n", 2),
    (6, "L2", "B", "k i n", 2),
    (7, "L3", "B", "k e n", 2),
    (8, "L1", "C", "x a l a", 3),
    (9, "L2", "C", "k a l a", 3),
    (10, "L3", "C", "k o l a", 3),
    (11, "L4", "C", "k a l e", 3),
]


def wordlist_text(rows, alignment: bool = True) -> str:
    header = "ID\tDOCULECT\tCONCEPT\tTOKENS\tCOGID" + ("\tALIGNMENT" if alignment else "")
    lines = [header]
    for form_id, doculect, concept, tokens, cogid in rows:
        line = f"{form_id}\t{doculect}\t{concept}\t{tokens}\t{cogid}"
        if alignment:
            line += f"\t{tokens}"
        lines.append(line)
    return "\n".join(lines) + "\n"


@pytest.fixture
def toy_text():
    return wordlist_text(TOY_ROWS)


@pytest.fixture
def toy_wordlist(toy_text):
    return parse_wordlist(toy_text)


@pytest.fixture
def toy_patterns(toy_wordlist):
    return wordlist_patterns(toy_wordlist)


@pytest.fixture
def toy_file(tmp_path, toy_text):
    path = tmp_path / "toy.tsv"
    path.write_text(toy_text, encoding="utf-8")
    return str(path)
