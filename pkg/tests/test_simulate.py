import pytest

from Correspondence_Analysis.Simulation.simulate import (
    CONSONANT_POOL,
    PROTO_DOCULECT,
    VOWEL_POOL,
    Merger,
    SimulationConfig,
    derive_seed,
    evolve,
    generate_proto,
    inject_noise,
    inject_replacements,
    sample_mergers,
    simulate_wordlist,
)
from Correspondence_Analysis.Wordlist_Processor.alignment import SegmentClass, classify
from Correspondence_Analysis.Wordlist_Processor.wordlist import parse_wordlist
from utils.exceptions import ConfigError

HEADER = "ID\tDOCULECT\tCONCEPT\tTOKENS\tCOGID\n"


def _proto(tokens):
    return parse_wordlist(HEADER + f"1\t{PROTO_DOCULECT}\tc\t{tokens}\t1\n")


def _changed(clean, noisy):
    return {
        (a.id, index)
        for a, b in zip(clean.forms, noisy.forms)
        for index, (x, y) in enumerate(zip(a.tokens, b.tokens))
        if x != y
    }


def test_derive_seed_is_deterministic():
    assert derive_seed(7, "noise") == derive_seed(7, "noise")
    assert derive_seed(7, "noise") != derive_seed(7, "replace")
    assert derive_seed(7, "noise") != derive_seed(8, "noise")
    assert 0 <= derive_seed("sim", 0.1, 3) < 2**64


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_concepts": 0},
        {"n_daughters": 0},
        {"n_consonants": 1},
        {"n_vowels": len(VOWEL_POOL) + 1},
        {"n_consonants": len(CONSONANT_POOL) + 1},
        {"max_mergers": -1},
        {"seed": -1},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SimulationConfig(**kwargs)


def test_config_from_settings():
    cfg = SimulationConfig.from_settings({"n_concepts": 50, "seed": 3, "unrelated": 1}, seed=None, n_daughters=4)
    assert (cfg.n_concepts, cfg.seed, cfg.n_daughters) == (50, 3, 4)
    assert cfg.consonants == CONSONANT_POOL[:10]
    assert cfg.vowels == ("a", "e", "i", "u")


def test_generate_proto_is_cvcv():
    cfg = SimulationConfig(n_concepts=30, seed=1)
    proto = generate_proto(cfg)
    assert proto.doculects == (PROTO_DOCULECT,)
    assert len(proto.forms) == 30
    assert proto.forms[0].concept == "C001"
    assert [form.cogid for form in proto.forms] == list(range(1, 31))
    for form in proto.forms:
        assert [classify(token) for token in form.tokens] == [
            SegmentClass.CONSONANT, SegmentClass.VOWEL, SegmentClass.CONSONANT, SegmentClass.VOWEL,
        ]
        assert set(form.tokens[::2]) <= set(cfg.consonants)
        assert set(form.tokens[1::2]) <= set(cfg.vowels)
    other = generate_proto(SimulationConfig(n_concepts=30, seed=2))
    assert [f.tokens for f in proto.forms] != [f.tokens for f in other.forms]


def test_sample_mergers_bounds():
    for seed in range(30):
        cfg = SimulationConfig(seed=seed)
        for daughter in range(5):
            mergers = sample_mergers(cfg, daughter)
            assert len(mergers) <= cfg.max_mergers
            assert len({m.source for m in mergers}) == len(mergers)
            for merger in mergers:
                assert merger.source != merger.target
                assert classify(merger.source) == classify(merger.target)
    assert sample_mergers(SimulationConfig(max_mergers=0), 0) == []


def test_sample_mergers_stop_when_classes_collapse():
    cfg = SimulationConfig(n_consonants=2, n_vowels=2, max_mergers=5)
    for daughter in range(20):
        assert len(sample_mergers(cfg, daughter)) <= 2


@pytest.mark.parametrize(
    "mergers, expected",
    [
        ([], "r a l e"),
        ([Merger("e", "a")], "r a l a"),
        ([Merger("a", "e")], "r e l e"),
        ([Merger("l", "k")], "r a k e"),
        ([Merger("a", "i"), Merger("r", "j")], "j i l e"),
        ([Merger("e", "i")], "r a l i"),
        ([Merger("e", "i"), Merger("r", "w")], "w a l i"),
    ],
)
def test_mergers_rewrite_the_proto_form(mergers, expected):
    daughters = evolve(_proto("r a l e"), [mergers])
    assert daughters.forms[0].tokens == tuple(expected.split())


def test_ten_daughters_of_one_proto_form():
    mergers = [
        [Merger("e", "a")],
        [],
        [Merger("a", "e")],
        [Merger("l", "k")],
        [],
        [],
        [Merger("a", "i"), Merger("r", "j")],
        [Merger("e", "i")],
        [Merger("e", "i"), Merger("r", "w")],
        [],
    ]
    daughters = evolve(_proto("r a l e"), mergers)
    assert daughters.doculects == tuple(f"Lang{i:02d}" for i in range(1, 11))
    assert [" ".join(form.tokens) for form in daughters.forms] == [
        "r a l a", "r a l e", "r e l e", "r a k e", "r a l e",
        "r a l e", "j i l e", "r a l i", "w a l i", "r a l e",
    ]
    assert all(form.cogid == 1 for form in daughters.forms)


def test_mergers_apply_in_order():
    daughters = evolve(_proto("r a l e"), [[Merger("e", "a"), Merger("a", "o")]])
    assert daughters.forms[0].tokens == ("r", "o", "l", "o")


def test_evolve_names_and_numbers_daughters():
    proto = generate_proto(SimulationConfig(n_concepts=5))
    wl = evolve(proto, [[], [], []])
    assert wl.doculects == ("Lang01", "Lang02", "Lang03")
    assert [form.id for form in wl.forms] == list(range(1, 16))
    assert wl.forms[5].doculect == "Lang02"
    assert wl.forms[5].cogid == 1
    assert all(form.alignment == form.tokens for form in wl.forms)


def test_noise_count_and_classes():
    clean, _ = simulate_wordlist(SimulationConfig())
    noisy, truth = simulate_wordlist(SimulationConfig(), noise=0.1)
    assert len(truth.noise_positions) == 800
    assert _changed(clean, noisy) == set(truth.noise_positions)
    for form_id, index in truth.noise_positions:
        assert classify(noisy.form(form_id).tokens[index]) == classify(clean.form(form_id).tokens[index])


def test_noise_rate_extremes():
    clean, _ = simulate_wordlist(SimulationConfig(n_concepts=20, seed=3))
    same, positions = inject_noise(clean, 0.0, seed=1)
    assert same == clean
    assert positions == frozenset()
    noisy, positions = inject_noise(clean, 1.0, seed=1)
    assert len(positions) == 10 * 20 * 4
    assert len(_changed(clean, noisy)) == 10 * 20 * 4
    with pytest.raises(ConfigError):
        inject_noise(clean, 1.5, seed=1)


def test_replacements_change_every_segment():
    cfg = SimulationConfig(n_concepts=100, seed=8)
    clean, _ = simulate_wordlist(cfg)
    perturbed, truth = simulate_wordlist(cfg, fraction=0.2)
    assert len(truth.replaced) == 20
    changed_forms = {form_id for form_id, _ in _changed(clean, perturbed)}
    assert changed_forms == set(truth.replaced.values())
    for cogid, form_id in truth.replaced.items():
        before, after = clean.form(form_id), perturbed.form(form_id)
        assert after.cogid == cogid
        assert all(x != y for x, y in zip(before.tokens, after.tokens))
        assert [classify(t) for t in before.tokens] == [classify(t) for t in after.tokens]
        assert after.alignment == after.tokens


def test_replacements_resample_past_frozen_inventories():
    text = HEADER + (
        "1\tL1\ta\tk a\t1\n2\tL2\ta\tk a\t1\n3\tL3\ta\tt i\t1\n"
        "4\tL1\tb\tk a\t2\n5\tL2\tb\tt i\t2\n6\tL3\tb\tp u\t2\n"
        "7\tL1\tc\tk a\t3\n8\tL2\tc\tp u\t3\n9\tL3\tc\tk a\t3\n"
    )
    wl = parse_wordlist(text)
    for seed in range(20):
        _, replaced = inject_replacements(wl, 1.0, seed)
        assert all(wl.form(form_id).doculect != "L1" for form_id in replaced.values())


def test_replacements_need_three_members():
    wl = parse_wordlist(HEADER + "1\tL1\ta\tk a\t1\n2\tL2\ta\tt i\t1\n")
    assert inject_replacements(wl, 0.5, seed=0) == (wl, {})


def test_simulation_is_reproducible():
    cfg = SimulationConfig(n_concepts=40, seed=13)
    assert simulate_wordlist(cfg, noise=0.2, fraction=0.2) == simulate_wordlist(cfg, noise=0.2, fraction=0.2)
