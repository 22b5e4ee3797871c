import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_rates, random_decision_rows

from padbench.errors import DomainError
from padbench.metrics import (
    Decision,
    GroundTruth,
    apcer,
    bpcer,
    classify,
    hter,
    metrics_report,
)


def att(i, score, pais="A", tau=0.5):
    return Decision(f"a{i}", score, GroundTruth.ATTACK, pais, tau)


def bf(i, score, tau=0.5):
    return Decision(f"b{i}", score, GroundTruth.BONA_FIDE, None, tau)


def to_decisions(rows, tau=0.5):
    return [Decision(f"s{i}", s, gt, p, tau) for i, (gt, p, s) in enumerate(rows)]


@pytest.mark.parametrize("score,expected", [(0.5, 1), (0.0, 0), (0.7301, 1), (0.4999, 0), (1.0, 1)])
def test_classify(score, expected):
    assert classify(score, 0.5) == expected


@pytest.mark.parametrize("score", [-0.01, 1.01, math.nan, math.inf])
def test_classify_rejects_bad_score(score):
    with pytest.raises(DomainError):
        classify(score)


@pytest.mark.parametrize("tau", [0.0, 1.0, -1, math.nan])
def test_classify_rejects_bad_tau(tau):
    with pytest.raises(DomainError):
        classify(0.5, tau)


def test_apcer_examples():
    assert apcer([att(i, 1.0) for i in range(10)]) == 0.0
    assert apcer([att(i, 0.1 if i < 3 else 0.9) for i in range(10)]) == 0.3
    assert apcer([att(0, 0.0)]) == 1.0


def test_apcer_errors():
    with pytest.raises(DomainError):
        apcer([])
    with pytest.raises(DomainError):
        apcer([att(0, 0.1, "A"), att(1, 0.1, "B")])
    with pytest.raises(DomainError):
        apcer([att(0, 0.1), bf(1, 0.1)])


def test_bpcer_examples():
    assert bpcer([bf(i, 0.0) for i in range(20)]) == 0.0
    assert bpcer([bf(i, 0.9 if i == 0 else 0.1) for i in range(20)]) == 0.05
    assert bpcer([bf(0, 1.0)]) == 1.0


def test_bpcer_errors():
    with pytest.raises(DomainError):
        bpcer([])
    with pytest.raises(DomainError):
        bpcer([bf(0, 0.1), att(1, 0.1)])


def test_hter_examples():
    assert hter(0.0, 0.0) == 0.0
    assert hter(0.2326, 0.0) == pytest.approx(0.1163, abs=1e-12)
    assert hter(0.3, 0.1) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(DomainError):
        hter(1.2, 0.0)


def test_decision_validates_pais():
    with pytest.raises(DomainError):
        Decision("x", 0.5, "attack", None)
    with pytest.raises(DomainError):
        Decision("x", 0.5, "bona_fide", "Dell-GA7")


def test_metrics_report_two_groups():
    ds = [att(i, 0.9, "A") for i in range(10)]
    ds += [att(10 + i, 0.1 if i < 5 else 0.9, "B") for i in range(10)]
    ds += [bf(i, 0.1) for i in range(10)]
    r = metrics_report(ds, 0.5)
    assert r.bpcer == 0.0
    assert r.per_pais["A"].apcer == 0.0 and r.per_pais["A"].hter == 0.0
    assert r.per_pais["B"].apcer == 0.5 and r.per_pais["B"].hter == 0.25
    assert r.apcer_max == 0.5
    assert r.n_bf == 10 and r.per_pais["B"].n_pais == 10


def test_metrics_report_perfect_separation():
    ds = [att(i, 1.0, p) for i, p in enumerate("ABC")] + [bf(i, 0.0) for i in range(3)]
    r = metrics_report(ds)
    assert r.bpcer == 0.0 and r.apcer_max == 0.0
    assert all(m.hter == 0.0 for m in r.per_pais.values())


def test_metrics_report_needs_both_classes():
    with pytest.raises(DomainError, match="BPCER undefined"):
        metrics_report([att(0, 0.9)])
    with pytest.raises(DomainError):
        metrics_report([bf(0, 0.1)])


def test_metrics_report_recomputes_res_at_tau():
    ds = [att(0, 0.6, tau=0.5), bf(0, 0.4, tau=0.5)]
    r = metrics_report(ds, 0.7)
    assert r.tau == 0.7 and r.per_pais["A"].apcer == 1.0 and r.bpcer == 0.0


def test_published_hter_consistency():
    # per-PAIS APCER errors (%) of the PADNet-1 table with bpcer 0
    errors = [23.26, 17.68, 0.61, 0.17, 5.52, 1.80, 2.43]
    expected = [11.63, 8.84, 0.305, 0.085, 2.76, 0.90, 1.215]
    for e, h in zip(errors, expected):
        assert 100 * hter(e / 100, 0.0) == pytest.approx(h, abs=1e-9)


def test_random_sets_match_brute_force():
    rng = random.Random(1234)
    for _ in range(200):
        rows = random_decision_rows(rng)
        tau = rng.choice([0.25, 0.5, 0.75, rng.uniform(0.01, 0.99)])
        r = metrics_report(to_decisions(rows, tau), tau)
        want_bpcer, want_apcer = brute_force_rates(rows, tau)
        assert r.bpcer == want_bpcer
        assert {p: m.apcer for p, m in r.per_pais.items()} == want_apcer


scores = st.floats(0.0, 1.0, allow_nan=False)
rows_strategy = st.lists(
    st.tuples(st.sampled_from(["bona_fide", "attack"]), st.sampled_from(["A", "B", "C"]), scores),
    min_size=2,
    max_size=60,
).filter(lambda rows: {r[0] for r in rows} == {"bona_fide", "attack"})


def _normalise(rows):
    return [(gt, p if gt == "attack" else None, s) for gt, p, s in rows]


@settings(max_examples=100, deadline=None)
@given(rows_strategy, st.randoms(use_true_random=False))
def test_report_permutation_invariant(rows, rnd):
    rows = _normalise(rows)
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert metrics_report(to_decisions(rows)) == metrics_report(to_decisions(shuffled))


@settings(max_examples=100, deadline=None)
@given(rows_strategy)
def test_hter_is_mean_and_max_is_max(rows):
    r = metrics_report(to_decisions(_normalise(rows)))
    for m in r.per_pais.values():
        assert m.hter == (m.apcer + r.bpcer) / 2
    assert r.apcer_max == max(m.apcer for m in r.per_pais.values())


@given(scores, scores)
def test_hter_symmetric_and_bounded(a, b):
    assert hter(a, b) == hter(b, a)
    assert 0.0 <= hter(a, b) <= max(a, b)


@settings(max_examples=100, deadline=None)
@given(rows_strategy, st.floats(0.01, 0.98), st.floats(0.0, 0.5))
def test_raising_tau_is_monotone(rows, lo, delta):
    rows = _normalise(rows)
    hi = min(lo + delta, 0.99)
    r_lo, r_hi = metrics_report(to_decisions(rows), lo), metrics_report(to_decisions(rows), hi)
    assert r_hi.bpcer <= r_lo.bpcer
    for p in r_lo.per_pais:
        assert r_hi.per_pais[p].apcer >= r_lo.per_pais[p].apcer


def test_to_dict_shape():
    r = metrics_report([att(0, 0.9), bf(0, 0.1)])
    d = r.to_dict()
    assert d["bpcer"] == 0.0 and d["per_pais"]["A"]["n_pais"] == 1 and d["apcer_max"] == 0.0
