import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from preorderlab import corpus
from preorderlab.frontend import parse_model, serialize_model
from preorderlab.polytope import OutcomePolytope
from preorderlab.preorders import (
    HOARE,
    KINDS,
    NONNEGATIVE,
    REAL,
    SMYTH,
    RewardTuple,
    canonical_reward,
    compare_polytopes,
    hoare_smyth_leq,
    preorder_on_suite,
    reward_extremum,
    separating_reward,
)
from preorderlab.resolution import apply_resolution_based

from oracles import grid_violations, random_polytope, related_polytope

F = Fraction
REWARD_KINDS = ("nrmay", "nrmust", "rrmay", "rrmust")


def poly(*pts, omega=("w",)):
    return OutcomePolytope.hull(omega, [tuple(F(x) for x in p) for p in pts])


def test_reward_tuple_ranges():
    RewardTuple(("w",), (F(-1),), REAL)
    with pytest.raises(ValueError):
        RewardTuple(("w",), (F(-1),), NONNEGATIVE)
    with pytest.raises(ValueError):
        RewardTuple(("w",), (F(2),), REAL)
    with pytest.raises(ValueError):
        RewardTuple(("w", "v"), (F(1),))


def test_reward_extremum_examples(models):
    h = (F(-1, 2), F(1))
    a_l = apply_resolution_based(models["tdiv"], models["divL"])
    a_c = apply_resolution_based(models["tdiv"], models["divC"])
    assert 4 * reward_extremum(h, a_l, "inf") == 0
    assert reward_extremum(h, a_c, "inf") == F(-1, 4)
    assert 4 * reward_extremum(h, a_c, "inf") == -1
    for p in (a_l, a_c):
        assert reward_extremum((0, 0), p, "inf") == reward_extremum((0, 0), p, "sup") == 0
    with pytest.raises(ValueError):
        reward_extremum(RewardTuple(("v", "w"), (F(0), F(0))), a_l, "inf")


def test_hoare_smyth_examples():
    a = poly((F(1, 2),), (1,))
    b = poly((1,))
    assert hoare_smyth_leq(a, b, HOARE)
    assert hoare_smyth_leq(a, b, SMYTH)
    v = hoare_smyth_leq(b, a, SMYTH)
    assert not v and v.counterexample.point == (F(1, 2),)
    for m in (HOARE, SMYTH):
        assert hoare_smyth_leq(a, a, m)


def _dominated_scipy(v, gens, up):
    """Float LP oracle: is v <= (up) or >= (not up) some convex combination of gens?"""
    import numpy as np
    from scipy.optimize import linprog

    g = np.array([[float(x) for x in p] for p in gens]).T
    sign = 1 if up else -1
    res = linprog(
        np.zeros(g.shape[1]),
        A_ub=-sign * g,
        b_ub=-sign * np.array([float(x) for x in v]),
        A_eq=np.ones((1, g.shape[1])),
        b_eq=[1.0],
        bounds=(0, None),
        method="highs",
    )
    return res.status == 0


def test_hoare_smyth_against_scipy():
    rng = random.Random(3)
    for _ in range(150):
        dim = rng.randint(1, 3)
        a, b = random_polytope(rng, dim), random_polytope(rng, dim)
        hoare = all(_dominated_scipy(v, b.vertices, True) for v in a.vertices)
        smyth = all(_dominated_scipy(v, a.vertices, False) for v in b.vertices)
        assert bool(hoare_smyth_leq(a, b, HOARE)) == hoare
        assert bool(hoare_smyth_leq(a, b, SMYTH)) == smyth


def test_preorder_examples(models, corpus_suite):
    l, c = models["divL"], models["divC"]
    v = preorder_on_suite("rrmust", l, c, [models["tdiv"]])
    assert not v
    h = v.counterexample.reward.values
    assert h[0] < 0 < h[1]
    assert v.counterexample.left > v.counterexample.right
    assert v.omega == ("w1", "w2")
    for kind in ("pmust", "pmay"):
        assert preorder_on_suite(kind, l, c, corpus_suite)
        assert preorder_on_suite(kind, c, l, corpus_suite)
    v = preorder_on_suite("rrmust", models["loop"], models["a"], [models["t1"]])
    assert not v
    assert v.counterexample.reward.values == (F(-1),)
    assert (v.counterexample.left, v.counterexample.right) == (0, -1)
    assert "h = [w:-1]" in v.counterexample.describe(v.omega)


def test_scaled_reward_replays(models):
    a_l = apply_resolution_based(models["tdiv"], models["divL"])
    a_c = apply_resolution_based(models["tdiv"], models["divC"])
    for scale in (F(1, 4), F(1, 8), F(1, 3)):
        h = (-2 * scale, 4 * scale)
        assert reward_extremum(h, a_l, "inf") > reward_extremum(h, a_c, "inf")


def test_unknown_kind_rejected(models):
    with pytest.raises(ValueError):
        preorder_on_suite("bogus", models["q1"], models["q2"], [models["t1"]])


def test_canonical_reward():
    assert canonical_reward((F(-2), F(4))) == (F(-1, 2), F(1))
    assert canonical_reward((F(0), F(0))) == (0, 0)


def test_separating_reward_directions():
    pts = [(F(0), F(0)), (F(1, 2), F(1, 2))]
    h = separating_reward((F(1, 2), F(0)), pts, REAL, "below")
    assert h is not None
    dots = [sum(a * b for a, b in zip(h, p)) for p in pts]
    assert sum(a * b for a, b in zip(h, (F(1, 2), F(0)))) < min(dots)
    assert separating_reward((F(1, 4), F(1, 4)), pts, REAL, "below") is None
    h = separating_reward((F(1), F(1)), pts, NONNEGATIVE, "above")
    assert h is not None and all(x >= 0 for x in h)


@given(st.integers(0, 10**6), st.integers(1, 3), st.sampled_from(REWARD_KINDS))
def test_grid_oracle_never_contradicts_holds(seed, dim, kind):
    rng = random.Random(seed)
    a = random_polytope(rng, dim)
    b = related_polytope(rng, a)
    v = compare_polytopes(kind, a, b)
    if v:
        assert grid_violations(kind, a, b) == 0
    else:
        ce = v.counterexample
        assert ce.left > ce.right
        which = "inf" if kind.endswith("must") else "sup"
        assert reward_extremum(ce.reward.values, a, which) == ce.left


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_scaling_invariance_and_real_implies_nonnegative(seed, dim):
    rng = random.Random(seed)
    a = random_polytope(rng, dim)
    b = related_polytope(rng, a)
    for kind in ("rrmust", "rrmay"):
        v = compare_polytopes(kind, a, b)
        if not v:
            h = v.counterexample.reward.values
            which = "inf" if kind.endswith("must") else "sup"
            for s in (F(1, 3), F(7, 2), F(100)):
                hs = tuple(s * x for x in h)
                assert reward_extremum(hs, a, which) > reward_extremum(hs, b, which)
    if compare_polytopes("rrmust", a, b):
        assert compare_polytopes("nrmust", a, b)
    if compare_polytopes("rrmay", a, b):
        assert compare_polytopes("nrmay", a, b)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_duality_on_polytopes(seed, dim):
    rng = random.Random(seed)
    a = random_polytope(rng, dim)
    b = related_polytope(rng, a)
    assert bool(compare_polytopes("rrmay", a, b)) == bool(compare_polytopes("rrmust", b, a))


def test_duality_on_corpus(corpus_suite, corpus_processes):
    for d in corpus_processes:
        for g in corpus_processes:
            may = preorder_on_suite("rrmay", d, g, corpus_suite, stop_at_first=False)
            must = preorder_on_suite("rrmust", g, d, corpus_suite, stop_at_first=False)
            assert may.per_test == must.per_test


def _with_unused_success(t):
    text = serialize_model(t)
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if line.startswith("success"):
            lines[i] = line + ", wzz"
    return parse_model("\n".join(lines) + "\n")


def test_unused_success_labels_do_not_change_verdicts(corpus_suite, corpus_processes):
    widened = [_with_unused_success(t) for t in corpus_suite]
    assert all("wzz" in t.omega for t in widened)
    for kind in KINDS:
        for d in corpus_processes[:4]:
            for g in corpus_processes[:4]:
                a = preorder_on_suite(kind, d, g, corpus_suite, stop_at_first=False)
                b = preorder_on_suite(kind, d, g, widened, stop_at_first=False)
                assert a.per_test == b.per_test
