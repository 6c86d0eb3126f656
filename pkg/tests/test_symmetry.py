"""Symmetry-catalog verification: determining residuals (split and unsplit),
negative controls, group transformations vs RK flows, commutators, derived series."""

import math

import numpy as np
import pytest

from plaplab import symmetry as sym
from plaplab.errors import FoldError, TransformationDomainError
from plaplab.model import (Arbitrary, Constant, Inverse, Linear, ProblemSpec,
                           Power, RadialPower, ShiftedPower, classify)
from plaplab.symmetry import (ALL_TAGS, LieAlgebra, apply_group, bracket, catalog,
                              derived_series, determining_residual,
                              determining_residual_scaled, expected_brackets,
                              integrate_group, invariance_residual_scaled,
                              invariance_residual_unsplit, make_generator,
                              negative_control, random_jet, random_problem_for)

RNG = lambda seed: np.random.default_rng(seed)


def _gen_for(tag, problem):
    for g in catalog(problem):
        if g.tag == tag:
            return g
    raise AssertionError(f"{tag} not in catalog of {classify(problem).name}")


# ------------------------------------------------------------------- residuals

def test_x1_residual_identically_zero():
    rng = RNG(0)
    problem = random_problem_for("X1", rng)
    gen = _gen_for("X1", problem)
    for _ in range(10):
        jet = random_jet(problem, rng)
        assert np.max(np.abs(determining_residual(gen, problem, jet))) == 0.0


def test_x4_residual_small_and_wrong_source_large():
    rng = RNG(1)
    problem = random_problem_for("X4", rng)
    gen = _gen_for("X4", problem)
    jet = (1.0, 2.0, 0.5, 0.3)
    assert np.max(np.abs(determining_residual(gen, problem, jet))) <= 1e-10
    wrong = ProblemSpec(problem.diffusivity, Power(1.0, 0.0, 2.0), problem.m)
    res = determining_residual_scaled(gen, wrong, jet)
    assert np.max(np.abs(res)) > 0.1


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_split_residuals_all_tags(tag):
    rng = RNG(hash(tag) % 2 ** 31)
    for draw in range(5):
        problem = random_problem_for(tag, rng)
        gen = _gen_for(tag, problem)
        for _ in range(100):
            jet = random_jet(problem, rng)
            res = determining_residual_scaled(gen, problem, jet)
            assert np.max(np.abs(res)) <= 1e-10, (tag, draw, jet, res)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_unsplit_residuals_all_tags(tag):
    rng = RNG((hash(tag) + 77) % 2 ** 31)
    for draw in range(5):
        problem = random_problem_for(tag, rng)
        gen = _gen_for(tag, problem)
        for _ in range(100):
            jet = random_jet(problem, rng, extended=True)
            res = invariance_residual_scaled(gen, problem, jet)
            assert abs(res) <= 1e-9, (tag, draw, jet, res)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_negative_controls_exceed_threshold(tag):
    rng = RNG((hash(tag) + 123) % 2 ** 31)
    problem = random_problem_for(tag, rng)
    gen = negative_control(_gen_for(tag, problem))
    worst_split = 0.0
    worst_unsplit = 0.0
    for _ in range(40):
        jet = random_jet(problem, rng, extended=True)
        worst_split = max(worst_split,
                          np.max(np.abs(determining_residual_scaled(gen, problem, jet[:4]))))
        worst_unsplit = max(worst_unsplit,
                            abs(invariance_residual_scaled(gen, problem, jet)))
    assert worst_split > 1e-4
    assert worst_unsplit > 1e-4


def test_split_and_unsplit_agree_on_x7_example():
    # h = -u_r^3, f = (a+u)^2 with a=0: X7 with p=3, q=2
    problem = ProblemSpec(RadialPower(1.0, 3.0), Power(1.0, 0.0, 2.0), m=1.3)
    gen = _gen_for("X7", problem)
    rng = RNG(5)
    for _ in range(20):
        jet = random_jet(problem, rng, extended=True)
        assert abs(invariance_residual_unsplit(gen, problem, jet)) <= 1e-9 * 100


# ------------------------------------------------------------------- transformations

def test_apply_group_x4_example():
    gen = make_generator("X4", a=0.0)
    out = apply_group(gen, math.log(2.0), (1.0, 1.0, 1.0))
    assert out == pytest.approx((4.0, 2.0, 2.0), rel=1e-12)


def test_apply_group_x16_example():
    gen = make_generator("X16", alpha=0.0, beta=1.0)
    out = apply_group(gen, 0.1, (0.0, 2.0, 0.0))
    assert out == pytest.approx((0.0, 2.5, 0.0), abs=1e-14)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_identity_at_zero(tag):
    rng = RNG((hash(tag) + 9) % 2 ** 31)
    problem = random_problem_for(tag, rng)
    gen = _gen_for(tag, problem)
    pt = (0.7, 1.4, 0.6)
    assert apply_group(gen, 0.0, pt) == pytest.approx(pt, abs=1e-14)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_transform_matches_rk_flow(tag):
    rng = RNG((hash(tag) + 31) % 2 ** 31)
    problem = random_problem_for(tag, rng)
    gen = _gen_for(tag, problem)
    pt = (0.6, 1.2, 0.5)
    for eps in (-0.9, -0.3, 0.25, 1.0):
        try:
            closed = apply_group(gen, eps, pt)
        except TransformationDomainError:
            continue
        flow = integrate_group(gen, eps, pt, nsteps=1200)
        assert np.max(np.abs(np.array(closed) - np.array(flow))) <= 1e-6


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_group_law(tag):
    rng = RNG((hash(tag) + 41) % 2 ** 31)
    problem = random_problem_for(tag, rng)
    gen = _gen_for(tag, problem)
    pt = (0.8, 1.1, 0.4)
    for e1, e2 in ((0.1, 0.07), (-0.12, 0.2), (0.05, -0.11)):
        try:
            lhs = apply_group(gen, e1 + e2, pt)
            rhs = apply_group(gen, e1, apply_group(gen, e2, pt))
        except TransformationDomainError:
            continue
        assert np.max(np.abs(np.array(lhs) - np.array(rhs))) <= 1e-10


def test_transformation_domain_error():
    gen = make_generator("X16", alpha=0.3, beta=1.0)
    with pytest.raises(TransformationDomainError):
        apply_group(gen, 0.9, (0.5, 2.0, 0.1))   # 1 - eps*r < 0


# ------------------------------------------------------------------- commutators

def _bracket_check(problem, tol_coeff=1e-8, tol_fit=1e-8):
    gens = catalog(problem)
    index = {g.tag: i for i, g in enumerate(gens)}
    rng = RNG(17)
    samples = None
    for tagA, tagB, coeffs, note in expected_brackets(problem):
        coeff, fit = bracket(gens[index[tagA]], gens[index[tagB]], gens, rng=RNG(19))
        want = np.zeros(len(gens))
        for tag, c in coeffs.items():
            want[index[tag]] = c
        assert fit <= tol_fit, (tagA, tagB, fit)
        assert np.max(np.abs(coeff - want)) <= tol_coeff, (tagA, tagB, coeff, want)


@pytest.mark.parametrize("row_tag", ["X3", "X4", "X6", "X7", "X8", "X9", "X5", "X10",
                                     "X11", "X12", "X14", "X15", "X22", "X6a", "X18",
                                     "X23", "X19", "X20", "X21", "X16"])
def test_every_displayed_bracket(row_tag):
    seeds = {"X6a": 202}
    rng = RNG(seeds.get(row_tag, (hash(row_tag) + 3) % 2 ** 31))
    tag = "X6" if row_tag == "X6a" else row_tag
    problem = random_problem_for(tag, rng)
    if row_tag == "X6a":  # the linear-source power row (4dim_3) reuses X6/X7 bindings
        problem = ProblemSpec(RadialPower(1.1, 2.3), Linear(0.4, 0.9), 1.2)
    assert expected_brackets(problem), "row must carry displayed brackets"
    _bracket_check(problem)


def test_bracket_x1_x4_is_2x1():
    problem = random_problem_for("X4", RNG(2))
    gens = catalog(problem)
    idx = {g.tag: i for i, g in enumerate(gens)}
    coeff, fit = bracket(gens[idx["X1"]], gens[idx["X4"]], gens)
    want = np.zeros(len(gens))
    want[idx["X1"]] = 2.0
    assert fit <= 1e-9 and np.max(np.abs(coeff - want)) <= 1e-9


def test_bracket_x12_x13_parameter_coefficient():
    problem = random_problem_for("X12", RNG(3))
    gens = catalog(problem)
    idx = {g.tag: i for i, g in enumerate(gens)}
    b = problem.source.b
    coeff, fit = bracket(gens[idx["X12"]], gens[idx["X13"]], gens)
    want = np.zeros(len(gens))
    want[idx["X1"]] = 0.5 / b
    assert fit <= 1e-8
    assert np.max(np.abs(coeff - want)) <= 1e-8


def test_structure_constants_antisymmetry_and_jacobi():
    problem = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.4 * v ** 2,
                                    fn_p=lambda v: 3 * v ** 2 + 0.8 * v),
                          Constant(0.7), m=0.0)
    gens = catalog(problem)
    c, worst = sym.structure_constants(gens)
    assert worst <= 1e-8
    K = len(gens)
    assert np.max(np.abs(c + np.swapaxes(c, 0, 1))) <= 1e-10
    jac = np.einsum("ijm,mkl->ijkl", c, c) + np.einsum("jkm,mil->ijkl", c, c) \
        + np.einsum("kim,mjl->ijkl", c, c)
    assert np.max(np.abs(jac)) <= 1e-8


# ------------------------------------------------------------------- derived series

def test_derived_series_3dim_solvable():
    problem = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.4 * v ** 2,
                                    fn_p=lambda v: 3 * v ** 2 + 0.8 * v),
                          Constant(0.7), m=1.5)
    gens = [g for g in catalog(problem) if g.tag in ("X1", "X3", "X5")]
    series, solvable = derived_series(LieAlgebra(tuple(gens)))
    dims = [s.shape[0] for s in series]
    assert dims == [3, 2, 0]
    assert solvable
    # g^(1) is spanned by X1 and X3 (coefficient vectors supported on those slots)
    g1 = series[1]
    tags = [g.tag for g in gens]
    x5_col = tags.index("X5")
    assert np.max(np.abs(g1[:, x5_col])) <= 1e-8


def test_derived_series_4dim_case_b():
    problem = ProblemSpec(RadialPower(1.2, 1.0 + 2.0 / 3.0), Linear(0.5, 0.8), m=2.0)
    gens = catalog(problem)   # X1, X3, X6, X7 bindings
    assert sorted(g.tag for g in gens) == ["X1", "X3", "X6", "X7"]
    series, solvable = derived_series(LieAlgebra(tuple(gens)))
    dims = [s.shape[0] for s in series]
    assert dims == [4, 2, 0]
    assert solvable
    # g^(1) = span(X3, X6)
    tags = [g.tag for g in gens]
    g1 = series[1]
    for other in ("X1", "X7"):
        assert np.max(np.abs(g1[:, tags.index(other)])) <= 1e-8


def test_derived_series_abelian_pair():
    gens = (make_generator("X1"), make_generator("X2"))
    series, solvable = derived_series(LieAlgebra(gens))
    assert [s.shape[0] for s in series] == [2, 0]
    assert solvable


# ------------------------------------------------------------------- catalog contracts

def test_catalog_examples():
    arb = Arbitrary(lambda v: v ** 3 + 0.2 * v ** 2)
    tags = [g.tag for g in catalog(ProblemSpec(arb, Inverse(1.0, 0.5), m=2.0))]
    assert tags == ["X1", "X4"]
    tags = [g.tag for g in catalog(ProblemSpec(arb, Constant(0.9), m=0.0))]
    assert set(tags) == {"X1", "X2", "X3", "X5"}
    from plaplab.model import ExpLinear
    tags = [g.tag for g in catalog(ProblemSpec(ExpLinear(1.0, 1.1), Constant(0.9), m=2.0))]
    assert set(tags) == {"X1", "X3", "X5", "X22"}


def test_catalog_hodograph_restricted():
    problem = ProblemSpec(RadialPower(1.0, -1.0), Power(1.0, 0.2, 1.5), m=1.0)
    tags = [g.tag for g in catalog(problem)]
    assert tags == ["X1"]


def test_x3_on_constant_source_is_plain_shift():
    problem = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Constant(0.5), m=1.0)
    g = _gen_for("X3", problem)
    assert g.params["k"] == 0.0
    out = apply_group(g, 0.3, (1.0, 2.0, 0.4))
    assert out == pytest.approx((1.0, 2.0, 0.7), abs=1e-14)
