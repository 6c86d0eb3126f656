"""Conservation-law verification: Table-1 multiplier rows, (T, X) characteristic
residuals (incl. the m = -1 log branch and the incomplete-gamma flux), phi modes,
discrete conserved quantities and the continuity monitor."""

import math

import numpy as np
import pytest

from plaplab import conservation as cons
from plaplab.conservation import (PHI_MODE_RATES, catalog, characteristic_residual,
                                  characteristic_residual_scaled, conserved_quantity,
                                  continuity_check, multiplier_residual,
                                  multiplier_residual_scaled, phi_instance, s_quantity,
                                  table_multipliers)
from plaplab import numerics as nm
from plaplab.errors import EvaluationDomainError
from plaplab.model import (Arbitrary, Constant, ConstPlusExponential, Exponential,
                           Linear, Power, ProblemSpec, RadialPower, ShiftedPower)
from plaplab.solver import Field, Grid, Trajectory

RNG = lambda s: np.random.default_rng(s)


def _jets(problem, rng, count=100):
    lo, hi = problem.working_branch
    vlo, vhi = max(lo, 0.2), min(hi, 2.0)
    for _ in range(count):
        yield (rng.uniform(0.1, 2.0), rng.uniform(0.5, 3.0),
               rng.uniform(0.1, 1.0), rng.uniform(vlo, vhi))


def _table_problems():
    """One admissible problem per Table-1 row family."""
    arb = Arbitrary(lambda v: v ** 3 + 0.3 * v ** 2)
    return {
        "row1_linear": ProblemSpec(arb, Linear(0.4, 0.9), m=1.7),
        "row1_const": ProblemSpec(arb, Constant(0.8), m=-0.4),
        "row2": ProblemSpec(ShiftedPower(1.2, 0.7, 0.0, -1.0),
                            ConstPlusExponential(0.3, 0.8, 1.1), m=1.2),
        "row2_a0": ProblemSpec(ShiftedPower(1.2, 0.7, 0.0, -1.0),
                               Exponential(0.8, 1.1), m=0.6),
        "row3": ProblemSpec(RadialPower(0.9, -1.0), Constant(0.5), m=2.0),
        "row4": ProblemSpec(ShiftedPower(1.1, 0.6, 0.0, -1.0), Constant(0.5), m=1.3),
    }


def test_multiplier_rows_all_satisfy_system():
    for name, problem in _table_problems().items():
        rows = table_multipliers(problem)
        assert rows, name
        rng = RNG(abs(hash(name)) % 2 ** 31)
        for row_name, Q in rows:
            for jet in _jets(problem, rng, 100):
                res = multiplier_residual_scaled(Q, problem, jet)
                assert np.max(np.abs(res)) <= 1e-10, (name, row_name, jet, res)


def test_multiplier_negative_control():
    arb = Arbitrary(lambda v: v ** 3 + 0.3 * v ** 2)
    problem = ProblemSpec(arb, Power(1.0, 0.2, 2.0), m=1.7)  # f = k(a+u)^2, not linear
    m = problem.m
    Q = lambda t, r, u, v: r ** m * nm.exp(-0.9 * t)
    worst = max(np.max(np.abs(multiplier_residual_scaled(Q, problem, jet)))
                for jet in _jets(problem, RNG(3), 50))
    assert worst > 1e-3


def test_multiplier_q_ur_dependence_detected():
    problem = _table_problems()["row1_linear"]
    Q = lambda t, r, u, v: r ** problem.m * nm.exp(-0.9 * t) * (1.0 + 0.05 * v)
    res = multiplier_residual(Q, problem, (0.7, 1.2, 0.5, 0.8))
    assert abs(res[0]) > 1e-3


def _law_problem_pairs():
    pairs = []
    for name, problem in _table_problems().items():
        for law in catalog(problem):
            pairs.append((name, law, problem))
    # the radial spellings
    rad1 = ProblemSpec(RadialPower(-1.0, 3.0), Linear(0.0, 0.7), m=2.0, radial=True)
    for law in catalog(rad1):
        pairs.append(("radial_cl1", law, rad1))
    rad2 = ProblemSpec(RadialPower(0.9, -1.0), Constant(0.5), m=2.0, radial=True)
    for law in catalog(rad2):
        pairs.append(("radial_cl2", law, rad2))
    # m = -1 branch of CL1
    neg = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.3 * v ** 2), Linear(0.4, 0.9), m=-1.0)
    for law in catalog(neg):
        pairs.append(("cl1_log_branch", law, neg))
    return pairs


def test_characteristic_residuals_catalog():
    for name, law, problem in _law_problem_pairs():
        rng = RNG(abs(hash(name + law.tag)) % 2 ** 31)
        for jet in _jets(problem, rng, 100):
            res = characteristic_residual_scaled(law, problem, jet)
            assert np.max(np.abs(res)) <= 1e-9, (name, law.tag, jet, res)


def test_q_is_du_of_T():
    from plaplab.numerics import HyperDual
    for name, law, problem in _law_problem_pairs():
        rng = RNG(abs(hash(name)) % 2 ** 31)
        for jet in _jets(problem, rng, 100):
            t, r, u, v = jet
            out = law.T(HyperDual(t), HyperDual(r), HyperDual(u, 1.0))
            qv = law.Q(t, r, u, v)
            qv = qv.re if isinstance(qv, HyperDual) else float(qv)
            assert abs(out.e1 - qv) <= 1e-12 * (1.0 + abs(qv))


def test_characteristic_example_cl1():
    problem = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.3 * v ** 2),
                          Linear(0.0, 1.0), m=2.0)
    law = catalog(problem)[0]
    res = characteristic_residual(law, problem, (0.5, 1.5, 0.7, 0.2))
    assert np.max(np.abs(res)) <= 1e-10


def test_characteristic_cl3_gamma_flux():
    problem = ProblemSpec(ShiftedPower(1.0, 1.0, 0.0, -1.0),
                          Exponential(1.0, 1.0), m=1.0)
    laws = [l for l in catalog(problem) if l.tag == "CL3"]
    assert len(laws) == 1
    res = characteristic_residual_scaled(laws[0], problem, (0.5, 1.5, 0.7, 0.2))
    assert np.max(np.abs(res)) <= 1e-9


def test_characteristic_negative_control():
    # CL1 multiplier paired with a quadratic source: residual must be large
    problem_ok = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.3 * v ** 2),
                             Linear(0.4, 0.9), m=1.7)
    law = catalog(problem_ok)[0]
    problem_bad = ProblemSpec(problem_ok.diffusivity, Power(0.9, 0.4, 2.0), m=1.7)
    worst = max(np.max(np.abs(characteristic_residual_scaled(law, problem_bad, jet)))
                for jet in _jets(problem_bad, RNG(4), 50))
    assert worst > 1e-3


def test_phi_instance_modes():
    src = Constant(2.0)
    phi = phi_instance(src, kappa=1.0, rate=1.0)
    # omega = -(kappa rate^2 + a rate) = -3
    assert phi(1.0, 0.0) == pytest.approx(math.exp(-3.0), rel=1e-14)
    assert phi.pde_residual(0.7, 0.4) == pytest.approx(0.0, abs=1e-14)
    flat = phi_instance(src, kappa=1.0, rate=0.0)
    assert flat(3.0, 2.0) == 1.0
    with pytest.raises(EvaluationDomainError):
        phi_instance(Linear(0.1, 1.0), kappa=1.0, rate=1.0)


def test_phi_pointwise_residual_all_modes():
    src = Constant(0.5)
    for rate in PHI_MODE_RATES:
        phi = phi_instance(src, kappa=1.3, rate=rate)
        for t, z in [(0.1, -1.0), (0.9, 0.3), (1.7, 2.0)]:
            assert abs(phi.pde_residual(t, z)) <= 1e-10


# ------------------------------------------------------------------ discrete quantities

def _field_on(grid, fn, t=0.0):
    return Field(t, np.array([fn(r) for r in grid.points()]))


def test_conserved_quantity_examples():
    # m=0, k=0: T = u; u == 1 on [0, 1] -> 1
    p0 = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Constant(1.0), m=0.0)
    law0 = catalog(p0)[0]
    grid = Grid(0.0, 1.0, 101)
    assert conserved_quantity(law0, grid, _field_on(grid, lambda r: 1.0)) == pytest.approx(1.0, abs=1e-12)
    # m=2, k=0: T = r^2 u; u = r on [0,1] -> 1/4
    p2 = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Constant(1.0), m=2.0)
    law2 = catalog(p2)[0]
    assert conserved_quantity(law2, grid, _field_on(grid, lambda r: r)) == pytest.approx(0.25, abs=1e-8)
    # zero field with the linear-source law
    pl = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Linear(0.2, 1.0), m=1.0)
    lawl = catalog(pl)[0]
    assert conserved_quantity(lawl, grid, _field_on(grid, lambda r: 0.0)) == 0.0


def test_conserved_quantity_simpson_order():
    p2 = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Constant(1.0), m=0.0)
    law = catalog(p2)[0]
    exact = math.sin(1.0) - math.sin(0.25)
    errs = []
    for n in (33, 65, 129):
        grid = Grid(0.25, 1.0, n)
        got = conserved_quantity(law, grid, _field_on(grid, math.cos))
        errs.append(abs(got - exact))
    order1 = math.log2(errs[0] / errs[1])
    order2 = math.log2(errs[1] / errs[2])
    assert order1 > 3.5 and order2 > 3.5


def test_conserved_quantity_needs_three_points():
    p = ProblemSpec(Arbitrary(lambda v: v ** 3 + 0.1 * v ** 2), Constant(1.0), m=0.0)
    law = catalog(p)[0]
    with pytest.raises(Exception):
        conserved_quantity(law, Grid(0.0, 1.0, 3), Field(0.0, np.zeros(2)))


def test_continuity_check_stationary_equilibrium():
    # u = -b/k with b = 0: density and flux both vanish identically
    problem = ProblemSpec(RadialPower(-1.0, 3.0), Linear(0.0, -1.2), m=2.0)
    law = catalog(problem)[0]
    grid = Grid(0.5, 2.0, 41)
    times = [0.0, 0.1, 0.2, 0.3]
    slices = [Field(t, np.zeros(41)) for t in times]
    traj = Trajectory(grid, times, slices)
    report = continuity_check(law, traj)
    assert report["max_defect"] <= 1e-12


def test_continuity_defect_is_time_discretization_for_nonzero_b():
    # constant-in-space equilibrium with b != 0: C and X both carry e^{-kt}, so the
    # centered-difference defect is O(dt^2) and halves by 4 under dt -> dt/2
    problem = ProblemSpec(RadialPower(-1.0, 3.0), Linear(0.6, -1.2), m=2.0)
    law = catalog(problem)[0]
    grid = Grid(0.5, 2.0, 41)
    defects = []
    for nsteps in (4, 8):
        dt = 0.4 / nsteps
        times = [i * dt for i in range(nsteps + 1)]
        slices = [Field(t, np.full(41, 0.5)) for t in times]
        defects.append(continuity_check(law, Trajectory(grid, times, slices))["max_defect"])
    assert defects[0] / defects[1] == pytest.approx(4.0, rel=0.1)


def test_s_quantity_example():
    grid = Grid(0.0, 10.0, 801)
    field = Field(0.0, np.zeros(801))
    val, decayed = s_quantity(grid, field, p=1.0, kappa=1.0, alpha=1.0, m=0.0)
    assert val == pytest.approx(1.0 - math.exp(-10.0), abs=1e-8)
    assert decayed


def test_s_quantity_decay_flag():
    grid = Grid(0.0, 1.0, 101)
    field = Field(0.0, np.zeros(101))
    _, decayed = s_quantity(grid, field, p=1.0, kappa=1.0, alpha=1.0, m=0.0)
    assert not decayed
