"""Family evaluation, PDE right-hand side, and classification tests."""

import math

import numpy as np
import pytest

from plaplab import model as md
from plaplab.errors import EvaluationDomainError, SingularAxisError
from plaplab.model import (Arbitrary, Constant, ConstantPlusInverse, ExpArctan,
                           ExpLinear, ExpReciprocal, Exponential, Inverse, Linear,
                           Log, Power, PowerPlusLinear, ProblemSpec, QuadraticShifted,
                           Ratio, RadialPower, ShiftedPower, classify, eval_g, eval_h,
                           pde_rhs, problem_from_dict, problem_to_dict)


def test_eval_h_shifted_power_cubic():
    spec = ShiftedPower(kappa=1.0, alpha=0.0, beta=0.0, p=3.0)
    assert eval_h(spec, 2.0, 0) == pytest.approx(-8.0)
    assert eval_h(spec, 2.0, 1) == pytest.approx(-12.0)
    assert eval_h(spec, 2.0, 2) == pytest.approx(-12.0)


def test_eval_h_log_derivative():
    assert eval_h(Log(kappa=2.0, alpha=1.0), 0.0, 1) == pytest.approx(2.0)


def test_eval_g_examples():
    assert eval_g(RadialPower(kappa=1.0, p=3.0), 2.0) == pytest.approx(-4.0)
    assert eval_g(ShiftedPower(1.0, 0.0, 0.0, 2.0), 3.0) == pytest.approx(-3.0)
    assert eval_g(Log(1.0, 1.0), 1.0) == pytest.approx(math.log(2.0))


def test_eval_g_zero_removable_and_not():
    assert eval_g(RadialPower(kappa=2.0, p=3.0), 0.0) == 0.0
    with pytest.raises(EvaluationDomainError):
        eval_g(ExpLinear(kappa=1.0, p=1.0), 0.0)          # h(0) = kappa != 0
    with pytest.raises(EvaluationDomainError):
        eval_g(RadialPower(kappa=1.0, p=0.5), 0.0)        # h'(0) infinite


def test_all_families_first_derivative_matches_fd():
    rng = np.random.default_rng(42)
    specs = [
        ShiftedPower(1.3, 0.4, 0.2, 2.5), Ratio(0.8, 1.2, 0.3, 1.7),
        ExpArctan(1.1, 0.5, 0.9, 1.3), ExpReciprocal(0.7, 1.4, 0.6),
        ExpLinear(1.2, 0.8), Log(0.9, 1.1), RadialPower(1.5, 3.0),
        Arbitrary(lambda v: v ** 3 + 0.5 * v),
    ]
    for spec in specs:
        lo, hi = spec.default_branch()
        lo = max(lo, 0.05)
        hi = min(hi, 3.0)
        for v in rng.uniform(lo + 0.1, hi, size=100):
            d_ad = eval_h(spec, v, 1)
            step = 1e-5
            d_fd = (eval_h(spec, v + step, 0) - eval_h(spec, v - step, 0)) / (2 * step)
            assert abs(d_ad - d_fd) <= 1e-6 * max(1.0, abs(d_fd))


def test_h_arr_consistent_with_hyperdual_route():
    specs = [
        ShiftedPower(1.3, 0.4, 0.2, 2.5), Ratio(0.8, 1.2, 0.3, 1.7),
        ExpArctan(1.1, 0.5, 0.9, 1.3), ExpReciprocal(0.7, 1.4, 0.6),
        ExpLinear(1.2, 0.8), Log(0.9, 1.1), RadialPower(1.5, 3.0),
    ]
    v = np.linspace(0.3, 2.0, 9)
    for spec in specs:
        for order in (0, 1, 2):
            arr = spec.h_arr(v, order)
            pointwise = [eval_h(spec, float(x), order) for x in v]
            np.testing.assert_allclose(arr, pointwise, rtol=1e-12, atol=1e-12)


def test_radial_power_odd_symmetry():
    spec = RadialPower(kappa=1.2, p=3.0)   # p = 1 + 2*1/1, valid radial exponent
    for v in (0.3, 1.1, 2.4):
        assert eval_h(spec, -v) == pytest.approx(-eval_h(spec, v), rel=1e-14)
        assert eval_g(spec, v) == pytest.approx(eval_g(spec, -v), rel=1e-14)


def test_radial_exponent_rule():
    assert RadialPower(1.0, 3.0).radial_exponent_valid()          # l=1, d=1
    assert RadialPower(1.0, 1.0 + 2.0 / 3.0).radial_exponent_valid()   # l=1, d=3
    assert RadialPower(1.0, 1.0 / 3.0).radial_exponent_valid()    # l=-1, d=3
    assert not RadialPower(1.0, 2.0).radial_exponent_valid()      # d would be even
    with pytest.raises(ValueError):
        ProblemSpec(RadialPower(1.0, 2.0), Constant(1.0), m=2.0, radial=True)


def test_pde_rhs_example():
    problem = ProblemSpec(ShiftedPower(1.0, 0.0, 0.0, 2.0), Constant(0.7), m=2.0)
    # h(1) = -1, h'(1) = -2:  rhs = -2*0 + 2*(-1)/1 + b
    assert pde_rhs(problem, 1.0, 0.0, 1.0, 0.0) == pytest.approx(0.7 - 2.0)


def test_pde_rhs_equilibrium():
    problem = ProblemSpec(RadialPower(1.0, 3.0), Linear(b=0.6, k=-1.2), m=2.0)
    u_eq = -0.6 / -1.2  # -b/k
    assert pde_rhs(problem, 1.3, u_eq, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_constant_zero_rejected():
    with pytest.raises(ValueError):
        Constant(0.0)


def test_singular_axis():
    problem = ProblemSpec(ExpLinear(1.0, 1.0), Constant(1.0), m=2.0)
    with pytest.raises(SingularAxisError):
        pde_rhs(problem, 0.0, 0.0, 1.0, 0.0)


# ------------------------------------------------------------------ classification

def _tags(problem):
    return classify(problem).generators


def test_classify_examples_from_table():
    arb = Arbitrary(lambda v: v ** 3 + 0.2 * v ** 2)
    assert _tags(ProblemSpec(arb, Linear(0.5, 1.0), m=3.0)) == ("X1", "X3")
    assert _tags(ProblemSpec(arb, Constant(0.5), m=0.0)) == ("X1", "X3", "X5", "X2")
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.0, 0.0, -1.0), Power(1.0, 0.0, 2.0), m=1.0)).hodograph
    assert _tags(ProblemSpec(arb, Inverse(1.0, 0.3), m=2.0)) == ("X1", "X4")
    assert _tags(ProblemSpec(ExpLinear(1.0, 2.0), Constant(0.5), m=2.0)) == ("X1", "X3", "X5", "X22")


def test_classify_case_rows():
    pw = RadialPower(1.0, 2.5)
    assert classify(ProblemSpec(pw, PowerPlusLinear(1.0, 0.1, 2.5, 0.7), m=1.0)).name == "2dim_3"
    assert classify(ProblemSpec(pw, Power(1.0, 0.1, 1.8), m=1.0)).name == "2dim_4"
    assert classify(ProblemSpec(pw, Exponential(1.0, 1.2), m=1.0)).name == "2dim_5"
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.0, 1.3, -1.0),
                                ConstantPlusInverse(0.5, 1.0, 0.2), m=-2.0)).name == "2dim_6"
    p2 = RadialPower(1.0, 2.0)
    assert classify(ProblemSpec(p2, Power(1.0, 0.2, 2.0), m=1.5)).name == "3dim_2"
    assert classify(ProblemSpec(p2, QuadraticShifted(1.0, 0.2, 0.8, -1), m=1.5)).name == "3dim_3"
    assert classify(ProblemSpec(p2, QuadraticShifted(1.0, 0.2, 0.8, +1), m=1.5)).name == "3dim_4"
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.0, 1.3, -1.0),
                                Linear(0.5, 0.9), m=-2.0)).name == "3dim_5"
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.7, 0.0, 2.5), Constant(1.0), m=1.0)).name == "4dim_1"
    assert classify(ProblemSpec(pw, Linear(0.5, 0.9), m=1.0)).name == "4dim_3"
    assert classify(ProblemSpec(Ratio(1.0, 0.8, 0.0, 2.0), Linear(0.5, 0.9), m=0.0)).name == "4dim_4"
    assert classify(ProblemSpec(Log(1.0, 0.8), Linear(0.5, 0.9), m=0.0)).name == "4dim_5"
    assert classify(ProblemSpec(Ratio(1.0, 0.8, 0.3, 1.5), Constant(1.0), m=0.0)).name == "5dim_1"
    assert classify(ProblemSpec(ExpArctan(1.0, 0.4, 0.8, 1.5), Constant(1.0), m=0.0)).name == "5dim_2"
    assert classify(ProblemSpec(ExpReciprocal(1.0, 0.4, 1.5), Constant(1.0), m=0.0)).name == "5dim_3"
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.6, 1.3, -1.0), Constant(1.0), m=-2.0)).name == "5dim_4"


def test_classify_hodograph_cases():
    # alpha = 0: any source; alpha != 0: constant source only
    assert classify(ProblemSpec(RadialPower(1.0, -1.0), Exponential(1.0, 1.0), m=1.0)).hodograph
    assert classify(ProblemSpec(ShiftedPower(1.0, 0.5, 0.0, -1.0), Constant(1.0), m=1.0)).hodograph
    tag = classify(ProblemSpec(ShiftedPower(1.0, 0.5, 0.0, -1.0), Linear(0.5, 1.0), m=1.0))
    assert not tag.hodograph and tag.name == "2dim_1"


def test_classify_deterministic():
    mk = lambda: ProblemSpec(RadialPower(1.0, 2.5), Power(1.0, 0.1, 1.8), m=1.0)
    assert classify(mk()) == classify(mk())


def test_problem_json_roundtrip():
    problem = ProblemSpec(RadialPower(kappa=-1.0, p=3.0), Linear(b=0.0, k=0.5),
                          m=2.0, radial=True)
    d = problem_to_dict(problem)
    back = problem_from_dict(d)
    assert back.diffusivity == problem.diffusivity
    assert back.source == problem.source
    assert back.m == problem.m and back.radial == problem.radial


def test_problem_from_dict_rejects_unknown_keys():
    cfg = {"diffusivity": {"family": "radial_power", "kappa": 1.0, "p": 3.0, "bogus": 1},
           "source": {"family": "constant", "b": 1.0}, "m": 2.0}
    with pytest.raises(ValueError, match="bogus"):
        problem_from_dict(cfg)
