"""Equation families: gradient diffusivities h(u_r), sources f(u), geometry exponent m,
the PDE right-hand side, and classification into maximal symmetry-group cases.

The evolution equation is  u_t = h'(u_r) u_rr + m/r * h(u_r) + f(u)  with h'' != 0 and
f not identically zero; n = m + 1 is the radial dimension when the equation is flagged
radial.  Every family evaluates generically (floats or HyperDual) through ``h``/``f``
and vectorized over numpy arrays through ``h_arr``/``f_arr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import numerics as nm
from .errors import EvaluationDomainError, SingularAxisError
from .numerics import HyperDual

__all__ = [
    "Diffusivity", "Arbitrary", "ShiftedPower", "Ratio", "ExpArctan",
    "ExpReciprocal", "ExpLinear", "Log", "RadialPower",
    "Source", "Constant", "Linear", "Inverse", "PowerPlusLinear", "Power",
    "Exponential", "ConstPlusExponential", "QuadraticShifted", "ConstantPlusInverse",
    "ProblemSpec", "CaseTag", "eval_h", "eval_g", "pde_rhs", "classify",
    "problem_from_dict", "problem_to_dict",
]


# ============================================================================
# diffusivity families
# ============================================================================

class Diffusivity:
    """Base class; subclasses provide h(v) on their working branch."""

    def h(self, v):
        raise NotImplementedError

    def hp(self, v):
        """Closed-form h'(v), generic over HyperDual (for nested differentiation)."""
        raise NotImplementedError

    def h_arr(self, v, order=0):
        """Vectorized h / h' / h'' (closed forms, used by the solver hot loop)."""
        raise NotImplementedError

    def default_branch(self):
        """Default working interval for u_r."""
        return (1e-8, math.inf)

    def h_prime_limit_at_zero(self):
        """lim_{v->0} h'(v), or None when the limit is not finite."""
        try:
            with np.errstate(all="ignore"):
                val = self.h_arr(np.array([0.0]), 1)[0].item()
        except (EvaluationDomainError, FloatingPointError, ZeroDivisionError):
            return None
        return val if math.isfinite(val) else None


@dataclass(frozen=True)
class Arbitrary(Diffusivity):
    """User-supplied evaluable h; ``fn`` must be generic over HyperDual.

    ``fn_p`` (closed-form h', also generic) is only needed by consumers that
    differentiate h' itself, e.g. the unsplit invariance residual.
    """
    fn: Callable
    branch: tuple = (1e-8, math.inf)
    label: str = "arbitrary"
    fn_p: Optional[Callable] = None

    def h(self, v):
        return self.fn(v)

    def hp(self, v):
        if self.fn_p is None:
            raise EvaluationDomainError(
                "Arbitrary diffusivity needs fn_p for nested differentiation")
        return self.fn_p(v)

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        out = np.empty_like(v)
        for i, vv in np.ndenumerate(v):
            x = self.fn(HyperDual(vv, 1.0, 1.0, 0.0))
            out[i] = (x.re, x.e1, x.e12)[order]
        return out

    def default_branch(self):
        return self.branch


@dataclass(frozen=True)
class ShiftedPower(Diffusivity):
    """h = beta - kappa (alpha + v)^p."""
    kappa: float
    alpha: float
    beta: float
    p: float

    def __post_init__(self):
        if self.p in (0.0, 1.0):
            raise ValueError("ShiftedPower needs p != 0, 1 (h'' != 0)")

    def h(self, v):
        return self.beta - self.kappa * (self.alpha + v) ** self.p

    def hp(self, v):
        return -self.kappa * self.p * (self.alpha + v) ** (self.p - 1.0)

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        base = self.alpha + v
        p, k = self.p, self.kappa
        if order == 0:
            return self.beta - k * base ** p
        if order == 1:
            return -k * p * base ** (p - 1.0)
        return -k * p * (p - 1.0) * base ** (p - 2.0)

    def default_branch(self):
        # maximal interval right of the singular/branch point v = -alpha
        return (-self.alpha + 1e-8, math.inf)


@dataclass(frozen=True)
class Ratio(Diffusivity):
    """h = -kappa ((beta + v)/(alpha + v))^p."""
    kappa: float
    alpha: float
    beta: float
    p: float

    def __post_init__(self):
        if self.p == 0.0:
            raise ValueError("Ratio needs p != 0")
        if self.alpha == self.beta:
            raise ValueError("Ratio needs alpha != beta (h'' != 0)")

    def h(self, v):
        return -self.kappa * ((self.beta + v) / (self.alpha + v)) ** self.p

    def hp(self, v):
        w = (self.beta + v) / (self.alpha + v)
        return -self.kappa * self.p * w ** (self.p - 1.0) \
            * (self.alpha - self.beta) / (self.alpha + v) ** 2

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        a, b, p, k = self.alpha, self.beta, self.p, self.kappa
        w = (b + v) / (a + v)
        if order == 0:
            return -k * w ** p
        wp = (a - b) / (a + v) ** 2
        if order == 1:
            return -k * p * w ** (p - 1.0) * wp
        wpp = -2.0 * (a - b) / (a + v) ** 3
        return -k * p * ((p - 1.0) * w ** (p - 2.0) * wp ** 2 + w ** (p - 1.0) * wpp)

    def default_branch(self):
        lo = max(-self.alpha, -self.beta) + 1e-8
        return (lo, math.inf)


@dataclass(frozen=True)
class ExpArctan(Diffusivity):
    """h = kappa exp(p arctan((alpha + v)/beta))."""
    kappa: float
    alpha: float
    beta: float
    p: float

    def __post_init__(self):
        if self.p == 0.0 or self.beta == 0.0:
            raise ValueError("ExpArctan needs p != 0 and beta != 0")

    def h(self, v):
        return self.kappa * nm.exp(self.p * nm.atan((self.alpha + v) / self.beta))

    def hp(self, v):
        w = (self.alpha + v) / self.beta
        return self.h(v) * self.p / (self.beta * (1.0 + w * w))

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        a, b, p, k = self.alpha, self.beta, self.p, self.kappa
        w = (a + v) / b
        hval = k * np.exp(p * np.arctan(w))
        if order == 0:
            return hval
        d = b * (1.0 + w ** 2)
        if order == 1:
            return hval * p / d
        return hval * (p ** 2 - 2.0 * w * p) / d ** 2

    def default_branch(self):
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class ExpReciprocal(Diffusivity):
    """h = kappa exp(p/(alpha + v))."""
    kappa: float
    alpha: float
    p: float

    def __post_init__(self):
        if self.p == 0.0:
            raise ValueError("ExpReciprocal needs p != 0")

    def h(self, v):
        return self.kappa * nm.exp(self.p / (self.alpha + v))

    def hp(self, v):
        s = self.alpha + v
        return self.h(v) * (-self.p / (s * s))

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        a, p, k = self.alpha, self.p, self.kappa
        s = a + v
        hval = k * np.exp(p / s)
        if order == 0:
            return hval
        if order == 1:
            return hval * (-p / s ** 2)
        return hval * (p ** 2 / s ** 4 + 2.0 * p / s ** 3)

    def default_branch(self):
        return (-self.alpha + 1e-8, math.inf)


@dataclass(frozen=True)
class ExpLinear(Diffusivity):
    """h = kappa exp(p v)."""
    kappa: float
    p: float

    def __post_init__(self):
        if self.p == 0.0:
            raise ValueError("ExpLinear needs p != 0")

    def h(self, v):
        return self.kappa * nm.exp(self.p * v)

    def hp(self, v):
        return self.kappa * self.p * nm.exp(self.p * v)

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        return self.kappa * self.p ** order * np.exp(self.p * v)

    def default_branch(self):
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class Log(Diffusivity):
    """h = kappa ln|alpha + v|, on the branch alpha + v > 0."""
    kappa: float
    alpha: float

    def h(self, v):
        return self.kappa * nm.log(self.alpha + v)

    def hp(self, v):
        return self.kappa / (self.alpha + v)

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        s = self.alpha + v
        if np.any(s <= 0.0):
            raise EvaluationDomainError("Log diffusivity evaluated at alpha + u_r <= 0")
        if order == 0:
            return self.kappa * np.log(s)
        if order == 1:
            return self.kappa / s
        return -self.kappa / s ** 2

    def default_branch(self):
        return (-self.alpha + 1e-8, math.inf)


@dataclass(frozen=True)
class RadialPower(Diffusivity):
    """h = -kappa |v|^(p-1) v, the radial power family (g = -kappa |v|^(p-1))."""
    kappa: float
    p: float

    def __post_init__(self):
        if self.p == 1.0:
            raise ValueError("RadialPower needs p != 1 (h'' != 0)")

    def h(self, v):
        a = v.re if isinstance(v, HyperDual) else float(v)
        if a == 0.0:
            if isinstance(v, HyperDual):
                if self.p > 2.0:
                    return HyperDual(0.0)   # h, h', h'' all vanish at 0 for p > 2
                raise EvaluationDomainError("RadialPower derivative at u_r = 0")
            return 0.0
        return -self.kappa * nm.absval(v) ** (self.p - 1.0) * v

    def hp(self, v):
        a = v.re if isinstance(v, HyperDual) else float(v)
        if a == 0.0:
            if isinstance(v, HyperDual):
                if self.p > 3.0:
                    return HyperDual(0.0)
                raise EvaluationDomainError("RadialPower h' derivatives at u_r = 0")
            lim = self.h_prime_limit_at_zero()
            if lim is None:
                raise EvaluationDomainError("RadialPower h'(0) has no finite limit")
            return lim
        return -self.kappa * self.p * nm.absval(v) ** (self.p - 1.0)

    def h_arr(self, v, order=0):
        v = np.asarray(v, float)
        p, k = self.p, self.kappa
        av = np.abs(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            if order == 0:
                out = -k * av ** (p - 1.0) * v
                return np.where(v == 0.0, 0.0, out)
            if order == 1:
                return -k * p * av ** (p - 1.0)
            return -k * p * (p - 1.0) * av ** (p - 2.0) * np.sign(v)

    def default_branch(self):
        return (1e-8, math.inf)

    def h_prime_limit_at_zero(self):
        if self.p > 1.0:
            return 0.0
        return None

    def radial_exponent_valid(self):
        """p = 1 + 2l/d with l a non-zero integer and d odd (Theorem on radial powers)."""
        frac = Fraction(self.p - 1.0).limit_denominator(64)
        if abs(float(frac) - (self.p - 1.0)) > 1e-12:
            return False
        half = frac / 2
        return half != 0 and half.denominator % 2 == 1


# ============================================================================
# source families
# ============================================================================

class Source:
    def f(self, u):
        raise NotImplementedError

    def f_arr(self, u, order=0):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Source):
    b: float

    def __post_init__(self):
        if self.b == 0.0:
            raise ValueError("source must be non-zero: Constant(0) is not admissible")

    def f(self, u):
        return self.b + 0.0 * u

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        return np.full_like(u, self.b) if order == 0 else np.zeros_like(u)


@dataclass(frozen=True)
class Linear(Source):
    """f = b + k u (offset b, slope k != 0)."""
    b: float
    k: float

    def __post_init__(self):
        if self.k == 0.0:
            raise ValueError("Linear source needs k != 0 (use Constant otherwise)")

    def f(self, u):
        return self.b + self.k * u

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        if order == 0:
            return self.b + self.k * u
        if order == 1:
            return np.full_like(u, self.k)
        return np.zeros_like(u)


@dataclass(frozen=True)
class Inverse(Source):
    """f = k/(a + u)."""
    k: float
    a: float

    def __post_init__(self):
        if self.k == 0.0:
            raise ValueError("Inverse source needs k != 0")

    def f(self, u):
        return self.k / (self.a + u)

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        s = self.a + u
        return (self.k / s, -self.k / s ** 2, 2.0 * self.k / s ** 3)[order]


@dataclass(frozen=True)
class PowerPlusLinear(Source):
    """f = k (a + u)^p + c (a + u), c != 0."""
    k: float
    a: float
    p: float
    c: float

    def __post_init__(self):
        if self.c == 0.0:
            raise ValueError("PowerPlusLinear needs c != 0 (use Power otherwise)")

    def f(self, u):
        return self.k * (self.a + u) ** self.p + self.c * (self.a + u)

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        s = self.a + u
        k, p, c = self.k, self.p, self.c
        if order == 0:
            return k * s ** p + c * s
        if order == 1:
            return k * p * s ** (p - 1.0) + c
        return k * p * (p - 1.0) * s ** (p - 2.0)


@dataclass(frozen=True)
class Power(Source):
    """f = k (a + u)^q."""
    k: float
    a: float
    q: float

    def __post_init__(self):
        if self.k == 0.0 or self.q == 0.0:
            raise ValueError("Power source needs k != 0 and q != 0")

    def f(self, u):
        return self.k * (self.a + u) ** self.q

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        s = self.a + u
        k, q = self.k, self.q
        if order == 0:
            return k * s ** q
        if order == 1:
            return k * q * s ** (q - 1.0)
        return k * q * (q - 1.0) * s ** (q - 2.0)


@dataclass(frozen=True)
class Exponential(Source):
    """f = k e^(q u)."""
    k: float
    q: float

    def __post_init__(self):
        if self.k == 0.0 or self.q == 0.0:
            raise ValueError("Exponential source needs k != 0 and q != 0")

    def f(self, u):
        return self.k * nm.exp(self.q * u)

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        return self.k * self.q ** order * np.exp(self.q * u)


@dataclass(frozen=True)
class QuadraticShifted(Source):
    """f = k (a + u)^2 + sign * b^2/k, sign in {-1, +1}."""
    k: float
    a: float
    b: float
    sign: int

    def __post_init__(self):
        if self.k == 0.0 or self.b == 0.0 or self.sign not in (-1, 1):
            raise ValueError("QuadraticShifted needs k != 0, b != 0, sign = +-1")

    def f(self, u):
        return self.k * (self.a + u) ** 2 + self.sign * self.b ** 2 / self.k

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        s = self.a + u
        if order == 0:
            return self.k * s ** 2 + self.sign * self.b ** 2 / self.k
        if order == 1:
            return 2.0 * self.k * s
        return np.full_like(u, 2.0 * self.k)


@dataclass(frozen=True)
class ConstPlusExponential(Source):
    """f = a + k e^(q u); the gamma-flux conservation law's source shape."""
    a: float
    k: float
    q: float

    def __post_init__(self):
        if self.k == 0.0 or self.q == 0.0:
            raise ValueError("ConstPlusExponential needs k != 0 and q != 0")

    def f(self, u):
        return self.a + self.k * nm.exp(self.q * u)

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        core = self.k * self.q ** order * np.exp(self.q * u)
        return core + self.a if order == 0 else core


@dataclass(frozen=True)
class ConstantPlusInverse(Source):
    """f = b + k/(a + u), b != 0, k != 0."""
    b: float
    k: float
    a: float

    def __post_init__(self):
        if self.k == 0.0 or self.b == 0.0:
            raise ValueError("ConstantPlusInverse needs b != 0 and k != 0")

    def f(self, u):
        return self.b + self.k / (self.a + u)

    def f_arr(self, u, order=0):
        u = np.asarray(u, float)
        s = self.a + u
        if order == 0:
            return self.b + self.k / s
        if order == 1:
            return -self.k / s ** 2
        return 2.0 * self.k / s ** 3


# ============================================================================
# problem spec and evaluation
# ============================================================================

@dataclass(frozen=True)
class ProblemSpec:
    diffusivity: Diffusivity
    source: Source
    m: float
    working_branch: Optional[tuple] = None
    radial: bool = False

    def __post_init__(self):
        if self.radial:
            if self.m < 0 or abs(self.m - round(self.m)) > 1e-12:
                raise ValueError("radial problems need integer m = n - 1 >= 0")
            if isinstance(self.diffusivity, RadialPower) and not self.diffusivity.radial_exponent_valid():
                raise ValueError(
                    "radial RadialPower needs p = 1 + 2l/d with l a non-zero integer, d odd")
        if self.working_branch is None:
            object.__setattr__(self, "working_branch", self.diffusivity.default_branch())

    @property
    def n(self):
        return self.m + 1.0

    def in_branch(self, v):
        lo, hi = self.working_branch
        return lo <= v <= hi


def eval_h(spec: Diffusivity, v: float, order: int = 0) -> float:
    """h(v), h'(v) or h''(v) by HyperDual propagation through the family evaluable."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if order == 0:
        out = spec.h(float(v))
        return out.re if isinstance(out, HyperDual) else float(out)
    x = HyperDual(v, 1.0, 1.0, 0.0)
    out = spec.h(x)
    if not isinstance(out, HyperDual):
        return 0.0
    return (out.re, out.e1, out.e12)[order]


def eval_g(spec: Diffusivity, v: float) -> float:
    """g(v) = h(v)/v; at v = 0 returns the limit h'(0) when h(0) = 0 and the limit exists."""
    if v != 0.0:
        return eval_h(spec, v, 0) / v
    h0 = spec.h(0.0) if not isinstance(spec, RadialPower) else 0.0
    if h0 != 0.0:
        raise EvaluationDomainError("g(0) undefined: h(0) != 0 makes the singularity essential")
    lim = spec.h_prime_limit_at_zero()
    if lim is None:
        raise EvaluationDomainError("g(0) undefined: h'(0) has no finite limit")
    return lim


def pde_rhs(problem: ProblemSpec, r: float, u: float, u_r: float, u_rr: float) -> float:
    """h'(u_r) u_rr + m/r h(u_r) + f(u)."""
    if r == 0.0 and problem.m != 0.0:
        hval = eval_h(problem.diffusivity, u_r, 0)
        if hval != 0.0:
            raise SingularAxisError("m/r h(u_r) singular at r = 0 with h(u_r) != 0")
        mterm = 0.0
    else:
        mterm = 0.0 if problem.m == 0.0 else problem.m / r * eval_h(problem.diffusivity, u_r, 0)
    return eval_h(problem.diffusivity, u_r, 1) * u_rr + mterm + problem.source.f(u)


# ============================================================================
# classification (maximal point-symmetry groups, plus the hodograph case)
# ============================================================================

@dataclass(frozen=True)
class CaseTag:
    """Row of the symmetry-group classification matched by a problem."""
    name: str
    generators: tuple
    hodograph: bool = False

    @property
    def dimension(self):
        return len(self.generators)


def _is_power_h(d):
    """h = -kappa v^p on the positive branch: RadialPower or ShiftedPower(alpha=0, beta=0)."""
    if isinstance(d, RadialPower):
        return d.kappa, d.p
    if isinstance(d, ShiftedPower) and d.alpha == 0.0 and d.beta == 0.0:
        return d.kappa, d.p
    return None


def _is_hodograph_h(d):
    """h = -kappa/(alpha + v): returns (kappa, alpha) or None."""
    if isinstance(d, ShiftedPower) and d.p == -1.0 and d.beta == 0.0:
        return d.kappa, d.alpha
    if isinstance(d, RadialPower) and d.p == -1.0:
        return d.kappa, 0.0
    return None


def classify(problem: ProblemSpec) -> CaseTag:
    """Match the maximal-symmetry-group table; total and deterministic.

    The hodograph case (h' = kappa/(alpha+u_r)^2 with f constant when alpha != 0,
    f arbitrary when alpha = 0) takes precedence over the generator rows.
    """
    d, f, m = problem.diffusivity, problem.source, problem.m

    hodo = _is_hodograph_h(d)
    if hodo is not None:
        _, alpha = hodo
        if alpha == 0.0 or isinstance(f, Constant):
            return CaseTag("hodograph", ("X1",) + (("X2",) if m == 0.0 else ()), hodograph=True)

    def with_x2(tags):
        return tags + ("X2",) if m == 0.0 else tags

    power = _is_power_h(d)

    # --- 5-dimensional rows (m = 0, f = b), and the m = -2 shifted-reciprocal row
    if isinstance(f, Constant) and m == 0.0:
        if isinstance(d, Ratio):
            return CaseTag("5dim_1", ("X1", "X2", "X3", "X5", "X19"))
        if isinstance(d, ExpArctan):
            return CaseTag("5dim_2", ("X1", "X2", "X3", "X5", "X20"))
        if isinstance(d, ExpReciprocal):
            return CaseTag("5dim_3", ("X1", "X2", "X3", "X5", "X21"))
    if (isinstance(f, Constant) and m == -2.0 and isinstance(d, ShiftedPower)
            and d.p == -1.0 and d.beta != 0.0):
        return CaseTag("5dim_4", ("X1", "X3", "X5", "X16", "X17"))

    # --- 4-dimensional rows
    if isinstance(f, Constant):
        if isinstance(d, ShiftedPower) and d.beta == 0.0 and d.p not in (-1.0, 0.0, 1.0):
            return CaseTag("4dim_1", with_x2(("X1", "X3", "X5", "X15")))
        if isinstance(d, ExpLinear):
            return CaseTag("4dim_2", with_x2(("X1", "X3", "X5", "X22")))
    if isinstance(f, Linear):
        if power is not None and power[1] not in (-1.0, 0.0, 1.0):
            return CaseTag("4dim_3", with_x2(("X1", "X3", "X6", "X7")))
        if isinstance(d, Ratio) and d.beta == 0.0 and d.p == 2.0 and m == 0.0:
            return CaseTag("4dim_4", ("X1", "X2", "X3", "X18"))
        if isinstance(d, Log) and m == 0.0:
            return CaseTag("4dim_5", ("X1", "X2", "X3", "X23"))

    # --- 3-dimensional rows
    if isinstance(f, Constant):
        return CaseTag("3dim_1", with_x2(("X1", "X3", "X5")))
    if power is not None and power[1] == 2.0:
        if isinstance(f, Power) and f.q == 2.0:
            return CaseTag("3dim_2", with_x2(("X1", "X7", "X10")))
        if isinstance(f, QuadraticShifted) and f.sign == -1:
            return CaseTag("3dim_3", with_x2(("X1", "X6", "X11")))
        if isinstance(f, QuadraticShifted) and f.sign == 1:
            return CaseTag("3dim_4", with_x2(("X1", "X12", "X13")))
    if (isinstance(f, Linear) and m == -2.0 and isinstance(d, ShiftedPower)
            and d.p == -1.0 and d.alpha == 0.0 and d.beta != 0.0):
        return CaseTag("3dim_5", ("X1", "X3", "X14"))

    # --- 2-dimensional rows
    if power is not None and power[1] not in (-1.0, 0.0, 1.0):
        p = power[1]
        if isinstance(f, PowerPlusLinear) and f.p == p:
            return CaseTag("2dim_3", with_x2(("X1", "X6")))
        if isinstance(f, Power):
            return CaseTag("2dim_4", with_x2(("X1", "X7")))
        if isinstance(f, Exponential):
            return CaseTag("2dim_5", with_x2(("X1", "X8")))
    if (isinstance(f, ConstantPlusInverse) and m == -2.0 and isinstance(d, ShiftedPower)
            and d.p == -1.0 and d.alpha == 0.0 and d.beta != 0.0):
        return CaseTag("2dim_6", ("X1", "X9"))
    if isinstance(f, Linear):
        return CaseTag("2dim_1", with_x2(("X1", "X3")))
    if isinstance(f, Inverse):
        return CaseTag("2dim_2", with_x2(("X1", "X4")))

    return CaseTag("1dim", with_x2(("X1",)))


# ============================================================================
# JSON (de)serialization of problems, in the paper's symbol names
# ============================================================================

_DIFF_BY_NAME = {
    "shifted_power": (ShiftedPower, ("kappa", "alpha", "beta", "p")),
    "ratio": (Ratio, ("kappa", "alpha", "beta", "p")),
    "exp_arctan": (ExpArctan, ("kappa", "alpha", "beta", "p")),
    "exp_reciprocal": (ExpReciprocal, ("kappa", "alpha", "p")),
    "exp_linear": (ExpLinear, ("kappa", "p")),
    "log": (Log, ("kappa", "alpha")),
    "radial_power": (RadialPower, ("kappa", "p")),
}

_SRC_BY_NAME = {
    "constant": (Constant, ("b",)),
    "linear": (Linear, ("b", "k")),
    "inverse": (Inverse, ("k", "a")),
    "power_plus_linear": (PowerPlusLinear, ("k", "a", "p", "c")),
    "power": (Power, ("k", "a", "q")),
    "exponential": (Exponential, ("k", "q")),
    "const_plus_exponential": (ConstPlusExponential, ("a", "k", "q")),
    "quadratic_shifted": (QuadraticShifted, ("k", "a", "b", "sign")),
    "constant_plus_inverse": (ConstantPlusInverse, ("b", "k", "a")),
}


def problem_from_dict(cfg: dict) -> ProblemSpec:
    dcfg = dict(cfg["diffusivity"])
    scfg = dict(cfg["source"])
    dname = dcfg.pop("family")
    sname = scfg.pop("family")
    if dname not in _DIFF_BY_NAME:
        raise ValueError(f"unknown diffusivity family {dname!r}")
    if sname not in _SRC_BY_NAME:
        raise ValueError(f"unknown source family {sname!r}")
    dcls, dfields = _DIFF_BY_NAME[dname]
    scls, sfields = _SRC_BY_NAME[sname]
    extra_d = set(dcfg) - set(dfields)
    extra_s = set(scfg) - set(sfields)
    if extra_d or extra_s:
        raise ValueError(f"unknown parameter keys: {sorted(extra_d | extra_s)}")
    diff = dcls(**{k: (int(v) if k == "sign" else float(v)) for k, v in dcfg.items()})
    src = scls(**{k: (int(v) if k == "sign" else float(v)) for k, v in scfg.items()})
    branch = tuple(cfg["working_branch"]) if "working_branch" in cfg else None
    return ProblemSpec(diff, src, float(cfg["m"]), working_branch=branch,
                       radial=bool(cfg.get("radial", False)))


def problem_to_dict(problem: ProblemSpec) -> dict:
    def enc(obj, table):
        for name, (cls, fields) in table.items():
            if type(obj) is cls:
                return {"family": name, **{f: getattr(obj, f) for f in fields}}
        raise ValueError(f"{type(obj).__name__} has no JSON spelling")
    return {
        "diffusivity": enc(problem.diffusivity, _DIFF_BY_NAME),
        "source": enc(problem.source, _SRC_BY_NAME),
        "m": problem.m,
        "radial": problem.radial,
    }
