"""Classified conservation laws (T, X, Q), multiplier and characteristic residuals,
and discrete conserved-quantity monitoring on trajectories.

A law is an evaluable triple: density T(t, r, u), flux X(t, r, u, u_r) and
multiplier Q = dT/du.  The catalog covers the linear-source law (any h), the
three special laws of the reciprocal-shift diffusivity h = -kappa/(alpha + u_r)
(two of them infinite families over solutions phi of a linear drift-diffusion
PDE, one with an incomplete-gamma flux), and the radial spellings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from . import numerics as nm
from .errors import EvaluationDomainError
from .model import (Constant, ConstPlusExponential, Exponential, Linear,
                    ProblemSpec, RadialPower, ShiftedPower, eval_h)
from .numerics import HyperDual, upper_incomplete_gamma

__all__ = [
    "ConservationLaw", "PhiSolution", "catalog", "table_multipliers",
    "multiplier_residual", "multiplier_residual_scaled",
    "characteristic_residual", "characteristic_residual_scaled",
    "phi_instance", "conserved_quantity", "continuity_check", "s_quantity",
    "PHI_MODE_RATES",
]

# exponential phi-mode rates used to sample the infinite families
PHI_MODE_RATES = (-1.0, -0.3, 0.5, 1.0)


@dataclass(frozen=True)
class PhiSolution:
    """phi(t, z) with phi_t + kappa phi_zz + f(z) phi_z = 0 (f constant here)."""
    kappa: float
    a: float
    rate: float            # spatial rate lambda; phi = exp(lambda z - (kappa lambda^2 + a lambda) t)

    def __call__(self, t, z):
        lam = self.rate
        return nm.exp(lam * z - (self.kappa * lam * lam + self.a * lam) * t)

    def z_derivative(self, t, z):
        return self.rate * self(t, z)

    def pde_residual(self, t, z):
        lam = self.rate
        phi = self(t, z)
        phi_t = -(self.kappa * lam ** 2 + self.a * lam) * phi
        return phi_t + self.kappa * lam ** 2 * phi + self.a * lam * phi


def phi_instance(source: Constant, kappa: float, rate: float) -> PhiSolution:
    """Closed-form exponential mode for constant f = a; rate 0 gives phi = 1."""
    if not isinstance(source, Constant):
        raise EvaluationDomainError(
            "closed-form phi modes exist only for constant sources; supply phi directly")
    return PhiSolution(kappa=kappa, a=source.b, rate=rate)


@dataclass(frozen=True)
class ConservationLaw:
    tag: str
    params: dict
    T: Callable            # (t, r, u)
    X: Callable            # (t, r, u, u_r)
    Q: Callable            # (t, r, u, u_r); catalog laws do not depend on u_r
    phi: Optional[PhiSolution] = None
    note: str = ""

    def __repr__(self):
        return f"<{self.tag}>"


# ============================================================================
# law constructors
# ============================================================================

def _cl1(problem, offset, slope, radial=False):
    m = problem.m
    d = problem.diffusivity
    k, a = slope, offset

    def T(t, r, u):
        return r ** m * nm.exp(-k * t) * u

    if m == -1.0:
        def X(t, r, u, v):
            return -nm.exp(-k * t) * (d.h(v) / r + a * nm.log(r))
    else:
        def X(t, r, u, v):
            return -r ** m * nm.exp(-k * t) * (d.h(v) + a * r / (m + 1.0))

    def Q(t, r, u, v):
        return r ** m * nm.exp(-k * t)

    tag = "CL1rad" if radial else "CL1"
    return ConservationLaw(tag, {"offset": a, "slope": k, "m": m}, T, X, Q)


def _cl2inf(problem, phi, radial=False):
    m = problem.m
    kappa = _reciprocal_kappa(problem.diffusivity)

    def T(t, r, u):
        return r ** m * phi(t, u)

    def X(t, r, u, v):
        return kappa * r ** m * phi.z_derivative(t, u) / v

    def Q(t, r, u, v):
        return r ** m * phi.z_derivative(t, u)

    tag = "CL2rad" if radial else "CL2inf"
    note = ("radial display prints the flux with a minus sign; +kappa verifies"
            if radial else "")
    return ConservationLaw(tag, {"kappa": kappa, "m": m, "rate": phi.rate},
                           T, X, Q, phi=phi, note=note)


def _cl3(problem, a, k, p):
    m = problem.m
    d = problem.diffusivity
    kappa, alpha = d.kappa, d.alpha

    def T(t, r, u):
        return r ** m * nm.exp(-p * ((p * kappa - a) * t + alpha * r + u))

    def X(t, r, u, v):
        gam = upper_incomplete_gamma(m + 1.0, p * alpha * r)
        return -nm.exp(p * (a - p * kappa) * t) * (
            p * kappa * r ** m * nm.exp(-p * (alpha * r + u)) / (alpha + v)
            + k * alpha ** (-m - 1.0) * p ** (-m) * gam)

    def Q(t, r, u, v):
        # Q = dT/du = -p T;  Table 1 prints the scale-free representative r^m e^{...}
        return -p * T(t, r, u)

    return ConservationLaw("CL3", {"a": a, "k": k, "p": p, "alpha": alpha,
                                   "kappa": kappa, "m": m}, T, X, Q,
                           note="law multiplier is -p x the Table row (scale-free)")


def _cl4inf(problem, phi):
    m = problem.m
    d = problem.diffusivity
    kappa, alpha = d.kappa, d.alpha

    def T(t, r, u):
        return r ** m * phi(t, alpha * r + u)

    def X(t, r, u, v):
        return kappa * r ** m * phi.z_derivative(t, alpha * r + u) / (alpha + v)

    def Q(t, r, u, v):
        return r ** m * phi.z_derivative(t, alpha * r + u)

    return ConservationLaw("CL4inf", {"kappa": kappa, "alpha": alpha, "m": m,
                                      "rate": phi.rate}, T, X, Q, phi=phi)


def _reciprocal_form(d):
    """(kappa, alpha) when h = -kappa/(alpha + u_r), else None."""
    if isinstance(d, ShiftedPower) and d.p == -1.0 and d.beta == 0.0:
        return d.kappa, d.alpha
    if isinstance(d, RadialPower) and d.p == -1.0:
        return d.kappa, 0.0
    return None


def _reciprocal_kappa(d):
    form = _reciprocal_form(d)
    if form is None:
        raise EvaluationDomainError("diffusivity is not of the reciprocal-shift form")
    return form[0]


def catalog(problem: ProblemSpec, phi_rates=PHI_MODE_RATES):
    """All classified conservation laws applicable to ``problem``.

    Infinite families are sampled on the exponential phi modes (plus phi = 1);
    an empty list is valid output for generic (h, f) pairs beyond the table.
    """
    laws = []
    src = problem.source
    if isinstance(src, Linear):
        laws.append(_cl1(problem, src.b, src.k, radial=problem.radial))
    elif isinstance(src, Constant):
        laws.append(_cl1(problem, src.b, 0.0, radial=problem.radial))

    form = _reciprocal_form(problem.diffusivity)
    if form is not None:
        kappa, alpha = form
        if alpha == 0.0:
            if isinstance(src, Constant):
                for rate in (0.0,) + tuple(phi_rates):
                    laws.append(_cl2inf(problem, phi_instance(src, kappa, rate),
                                        radial=problem.radial))
        else:
            if isinstance(src, Exponential):
                laws.append(_cl3(problem, a=0.0, k=src.k, p=src.q))
            if isinstance(src, ConstPlusExponential):
                laws.append(_cl3(problem, a=src.a, k=src.k, p=src.q))
            if isinstance(src, Constant):
                for rate in (0.0,) + tuple(phi_rates):
                    laws.append(_cl4inf(problem, phi_instance(src, kappa, rate)))
    return laws


def table_multipliers(problem: ProblemSpec, phi_rates=PHI_MODE_RATES):
    """The Table-1 multiplier rows (scale-free Q's) applicable to ``problem``.

    Returns a list of (row_name, Q callable); psi-family rows use the modes
    psi = phi_z of the exponential phi instances.
    """
    rows = []
    src = problem.source
    m = problem.m
    if isinstance(src, (Linear, Constant)):
        k = src.k if isinstance(src, Linear) else 0.0
        rows.append(("row1", lambda t, r, u, v, k=k: r ** m * nm.exp(-k * t)))
    form = _reciprocal_form(problem.diffusivity)
    if form is not None:
        kappa, alpha = form
        if alpha != 0.0 and isinstance(src, (Exponential, ConstPlusExponential)):
            a = src.a if isinstance(src, ConstPlusExponential) else 0.0
            p = src.q
            rows.append(("row2", lambda t, r, u, v, a=a, p=p:
                         r ** m * nm.exp(-p * ((p * kappa - a) * t + alpha * r + u))))
        if alpha == 0.0 and isinstance(src, Constant):
            for rate in phi_rates:
                psi = phi_instance(src, kappa, rate)
                rows.append((f"row3(rate={rate})",
                             lambda t, r, u, v, psi=psi: r ** m * psi.z_derivative(t, u)))
        if alpha != 0.0 and isinstance(src, Constant):
            for rate in phi_rates:
                psi = phi_instance(src, kappa, rate)
                rows.append((f"row4(rate={rate})",
                             lambda t, r, u, v, psi=psi:
                             r ** m * psi.z_derivative(t, alpha * r + u)))
    return rows


# ============================================================================
# residual systems
# ============================================================================

def _q_partials(Q, t, r, u, v):
    """Value and the partials of Q(t, r, u, u_r) needed by the multiplier system."""
    def hd(x, e1=0.0, e2=0.0):
        return HyperDual(x, e1, e2, 0.0)

    def as_hd(x):
        return x if isinstance(x, HyperDual) else HyperDual(float(x))

    out = as_hd(Q(hd(t, 1.0), hd(r), hd(u), hd(v, 0.0, 1.0)))
    val, q_t, q_v = out.re, out.e1, out.e2
    out = as_hd(Q(hd(t), hd(r, 1.0), hd(u, 0.0, 1.0), hd(v)))
    q_r, q_u, q_ru = out.e1, out.e2, out.e12
    out = as_hd(Q(hd(t), hd(r, 1.0, 1.0), hd(u), hd(v)))
    q_rr = out.e12
    out = as_hd(Q(hd(t), hd(r), hd(u, 1.0, 1.0), hd(v)))
    q_uu = out.e12
    return val, q_t, q_r, q_u, q_v, q_rr, q_ru, q_uu


def _source_fp(src, u):
    out = src.f(HyperDual(u, 1.0, 0.0, 0.0))
    return out.e1 if isinstance(out, HyperDual) else 0.0


def multiplier_residual(Q, problem: ProblemSpec, jet):
    """The three split multiplier determining equations at jet = (t, r, u, u_r).

    ``Q`` is a callable (t, r, u, u_r) or a ConservationLaw (its Q is used).
    """
    res, _ = _multiplier(Q, problem, jet)
    return res


def multiplier_residual_scaled(Q, problem, jet):
    res, scale = _multiplier(Q, problem, jet)
    return res / scale


def _multiplier(Q, problem, jet):
    if isinstance(Q, ConservationLaw):
        Q = Q.Q
    t, r, u, v = map(float, jet)
    m = problem.m
    val, q_t, q_r, q_u, q_v, q_rr, q_ru, q_uu = _q_partials(Q, t, r, u, v)
    h = eval_h(problem.diffusivity, v, 0)
    hp = eval_h(problem.diffusivity, v, 1)
    hpp = eval_h(problem.diffusivity, v, 2)
    fval = problem.source.f(u)
    fp = _source_fp(problem.source, u)

    e1 = q_v
    t2 = [(q_r - m * val / r) * hpp, q_u * (v * hpp + 2.0 * hp)]
    e2 = sum(t2)
    t3 = [q_t, fp * val + fval * q_u,
          m * (q_u * (h - v * hp) / r - (q_r / r - val / r ** 2) * hp),
          (q_rr + 2.0 * q_ru * v + q_uu * v ** 2) * hp]
    e3 = sum(t3)
    res = np.array([e1, e2, e3])
    scale = np.array([1.0 + abs(val),
                      1.0 + sum(abs(x) for x in t2),
                      1.0 + sum(abs(x) for x in t3)])
    return res, scale


def characteristic_residual(law: ConservationLaw, problem: ProblemSpec, jet):
    """The split reconstruction system: T_u - Q; X_{u_r} + h' T_u; the divergence row."""
    res, _ = _characteristic(law, problem, jet)
    return res


def characteristic_residual_scaled(law, problem, jet):
    res, scale = _characteristic(law, problem, jet)
    return res / scale


def _characteristic(law, problem, jet):
    t, r, u, v = map(float, jet)
    m = problem.m

    def as_hd(x):
        return x if isinstance(x, HyperDual) else HyperDual(float(x))

    outT = as_hd(law.T(HyperDual(t, 1.0), HyperDual(r), HyperDual(u, 0.0, 1.0)))
    T_t, T_u = outT.e1, outT.e2
    outX = as_hd(law.X(HyperDual(t), HyperDual(r, 1.0), HyperDual(u, 0.0, 1.0),
                       HyperDual(v)))
    X_r, X_u = outX.e1, outX.e2
    outXv = as_hd(law.X(HyperDual(t), HyperDual(r), HyperDual(u),
                        HyperDual(v, 1.0)))
    X_v = outXv.e1

    qval = law.Q(t, r, u, v)
    qval = qval.re if isinstance(qval, HyperDual) else float(qval)
    h = eval_h(problem.diffusivity, v, 0)
    hp = eval_h(problem.diffusivity, v, 1)
    fval = problem.source.f(u)

    c1 = T_u - qval
    t2 = [X_v, hp * T_u]
    c2 = sum(t2)
    t3 = [T_t, X_r, v * X_u, (m * h / r + fval) * T_u]
    c3 = sum(t3)
    res = np.array([c1, c2, c3])
    scale = np.array([1.0 + abs(T_u) + abs(qval),
                      1.0 + sum(abs(x) for x in t2),
                      1.0 + sum(abs(x) for x in t3)])
    return res, scale


# ============================================================================
# discrete conserved quantities
# ============================================================================

def conserved_quantity(law: ConservationLaw, grid, fieldobj):
    """Composite Simpson integral of T(t, r_i, u_i) over the grid."""
    rs = grid.points()
    if len(rs) < 3:
        raise EvaluationDomainError("conserved_quantity needs at least 3 grid points")
    tvals = np.array([law.T(fieldobj.t, float(rv), float(uv))
                      for rv, uv in zip(rs, fieldobj.values)])
    return float(simpson(tvals, x=rs))


def _endpoint_gradients(values, dr):
    gl = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dr)
    gr = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dr)
    return gl, gr


def continuity_check(law: ConservationLaw, trajectory):
    """max over interior slices of |dC/dt + [X]_a^b| with centered dC/dt.

    Returns a dict with the defect series and the endpoint flux columns
    (CSV-ready: t, C, left_flux, right_flux, defect).
    """
    grid = trajectory.grid
    rs = grid.points()
    dr = grid.spacing
    if len(trajectory.times) < 3:
        raise EvaluationDomainError("continuity_check needs at least 3 slices")
    C = [conserved_quantity(law, grid, f) for f in trajectory.slices]
    rows = []
    max_defect = 0.0
    for j, (tval, f) in enumerate(zip(trajectory.times, trajectory.slices)):
        gl, gr = _endpoint_gradients(f.values, dr)
        xl = law.X(tval, float(rs[0]), float(f.values[0]), float(gl))
        xr = law.X(tval, float(rs[-1]), float(f.values[-1]), float(gr))
        defect = math.nan
        if 0 < j < len(trajectory.times) - 1:
            dcdt = (C[j + 1] - C[j - 1]) / (trajectory.times[j + 1] - trajectory.times[j - 1])
            defect = abs(dcdt + (xr - xl))
            max_defect = max(max_defect, defect)
        rows.append({"t": tval, "C": C[j], "left_flux": xl, "right_flux": xr,
                     "defect": defect})
    return {"max_defect": max_defect, "rows": rows}


def s_quantity(grid, fieldobj, p, kappa, alpha, m):
    """e^{-p^2 kappa t} integral of e^{-p(u + alpha r)} r^m dr on the grid.

    Constant in t on exact solutions of the gamma-flux law (with f(0) = 0).
    Returns (value, decayed_flag); the flag warns when the integrand has not
    decayed at the outer boundary.
    """
    rs = grid.points()
    if len(rs) < 3:
        raise EvaluationDomainError("s_quantity needs at least 3 grid points")
    integrand = np.exp(-p * (fieldobj.values + alpha * rs)) * rs ** m
    decayed = bool(integrand[-1] <= 1e-4 * np.max(integrand))
    val = float(np.exp(-p ** 2 * kappa * fieldobj.t) * simpson(integrand, x=rs))
    return val, decayed
