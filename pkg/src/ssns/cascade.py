"""Dyadic cascade model: the shell inequality system taken as an equality.

    db_j/dt = C [ (sum_{k <= j+5} b_k)(sum_{|a| <= 5} b_{j+a})
                  + sum_{k >= j} 2^(d(j-k)) sum_{|a| <= 5} b_k b_{k+a} ]  -  D_j b_j

Shells outside ``0..jmax`` are zero. Every nonlinear contribution is
positive, so the model has no conserved energy: it is the worst case the
inequalities allow, not a fluid model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .diagnostics import solve_jku, solve_jku_symbol
from .dissipation import DissipationSpec, shell_dissipation_factor


@dataclass(frozen=True)
class CascadeParams:
    C: float = 1.0
    gamma: float = 0.25
    d: int = 2
    jmax: int = 20
    alpha_width: int = 5
    diss_form: str = "shifted_j"

    def __post_init__(self):
        if not self.C >= 0:
            raise ValueError("coupling C must be nonnegative")
        if self.jmax < 10:
            raise ValueError("cascade needs jmax >= 10")
        if self.diss_form not in ("shifted_j", "symbol_log"):
            raise ValueError(f"unknown diss_form {self.diss_form!r}")
        DissipationSpec(self.gamma, self.d)

    @property
    def spec(self) -> DissipationSpec:
        return DissipationSpec(self.gamma, self.d)

    @property
    def n(self) -> int:
        return self.jmax + 1


@dataclass
class CascadeState:
    b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if np.any(self.b < 0):
            raise ValueError("shell amplitudes must be nonnegative")


@lru_cache(maxsize=32)
def _operators(params: CascadeParams):
    j = np.arange(params.n)
    D = shell_dissipation_factor(j, params.spec, params.diss_form)
    lag = j[:, None] - j[None, :]
    transfer = np.where(lag <= 0, 2.0 ** (params.d * np.minimum(lag, 0).astype(float)), 0.0)
    # budget weight D_j 2^(-(d+2) j): the b-form of the dissipation integrand
    budget_w = D * 2.0 ** (-(params.d + 2) * j.astype(float))
    return D, transfer, budget_w


def _window_sums(b: np.ndarray, w: int) -> np.ndarray:
    csum = np.concatenate([[0.0], np.cumsum(b)])
    n = len(b)
    j = np.arange(n)
    hi = np.minimum(j + w, n - 1) + 1
    lo = np.maximum(j - w, 0)
    return csum[hi] - csum[lo]


def nonlinear_rhs(b: np.ndarray, params: CascadeParams) -> np.ndarray:
    """The coupling part of the right-hand side (everything but -D_j b_j)."""
    _, transfer, _ = _operators(params)
    w = params.alpha_width
    n = len(b)
    neighbours = _window_sums(b, w)
    low = np.cumsum(b)[np.minimum(np.arange(n) + w, n - 1)]
    high = transfer @ (b * neighbours)
    return params.C * (low * neighbours + high)


def cascade_rhs(state: CascadeState | np.ndarray, params: CascadeParams) -> np.ndarray:
    b = state.b if isinstance(state, CascadeState) else np.asarray(state, dtype=float)
    if len(b) != params.n:
        raise ValueError(f"state has {len(b)} shells, params expect {params.n}")
    D, _, _ = _operators(params)
    return nonlinear_rhs(b, params) - D * b


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------

def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_1, phi_2, phi_3 of the exponential integrators, for real z <= 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    series = []
    for k in (1, 2, 3):
        term = np.full_like(zs, 1.0 / math.factorial(k))
        total = term.copy()
        for m in range(1, 25):
            term = term * zs / (m + k)
            total = total + term
        series.append(total)
    zl = np.where(small, -1.0, z)
    p1 = np.expm1(zl) / zl
    p2 = (p1 - 1.0) / zl
    p3 = (p2 - 0.5) / zl
    return tuple(np.where(small, s_, l_) for s_, l_ in zip(series, (p1, p2, p3)))


class _ETDCoefficients:
    """Cox-Matthews ETDRK4 weights for the linear part -D at step h."""

    def __init__(self, D: np.ndarray, h: float):
        z = -h * D
        self.e = np.exp(z)
        self.e2 = np.exp(0.5 * z)
        self.q = 0.5 * h * phi_functions(0.5 * z)[0]
        p1, p2, p3 = phi_functions(z)
        self.f1 = h * (p1 - 3.0 * p2 + 4.0 * p3)
        self.f2 = h * (p2 - 2.0 * p3)
        self.f3 = h * (-p2 + 4.0 * p3)


def _etdrk4_step(b: np.ndarray, h: float, D: np.ndarray, budget_w: np.ndarray, params: CascadeParams):
    """One ETDRK4 step for the shells plus the RK4-weighted budget increment."""
    co = _ETDCoefficients(D, h)
    nb = nonlinear_rhs(b, params)
    a = co.e2 * b + co.q * nb
    na = nonlinear_rhs(a, params)
    bb = co.e2 * b + co.q * na
    nbb = nonlinear_rhs(bb, params)
    c = co.e2 * a + co.q * (2.0 * nbb - nb)
    nc = nonlinear_rhs(c, params)
    b_new = co.e * b + co.f1 * nb + 2.0 * co.f2 * (na + nbb) + co.f3 * nc
    rates = [float(np.dot(budget_w, y * y)) for y in (b, a, bb, c)]
    dq = h / 6.0 * (rates[0] + 2.0 * rates[1] + 2.0 * rates[2] + rates[3])
    return b_new, dq


@dataclass(frozen=True)
class CascadeController:
    atol: float = 1e-10
    rtol: float = 1e-8
    h_init: float = 1e-4
    h_min: float = 1e-14
    h_max: float = np.inf
    max_steps: int = 200_000
    blowup_threshold: float = 1e12


@dataclass
class CascadeTrajectory:
    t: np.ndarray
    b: np.ndarray
    budget: np.ndarray
    cause: str = "completed"
    blowup_suspect: bool = False
    offending_shell: int | None = None
    rejected: int = 0

    @property
    def c(self) -> np.ndarray:
        return self.b.sum(axis=1)

    @property
    def final(self) -> CascadeState:
        return CascadeState(self.b[-1].copy(), float(self.t[-1]))


def integrate_cascade(state: CascadeState, params: CascadeParams, t_end: float,
                      controller: CascadeController | None = None) -> CascadeTrajectory:
    """Adaptive exponential RK4 (ETDRK4) with a nonnegativity clamp.

    The stiff shell dissipation is integrated exactly through the phi
    functions, so strongly damped shells relax onto their forced balance
    instead of restricting the step. Local error is estimated by step
    doubling. A step size below ``h_min`` or ``c`` above ``blowup_threshold``
    ends the run with ``blowup_suspect`` set.
    """
    ctl = controller or CascadeController()
    D, _, budget_w = _operators(params)
    b = np.array(state.b, dtype=float)
    if len(b) != params.n:
        raise ValueError(f"state has {len(b)} shells, params expect {params.n}")
    t = float(state.t)
    ts, bs, qs = [t], [b.copy()], [0.0]
    q = 0.0
    h = min(ctl.h_init, max(t_end - t, 0.0)) or ctl.h_init
    cause, suspect, offender, rejected = "completed", False, None, 0
    steps = 0
    while t_end - t > 1e-14 * max(1.0, abs(t_end)):
        if steps >= ctl.max_steps:
            cause = "max_steps"
            break
        h = min(h, t_end - t, ctl.h_max)
        b_full, _ = _etdrk4_step(b, h, D, budget_w, params)
        b_half, dq1 = _etdrk4_step(b, 0.5 * h, D, budget_w, params)
        b_new, dq2 = _etdrk4_step(b_half, 0.5 * h, D, budget_w, params)
        dq = dq1 + dq2
        err = (b_new - b_full) / 15.0
        scale = ctl.atol + ctl.rtol * np.maximum(np.abs(b), np.abs(b_new))
        ratio = np.abs(err) / scale
        err_norm = float(np.sqrt(np.mean(ratio**2))) if np.all(np.isfinite(ratio)) else np.inf
        if err_norm <= 1.0:
            t += h
            b = np.maximum(b_new, 0.0)
            q += dq
            steps += 1
            ts.append(t)
            bs.append(b.copy())
            qs.append(q)
            if b.sum() > ctl.blowup_threshold:
                cause, suspect, offender = "blowup_threshold", True, int(np.argmax(b))
                break
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** (-0.2))
            h *= factor
        else:
            rejected += 1
            factor = 0.2 if not np.isfinite(err_norm) else max(0.2, 0.9 * err_norm ** (-0.2))
            h *= factor
            if h < ctl.h_min:
                cause, suspect = "step_underflow", True
                offender = int(np.nanargmax(np.where(np.isfinite(ratio), ratio, np.inf)))
                break
    return CascadeTrajectory(np.array(ts), np.array(bs), np.array(qs), cause, suspect, offender, rejected)


# --------------------------------------------------------------------------
# barrier mechanism and sweeps
# --------------------------------------------------------------------------

def barrier_configuration(params: CascadeParams, k: int, C_b: float) -> tuple[np.ndarray, float]:
    """All shells placed on the envelope C_b 2^k 2^((j_{k,u} - j)/10)."""
    j_ku = solve_jku(k, params.spec)
    j = np.arange(params.n)
    return C_b * 2.0**k * 2.0 ** ((j_ku - j) / 10.0), j_ku


def barrier_sign_test(params: CascadeParams, k: int, l: int, C_b: float = 1.0) -> float:
    """db_l/dt with every shell sitting on the barrier envelope at level k."""
    if not 0 <= l <= params.jmax:
        raise ValueError(f"probe shell {l} outside 0..{params.jmax}")
    b, _ = barrier_configuration(params, k, C_b)
    return float(cascade_rhs(b, params)[l])


@dataclass
class BarrierOffset:
    k: int
    C_b: float
    j_ku: float
    offset: float | None
    first_shell: int | None
    rates: np.ndarray = field(repr=False)


def barrier_offset(params: CascadeParams, k: int, C_b: float = 1.0) -> BarrierOffset:
    """Smallest offset Delta with db_l/dt < 0 for every probe shell l >= j_{k,u} + Delta."""
    b, j_ku = barrier_configuration(params, k, C_b)
    rates = cascade_rhs(b, params)
    negative = rates < 0
    first = None
    for l in range(params.jmax, -1, -1):
        if not negative[l]:
            break
        first = l
    offset = None if first is None else first - j_ku
    return BarrierOffset(k, C_b, j_ku, offset, first, rates)


def initial_shells(params: CascadeParams, family: str = "bump", seed: int = 0,
                   amplitude: float = 0.1, center: int = 2) -> np.ndarray:
    """Seeded nonnegative initial shell vectors."""
    j = np.arange(params.n)
    if family == "single":
        b = np.zeros(params.n)
        b[center] = amplitude
        return b
    if family == "bump":
        rng = np.random.default_rng(seed)
        b = amplitude * np.exp(-0.5 * (j - center) ** 2) * (1.0 + 0.1 * rng.random(params.n))
        return b
    raise ValueError(f"unknown cascade initial family {family!r}")


@dataclass
class SweepRow:
    gamma: float
    sup_c: float
    blowup_flag: bool
    total_dissipation: float
    t_final: float
    cause: str
    k_sup: int | None
    jku_gamma: float
    jku_2gamma: float

    FIELDS = ("gamma", "sup_c", "blowup_flag", "total_dissipation", "t_final",
              "cause", "k_sup", "jku_gamma", "jku_2gamma")


def gamma_sweep(template: CascadeParams, gammas: Sequence[float], initial: np.ndarray | Callable,
                horizon: float, controller: CascadeController | None = None) -> list[SweepRow]:
    """Integrate the cascade for each gamma and tabulate growth and dissipation.

    ``initial`` is a shell vector or a callable ``params -> shell vector``.
    The critical scale is reported under both the j^gamma and j^(2 gamma)
    conventions.
    """
    rows = []
    for gamma in gammas:
        params = replace(template, gamma=float(gamma))
        b0 = initial(params) if callable(initial) else np.asarray(initial, dtype=float)
        traj = integrate_cascade(CascadeState(b0), params, horizon, controller)
        sup_c = float(traj.c.max())
        k_sup = math.floor(math.log2(sup_c)) if sup_c > 0 else None
        jg = j2g = float("nan")
        if k_sup is not None and k_sup >= 1:
            try:
                jg = solve_jku(k_sup, params.spec)
                j2g = solve_jku_symbol(k_sup, params.spec)
            except ValueError:
                pass
        rows.append(SweepRow(float(gamma), sup_c, traj.blowup_suspect, float(traj.budget[-1]),
                             float(traj.t[-1]), traj.cause, k_sup, jg, j2g))
    return rows
