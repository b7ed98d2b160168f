"""Blow-up progress diagnostics on Littlewood-Paley shells.

The central quantities are the weighted shell norms

    b_j = 2^((d+2) j / 2) ||P_j u||,      c = sum_j b_j,

the dyadic crossing times t_k of c past 2^k, the critical scale j_{k,u}
solving 2^k = 2^((d+2) j / 2) / j^gamma, and the envelopes that b_j is
expected to respect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .dissipation import DissipationSpec, dissipation_rate
from .solver import SolverState, kinetic_energy, velocity_from_vorticity
from .spectral import LPBank, SpectralField, shell_l2_norms


@dataclass(frozen=True)
class ShellSpectrum:
    b: np.ndarray
    d: int = 2

    @property
    def jmax(self) -> int:
        return len(self.b) - 1

    def besov_c(self) -> float:
        return besov_c(self)


def shell_weights(jmax: int, d: int = 2) -> np.ndarray:
    return 2.0 ** ((d + 2) * np.arange(jmax + 1) / 2.0)


def shell_spectrum(f: SpectralField, bank: LPBank, spec: DissipationSpec | None = None) -> ShellSpectrum:
    """b_j = 2^((d+2)j/2) ||P_j u|| (vorticity input is converted to velocity)."""
    d = 2 if spec is None else spec.d
    u = velocity_from_vorticity(f) if f.kind == "vorticity" else f
    norms = shell_l2_norms(u, bank)
    return ShellSpectrum(shell_weights(bank.jmax, d) * norms, d)


def besov_c(s: ShellSpectrum) -> float:
    return float(np.sum(s.b))


def solve_jku(k: int, spec: DissipationSpec) -> float:
    """Root j > 0 of 2^k = 2^((d+2)j/2) / j^gamma (the larger root when gamma > 0).

    Solved in log form f(j) = (d+2)j/2 - gamma log2(j) - k, which is convex with
    its minimum at j* = 2 gamma / ((d+2) ln 2).
    """
    if k < 1:
        raise ValueError("j_{k,u} is only defined for k >= 1")
    slope = (spec.d + 2) / 2.0
    if spec.gamma == 0:
        return k / slope

    def f(j):
        return slope * j - spec.gamma * math.log2(j) - k

    lo = spec.gamma / (slope * math.log(2.0))
    if f(lo) >= 0:
        raise ValueError(f"no sign change for k = {k}, gamma = {spec.gamma}: k too small")
    hi = max(2.0 * lo, k / slope + 1.0)
    while f(hi) <= 0:
        hi *= 2.0
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(root)) > 1e-10 * k:
        raise RuntimeError(f"j_ku residual {f(root):.3e} too large")
    return root


def solve_jku_symbol(k: int, spec: DissipationSpec) -> float:
    """Same critical scale with the dissipation's j^(2 gamma) weakening instead of j^gamma."""
    return solve_jku(k, DissipationSpec(2.0 * spec.gamma, spec.d))


class ThresholdTracker:
    """Records t_k, the first time c(t) >= 2^k, by linear interpolation between samples."""

    def __init__(self, E: float):
        self.E = float(E)
        self.t_k: dict[int, float] = {}
        self.k_current: int | None = None
        self._last: tuple[float, float] | None = None

    def update(self, t: float, c: float) -> list[int]:
        """Feed one sample; returns the levels newly crossed."""
        crossed = []
        if self.k_current is None:
            if c > 0:
                k0 = math.floor(math.log2(c))
                self.t_k[k0] = t
                self.k_current = k0
                crossed.append(k0)
        else:
            t0, c0 = self._last
            k = self.k_current + 1
            while c >= 2.0**k:
                frac = (2.0**k - c0) / (c - c0)
                self.t_k[k] = t0 + frac * (t - t0)
                self.k_current = k
                crossed.append(k)
                k += 1
        self._last = (t, c)
        return crossed

    @property
    def times(self) -> list[tuple[int, float]]:
        return sorted(self.t_k.items())


@dataclass
class BarrierReport:
    k: int
    j_ku: float
    C: float
    envelope: np.ndarray
    margins: np.ndarray

    @property
    def breach(self) -> bool:
        return bool(np.any(self.margins > 0))


def barrier_envelope(jmax: int, k: int, j_ku: float, C: float) -> np.ndarray:
    j = np.arange(jmax + 1)
    return C * 2.0**k * 2.0 ** ((j_ku - j) / 10.0)


def _level(tracker) -> int:
    k = tracker.k_current if isinstance(tracker, ThresholdTracker) else tracker
    if k is None or k < 1:
        raise ValueError("barrier check needs a crossing level k >= 1")
    return int(k)


def barrier_check(s: ShellSpectrum, tracker: ThresholdTracker | int, C: float,
                  spec: DissipationSpec) -> BarrierReport:
    """Margins b_j - C 2^k 2^((j_{k,u} - j)/10) at the current crossing level."""
    k = _level(tracker)
    j_ku = solve_jku(k, spec)
    env = barrier_envelope(s.jmax, k, j_ku, C)
    return BarrierReport(k, j_ku, C, env, s.b - env)


def fit_barrier_constant(s: ShellSpectrum, k: int, spec: DissipationSpec) -> float:
    """Smallest C for which the barrier envelope at level k holds for ``s``."""
    j_ku = solve_jku(k, spec)
    return float(np.max(s.b / barrier_envelope(s.jmax, k, j_ku, 1.0)))


@dataclass(frozen=True)
class ActiveWindow:
    j_kd: int
    cut: int
    width: int
    log_k: float
    k: int

    @property
    def empty(self) -> bool:
        return self.width <= 0


def active_window(s: ShellSpectrum, tracker: ThresholdTracker | int) -> ActiveWindow:
    """Shells carrying all but 2^k/10 of c, split evenly between the two tails.

    ``j_kd`` is the largest shell whose prefix sum stays within 2^k/20 (-1 if
    none), ``cut`` the smallest shell whose suffix sum does; ``width`` counts
    the shells strictly between them.
    """
    k = tracker.k_current if isinstance(tracker, ThresholdTracker) else tracker
    if k is None or besov_c(s) < 2.0**k:
        raise ValueError("active window needs c >= 2^k at the current level")
    budget = 2.0**k / 20.0
    prefix = np.cumsum(s.b)
    low = np.nonzero(prefix <= budget)[0]
    j_kd = int(low[-1]) if low.size else -1
    suffix = np.concatenate([np.cumsum(s.b[::-1])[::-1], [0.0]])
    cut = int(np.nonzero(suffix <= budget)[0][0])
    return ActiveWindow(j_kd, cut, cut - j_kd - 1, math.log2(k) if k > 0 else float("-inf"), int(k))


def dissipation_budget(accumulator: float, u: SpectralField | Sequence[SpectralField], dt: float,
                       spec: DissipationSpec, weights: Sequence[float] | None = None) -> float:
    """accumulator + dt * <Du, Du>.

    With a sequence of stage snapshots and matching quadrature ``weights``
    (e.g. 1/6, 1/3, 1/3, 1/6 for RK4) the rate is averaged accordingly.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return accumulator
    if isinstance(u, SpectralField):
        return accumulator + dt * dissipation_rate(u, spec)
    if weights is None or len(weights) != len(u):
        raise ValueError("stage snapshots need one quadrature weight each")
    return accumulator + dt * sum(w * dissipation_rate(v, spec) for w, v in zip(weights, u))


def smoothness_constant(s0: ShellSpectrum, mu: float) -> float:
    """F = max_j b_j(0) 2^(mu j)."""
    return float(np.max(s0.b * 2.0 ** (mu * np.arange(s0.jmax + 1))))


def final_barrier_check(s: ShellSpectrum, t: float, M: float, K: float, F: float, mu: float) -> np.ndarray:
    """Margins b_j(t) - exp(K M t) F 2^(-mu j)."""
    j = np.arange(s.jmax + 1)
    return s.b - math.exp(K * M * t) * F * 2.0 ** (-mu * j)


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    c: float
    diss_cum: float
    k_current: int | None
    j_ku: float
    barrier_breach: bool
    b: np.ndarray = field(repr=False)


class DiagnosticsMonitor:
    """Solver sink turning snapshots into ``DiagnosticsRecord`` rows."""

    def __init__(self, bank: LPBank, spec: DissipationSpec, E: float | None = None, barrier_C: float = 1.0):
        self.bank = bank
        self.spec = spec
        self.E = E
        self.barrier_C = barrier_C
        self.tracker: ThresholdTracker | None = None
        self.records: list[DiagnosticsRecord] = []
        self.events: list[str] = []

    def __call__(self, state: SolverState) -> DiagnosticsRecord:
        energy = kinetic_energy(state.omega)
        if self.E is None:
            self.E = math.sqrt(2.0 * energy)
        if self.tracker is None:
            self.tracker = ThresholdTracker(self.E)
        s = shell_spectrum(state.omega, self.bank, self.spec)
        c = besov_c(s)
        for k in self.tracker.update(state.t, c):
            self.events.append(f"t_{k} = {self.tracker.t_k[k]:.17g}")
        k = self.tracker.k_current
        j_ku, breach = float("nan"), False
        if k is not None and k >= 1:
            report = barrier_check(s, self.tracker, self.barrier_C, self.spec)
            j_ku, breach = report.j_ku, report.breach
        rec = DiagnosticsRecord(state.t, energy, c, state.diss_cum, k, j_ku, breach, s.b)
        self.records.append(rec)
        return rec


def energy_envelope_violations(records: Sequence[DiagnosticsRecord], E: float, d: int = 2) -> int:
    """Count of samples/shells with b_j > E 2^((d+2)j/2) (up to rounding)."""
    count = 0
    for rec in records:
        env = E * shell_weights(len(rec.b) - 1, d)
        count += int(np.sum(rec.b > env * (1 + 1e-12)))
    return count
