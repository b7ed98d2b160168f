"""Pseudo-spectral integration of the 2D vorticity equation

    d omega/dt + u . grad omega = -D^2 omega,    u = Biot-Savart(omega),

with an integrating-factor RK4 scheme: the dissipative part is propagated by
its exact semigroup and advection is treated explicitly with 2/3-rule
dealiasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .dissipation import DissipationSpec, symbol_squared
from .spectral import Grid, SpectralField, band_symbol, random_field, single_mode, to_physical, to_spectral

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Base class for aborted integrations."""

    cause = "error"


class DtUnderflowError(SolverError):
    cause = "dt_underflow"


class NonFiniteStateError(SolverError):
    cause = "nan"


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    spec: DissipationSpec = DissipationSpec()
    cfl_safety: float = 0.5
    dt_min: float = 1e-8
    dt_max: float = 1e-2
    dealias_fraction: float = 2.0 / 3.0
    t_end: float = 1.0
    cadence: int = 10
    advection: bool = True
    dissipation: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.cadence < 1:
            raise ValueError("output cadence must be a positive number of steps")


@dataclass(frozen=True)
class SolverState:
    omega: SpectralField
    t: float = 0.0
    step_count: int = 0
    dt: float = 0.0
    diss_cum: float = 0.0


def _inverse_laplacian(grid: Grid) -> np.ndarray:
    k2 = grid.k2.copy()
    k2[0, 0] = 1.0
    inv = 1.0 / k2
    inv[0, 0] = 0.0
    return inv


def _check_mean_free(omega: SpectralField) -> None:
    if abs(omega.coeffs[0, 0]) > 1e-12 * max(1.0, float(np.max(np.abs(omega.coeffs)))):
        raise ValueError("vorticity must have zero mean")


def velocity_from_vorticity(omega: SpectralField) -> SpectralField:
    """Biot-Savart law: u = (d psi/dy, -d psi/dx) with -Laplacian psi = omega.

    In Fourier space uhat = -i xi_perp omegahat / |xi|^2, xi_perp = (-xi_2, xi_1),
    so that div u = 0 and curl u = omega.
    """
    _check_mean_free(omega)
    grid = omega.grid
    psi = omega.coeffs * _inverse_laplacian(grid)
    u = np.stack([1j * grid.ky * psi, -1j * grid.kx * psi])
    return SpectralField(grid, u, "velocity")


def curl(u: SpectralField) -> SpectralField:
    grid = u.grid
    w = 1j * (grid.kx * u.coeffs[1] - grid.ky * u.coeffs[0])
    return SpectralField(grid, w, "vorticity")


def dealias_mask(grid: Grid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    cutoff = fraction * grid.n / 2.0
    return (np.abs(grid.kx) < cutoff) & (np.abs(grid.ky) < cutoff)


class _Kernels:
    """Precomputed spectral arrays for one configuration."""

    def __init__(self, config: SolverConfig):
        grid = config.grid
        self.grid = grid
        self.mask = dealias_mask(grid, config.dealias_fraction)
        self.inv_lap = _inverse_laplacian(grid)
        self.ikx = 1j * grid.kx
        self.iky = 1j * grid.ky
        if config.dissipation:
            self.m2 = symbol_squared(config.spec, grid.kmag)
        else:
            self.m2 = np.zeros(grid.shape)
        # per-mode weights turning |omegahat|^2 into energy / dissipation
        self.energy_w = 0.5 * grid.weights * self.inv_lap
        self.diss_w = grid.weights * self.m2 * self.inv_lap
        self.advection = config.advection

    def velocity_physical(self, w: np.ndarray) -> np.ndarray:
        psi = w * self.inv_lap
        return to_physical(self.grid, np.stack([self.iky * psi, -self.ikx * psi]))

    def advection_term(self, w: np.ndarray) -> np.ndarray:
        """Dealiased spectral coefficients of u . grad omega."""
        psi = w * self.inv_lap
        fields = to_physical(self.grid, np.stack([self.iky * psi, -self.ikx * psi, self.ikx * w, self.iky * w]))
        prod = fields[0] * fields[2] + fields[1] * fields[3]
        out = to_spectral(self.grid, prod)
        out *= self.mask
        out[0, 0] = 0.0
        return out

    def rhs(self, w: np.ndarray) -> np.ndarray:
        if not self.advection:
            return np.zeros_like(w)
        return -self.advection_term(w)

    def energy(self, w: np.ndarray) -> float:
        return float(np.sum(self.energy_w * (w.real**2 + w.imag**2)))

    def diss_rate(self, w: np.ndarray) -> float:
        return float(np.sum(self.diss_w * (w.real**2 + w.imag**2)))


_KERNEL_CACHE: dict[SolverConfig, _Kernels] = {}


def _kernels(config: SolverConfig) -> _Kernels:
    k = _KERNEL_CACHE.get(config)
    if k is None:
        if len(_KERNEL_CACHE) > 8:
            _KERNEL_CACHE.clear()
        k = _KERNEL_CACHE[config] = _Kernels(config)
    return k


def nonlinear_term(omega: SpectralField, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    """u . grad omega, computed pseudo-spectrally with 2/3-rule dealiasing."""
    _check_mean_free(omega)
    config = SolverConfig(omega.grid, dealias_fraction=dealias_fraction)
    return omega.with_coeffs(_kernels(config).advection_term(omega.coeffs))


def kinetic_energy(omega: SpectralField) -> float:
    """0.5 ||u||^2 for the velocity induced by omega."""
    return 0.5 * float(np.sum(omega.grid.weights * _inverse_laplacian(omega.grid) * np.abs(omega.coeffs) ** 2))


def cfl_timestep(state: SolverState, config: SolverConfig) -> float:
    k = _kernels(config)
    u = k.velocity_physical(state.omega.coeffs)
    umax = float(np.max(np.sqrt(u[0] ** 2 + u[1] ** 2)))
    if not np.isfinite(umax):
        raise NonFiniteStateError(f"non-finite velocity at t = {state.t}")
    if umax == 0.0:
        return config.dt_max
    dt = min(config.cfl_safety * config.grid.dx / umax, config.dt_max)
    if dt < config.dt_min:
        raise DtUnderflowError(
            f"CFL step {dt:.3e} fell below dt_min = {config.dt_min:.3e} at t = {state.t:.6g} "
            f"(|u|_inf = {umax:.3e}); resolution exhausted or blow-up suspected"
        )
    return dt


def step(state: SolverState, config: SolverConfig, dt: float | None = None) -> SolverState:
    """Advance one integrating-factor RK4 step.

    ``dt`` defaults to the CFL step. The dissipation integral is accumulated
    with the same stage weights as the state update.
    """
    k = _kernels(config)
    if dt is None:
        dt = cfl_timestep(state, config)
    w = state.omega.coeffs
    e_half = np.exp(-0.5 * dt * k.m2)
    e_full = e_half * e_half

    k1 = k.rhs(w)
    a = e_half * (w + 0.5 * dt * k1)
    k2 = k.rhs(a)
    b = e_half * w + 0.5 * dt * k2
    k3 = k.rhs(b)
    c = e_full * w + dt * e_half * k3
    k4 = k.rhs(c)
    w_new = e_full * w + dt / 6.0 * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    w_new[0, 0] = 0.0

    dissipated = dt / 6.0 * (k.diss_rate(w) + 2.0 * k.diss_rate(a) + 2.0 * k.diss_rate(b) + k.diss_rate(c))

    if not np.all(np.isfinite(w_new)):
        raise NonFiniteStateError(f"non-finite vorticity after step {state.step_count + 1} at t = {state.t + dt}")
    return SolverState(
        omega=state.omega.with_coeffs(w_new),
        t=state.t + dt,
        step_count=state.step_count + 1,
        dt=dt,
        diss_cum=state.diss_cum + dissipated,
    )


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """omega = 2 A cos x cos y."""
    a = single_mode(grid, 1, 1, amplitude, kind="vorticity")
    b = single_mode(grid, 1, -1, amplitude, kind="vorticity")
    return a.with_coeffs(a.coeffs + b.coeffs)


def initial_vorticity(grid: Grid, family: str = "random", seed: int = 0, energy: float = 1.0,
                      k_peak: float = 4.0, shell: int = 2, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    """Named families of smooth mean-free initial vorticity.

    ``random`` and ``shell`` are rescaled so that ||u0||_L2 equals ``energy``;
    ``taylor_green`` uses ``energy`` as its amplitude.
    """
    if family == "taylor_green":
        return taylor_green(grid, energy)
    rng = np.random.default_rng(seed)
    if family == "random":
        f = random_field(grid, rng, lambda r: np.exp(-((r / k_peak) ** 2)), kind="vorticity")
    elif family == "shell":
        f = random_field(grid, rng, lambda r: band_symbol(shell, shell, r), kind="vorticity")
    else:
        raise ValueError(f"unknown initial family {family!r}")
    coeffs = f.coeffs * dealias_mask(grid, dealias_fraction)
    coeffs[0, 0] = 0.0
    f = f.with_coeffs(coeffs)
    scale = energy / np.sqrt(2.0 * kinetic_energy(f))
    return f.with_coeffs(f.coeffs * scale)


# --------------------------------------------------------------------------
# run loop
# --------------------------------------------------------------------------

@dataclass
class RunReport:
    cause: str
    state: SolverState
    steps_taken: int
    message: str = ""
    samples: int = 0
    energies: list = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.cause == "completed"


def run(config: SolverConfig, initial: SpectralField | SolverState,
        sinks: Iterable[Callable[[SolverState], None]] = (),
        checkpoint: Callable[[SolverState], None] | None = None) -> RunReport:
    """Integrate to ``config.t_end``, feeding snapshots to ``sinks``.

    Snapshots are emitted when ``step_count`` is a multiple of the cadence and
    once more at termination. A ``SolverState`` as ``initial`` resumes a run.
    """
    sinks = list(sinks)
    if isinstance(initial, SolverState):
        state = initial
    else:
        _check_mean_free(initial)
        state = SolverState(initial.with_coeffs(initial.coeffs.copy(), kind="vorticity"))
    if state.omega.grid != config.grid:
        raise ValueError("initial data lives on a different grid than the configuration")
    k = _kernels(config)

    emitted_step = None
    samples = 0
    energies = []

    def emit(s: SolverState):
        nonlocal emitted_step, samples
        if emitted_step == s.step_count:
            return
        emitted_step = s.step_count
        samples += 1
        energies.append(k.energy(s.omega.coeffs))
        for sink in sinks:
            sink(s)

    start = state.step_count
    if state.step_count % config.cadence == 0:
        emit(state)
    cause, message = "completed", ""
    # a step shorter than this is treated as having reached t_end
    t_slack = 1e-12 * max(1.0, config.t_end)
    try:
        while config.t_end - state.t > t_slack:
            dt = cfl_timestep(state, config)
            dt = min(dt, config.t_end - state.t)
            state = step(state, config, dt)
            if state.step_count % config.cadence == 0:
                emit(state)
            if checkpoint is not None and config.checkpoint_every and state.step_count % config.checkpoint_every == 0:
                checkpoint(state)
    except SolverError as exc:
        cause, message = exc.cause, str(exc)
        log.warning("integration aborted: %s", message)
    emit(state)
    if checkpoint is not None:
        checkpoint(state)
    return RunReport(cause, state, state.step_count - start, message, samples, energies)

