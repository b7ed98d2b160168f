import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssns.dissipation import DissipationSpec, multiplier_symbol
from ssns.io import checkpoint_roundtrip
from ssns.solver import (
    SolverConfig,
    SolverState,
    curl,
    dealias_mask,
    initial_vorticity,
    kinetic_energy,
    nonlinear_term,
    run,
    step,
    taylor_green,
    velocity_from_vorticity,
)
from ssns.spectral import Grid, SpectralField, inner, l2_norm, random_field, single_mode


def convolution_oracle(modes, n):
    """u . grad omega for omega = sum_k a_k e^{i k.x}, by explicit double sum over modes.

    ``modes`` maps integer wavevectors (full complex set) to coefficients.
    Returns the same kind of dict for the product.
    """
    out = {}
    for p, ap in modes.items():
        k2 = p[0] ** 2 + p[1] ** 2
        up = (1j * p[1] * ap / k2, -1j * p[0] * ap / k2)
        for q, aq in modes.items():
            m = (p[0] + q[0], p[1] + q[1])
            term = (up[0] * 1j * q[0] + up[1] * 1j * q[1]) * aq
            out[m] = out.get(m, 0.0) + term
    return out


def full_modes(f):
    """All nonzero Fourier coefficients of a real field as a dict over the full lattice."""
    n = f.grid.n
    full = np.fft.fft2(f.to_physical()) / n**2
    out = {}
    for a in range(n):
        for b in range(n):
            if abs(full[a, b]) > 1e-14:
                kx = a if a < n // 2 else a - n
                ky = b if b < n // 2 else b - n
                out[(kx, ky)] = full[a, b]
    return out


def test_biot_savart_single_mode(grid32):
    w = SpectralField.zeros(grid32, "vorticity")
    w.coeffs[1, 0] = 1.0
    w.coeffs[-1, 0] = 1.0
    u = velocity_from_vorticity(w)
    assert u.coeffs[0, 1, 0] == 0
    assert u.coeffs[1, 1, 0] == pytest.approx(-1j)
    assert 1 * u.coeffs[0, 1, 0] + 0 * u.coeffs[1, 1, 0] == 0  # xi . uhat at xi = (1, 0)
    assert not np.any(velocity_from_vorticity(SpectralField.zeros(grid32, "vorticity")).coeffs)


def test_biot_savart_rejects_mean(grid32):
    w = SpectralField.zeros(grid32, "vorticity")
    w.coeffs[0, 0] = 1.0
    with pytest.raises(ValueError):
        velocity_from_vorticity(w)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_biot_savart_inverts_curl(seed):
    grid = Grid(16)
    w = random_field(grid, np.random.default_rng(seed), kind="vorticity")
    u = velocity_from_vorticity(w)
    np.testing.assert_allclose(curl(u).coeffs, w.coeffs, atol=1e-14)
    div = grid.kx * u.coeffs[0] + grid.ky * u.coeffs[1]
    assert np.max(np.abs(div)) < 1e-14


def test_nonlinear_term_against_convolution(grid32):
    a = single_mode(grid32, 1, 2, 1.0, kind="vorticity")
    b = single_mode(grid32, 3, -1, 0.5, phase=0.7, kind="vorticity")
    c = single_mode(grid32, 0, 2, 0.3, kind="vorticity")
    w = a.with_coeffs(a.coeffs + b.coeffs + c.coeffs)
    got = full_modes(nonlinear_term(w))
    want = {k: v for k, v in convolution_oracle(full_modes(w), 32).items() if abs(v) > 1e-14}
    assert set(got) == set(want)
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-13)


def test_single_mode_nonlinearity_vanishes(grid32):
    w = single_mode(grid32, 2, 3, kind="vorticity")
    assert np.max(np.abs(nonlinear_term(w).coeffs)) < 1e-14


def test_shear_flow_is_steady_under_advection(grid32, rng):
    w = random_field(grid32, rng, kind="vorticity")
    shear = w.coeffs * (grid32.ky == 0)
    assert np.max(np.abs(nonlinear_term(w.with_coeffs(shear)).coeffs)) < 1e-14


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_advection_is_skew(seed):
    grid = Grid(32)
    w = initial_vorticity(grid, "random", seed, k_peak=6.0)
    assert abs(inner(nonlinear_term(w), w)) <= 1e-12 * l2_norm(w) ** 2 * max(1.0, l2_norm(w))


def test_dealias_mask_two_thirds():
    grid = Grid(64)
    mask = dealias_mask(grid)
    assert mask[21, 0] and not mask[22, 0]
    assert mask[0, 21] and not mask[0, 22]


def linear_config(grid, gamma=0.25, **kw):
    return SolverConfig(grid, DissipationSpec(gamma), advection=False, **kw)


def test_linear_decay_exact(grid32):
    config = linear_config(grid32, t_end=1.0, dt_max=0.05)
    w = single_mode(grid32, 2, 0, kind="vorticity")
    report = run(config, w)
    assert report.completed and report.state.t == pytest.approx(1.0, abs=1e-12)
    ratio = report.state.omega.coeffs[2, 0] / w.coeffs[2, 0]
    expected = math.exp(-multiplier_symbol(config.spec, 2.0) ** 2 * report.state.t)
    assert abs(ratio - expected) <= 1e-10 * expected


def test_taylor_green_decays_exactly(grid32):
    w0 = taylor_green(grid32)
    assert np.max(np.abs(nonlinear_term(w0).coeffs)) < 1e-14
    config = SolverConfig(grid32, DissipationSpec(0.0), t_end=0.5, dt_max=0.01)
    report = run(config, w0)
    decay = math.exp(-multiplier_symbol(config.spec, math.sqrt(2.0)) ** 2 * report.state.t)
    assert decay == pytest.approx(math.exp(-2.0 * report.state.t), rel=1e-14)
    np.testing.assert_allclose(report.state.omega.coeffs, w0.coeffs * decay, atol=1e-13)


def test_energy_identity(energy_run):
    report, E = energy_run["report"], energy_run["E"]
    assert report.completed
    final = kinetic_energy(report.state.omega)
    assert abs(final + report.state.diss_cum - 0.5 * E**2) / (0.5 * E**2) <= 1e-6


def test_initial_energy_normalization(grid32):
    w = initial_vorticity(grid32, "random", 3, energy=2.0)
    assert math.sqrt(2.0 * kinetic_energy(w)) == pytest.approx(2.0, rel=1e-13)
    w = initial_vorticity(grid32, "shell", 3, energy=0.5, shell=2)
    assert math.sqrt(2.0 * kinetic_energy(w)) == pytest.approx(0.5, rel=1e-13)
    with pytest.raises(ValueError):
        initial_vorticity(grid32, "vortex")


def test_inviscid_conservation():
    grid = Grid(64)
    config = SolverConfig(grid, dissipation=False, dt_max=2e-3, dt_min=1e-9, t_end=10.0)
    state = SolverState(initial_vorticity(grid, "random", 1, energy=1.0))
    e0 = kinetic_energy(state.omega)
    for _ in range(1000):
        state = step(state, config)
    assert state.step_count == 1000
    assert abs(kinetic_energy(state.omega) - e0) / e0 <= 1e-8


def test_zero_horizon_emits_one_record(grid32):
    seen = []
    report = run(SolverConfig(grid32, t_end=0.0), initial_vorticity(grid32), [seen.append])
    assert report.completed and report.steps_taken == 0
    assert len(seen) == 1 and seen[0].t == 0.0


def test_energy_decreases(grid32):
    config = SolverConfig(grid32, t_end=0.2, cadence=1, dt_max=5e-3)
    report = run(config, initial_vorticity(grid32, "random", 4))
    assert np.all(np.diff(report.energies) < 0)


def test_cadence_and_final_sample(grid32):
    seen = []
    config = SolverConfig(grid32, t_end=0.1, cadence=7, dt_max=0.01)
    report = run(config, initial_vorticity(grid32), [seen.append])
    steps = [s.step_count for s in seen]
    assert steps[0] == 0 and steps[-1] == report.state.step_count
    assert all(k % 7 == 0 for k in steps[:-1])


def test_restart_is_bit_identical(grid32):
    config = SolverConfig(grid32, t_end=0.2, dt_max=0.01)
    w0 = initial_vorticity(grid32, "random", 5)
    straight = run(config, w0).state
    half = run(replace(config, t_end=0.1), w0).state
    resumed = run(config, checkpoint_roundtrip(half, config.spec)).state
    assert resumed.step_count == straight.step_count
    assert resumed.t == straight.t and resumed.diss_cum == straight.diss_cum
    assert np.array_equal(resumed.omega.coeffs, straight.omega.coeffs)


def test_runs_are_deterministic(grid32):
    config = SolverConfig(grid32, t_end=0.1)
    a = run(config, initial_vorticity(grid32, "random", 9)).state
    b = run(config, initial_vorticity(grid32, "random", 9)).state
    assert np.array_equal(a.omega.coeffs, b.omega.coeffs) and a.diss_cum == b.diss_cum


def test_dt_underflow_is_reported(grid32):
    config = SolverConfig(grid32, dt_min=5e-3, dt_max=1e-2, t_end=1.0)
    w = initial_vorticity(grid32, "random", 0, energy=500.0)
    report = run(config, w)
    assert report.cause == "dt_underflow" and not report.completed


def test_nonfinite_state_is_reported(grid32):
    w = initial_vorticity(grid32, "random", 0)
    w.coeffs[1, 1] = np.nan
    report = run(SolverConfig(grid32, t_end=0.1), w)
    assert report.cause == "nan"


def test_config_validation(grid32):
    for bad in [dict(cfl_safety=1.5), dict(dt_min=1.0, dt_max=0.1), dict(t_end=-1.0), dict(cadence=0),
                dict(dealias_fraction=0.0)]:
        with pytest.raises(ValueError):
            SolverConfig(grid32, **bad)


def test_run_rejects_foreign_grid(grid32):
    with pytest.raises(ValueError):
        run(SolverConfig(Grid(16)), initial_vorticity(grid32))
