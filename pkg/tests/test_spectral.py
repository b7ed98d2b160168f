import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssns.solver import velocity_from_vorticity
from ssns.spectral import (
    Grid,
    SpectralField,
    band_symbol,
    hermitian_defect,
    l2_norm,
    linf_norm,
    make_lp_bank,
    phi,
    project_shell,
    psi,
    random_field,
    shell_l2_norms,
    single_mode,
)


def phi_oracle(x):
    # scalar re-evaluation of the cutoff, independent of the vectorized code
    if x <= 1:
        return 1.0
    if x >= 2:
        return 0.0
    a = math.exp(-1.0 / (2.0 - x))
    b = math.exp(-1.0 / (x - 1.0))
    return a / (a + b)


@pytest.mark.parametrize("n", [8, 12, 48, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid(n)


def test_grid_rejects_other_dimensions():
    with pytest.raises(ValueError):
        Grid(32, d=3)


@given(st.floats(min_value=0.0, max_value=1e4, allow_nan=False))
def test_phi_matches_scalar_oracle(x):
    assert abs(float(phi(x)) - phi_oracle(x)) <= 1e-15


@given(st.floats(min_value=0.0, max_value=3.0))
def test_phi_is_monotone(x):
    assert float(phi(x)) >= float(phi(x + 1e-3)) - 1e-15


def test_psi_examples():
    assert float(psi(0, 0.5)) == 1.0
    assert float(psi(1, 3.0)) == pytest.approx(phi_oracle(1.5), abs=1e-15)
    assert 0.0 < float(psi(1, 3.0)) < 1.0
    # the cutoff is symmetric about 1.5
    assert float(psi(1, 3.0)) == pytest.approx(0.5, abs=1e-15)
    assert float(psi(-1, 3.0)) == 0.0


@given(st.floats(min_value=0.0, max_value=2.0**12))
def test_partition_of_unity_pointwise(r):
    total = sum(float(psi(j, r)) for j in range(14))
    assert abs(total - 1.0) <= 1e-12


@given(st.integers(min_value=1, max_value=12), st.floats(min_value=0.0, max_value=2.0**14))
def test_shell_support(j, r):
    if r <= 2.0 ** (j - 1) or r >= 2.0 ** (j + 1):
        assert float(psi(j, r)) == 0.0


@given(st.integers(0, 6), st.integers(0, 6), st.floats(0.0, 300.0))
def test_band_symbol_telescopes(lo, span, r):
    hi = lo + span
    direct = sum(float(psi(j, r)) for j in range(lo, hi + 1))
    assert float(band_symbol(lo, hi, r)) == pytest.approx(direct, abs=1e-14)


def test_bank_too_small():
    bank = make_lp_bank(Grid(16))
    assert bank.jmax == 3


def test_roundtrip_and_hermitian(grid32, rng):
    values = rng.standard_normal((32, 32))
    f = SpectralField.from_physical(grid32, values)
    np.testing.assert_allclose(f.to_physical(), values, atol=1e-13)
    assert hermitian_defect(f) < 1e-14


def test_l2_norm_is_rms(grid32, rng):
    values = rng.standard_normal((32, 32))
    f = SpectralField.from_physical(grid32, values)
    assert l2_norm(f) == pytest.approx(np.sqrt(np.mean(values**2)), rel=1e-13)


def test_single_mode_is_cosine(grid32):
    f = single_mode(grid32, 3, -2, amplitude=1.5, phase=0.3)
    x = np.arange(32) * grid32.dx
    X, Y = np.meshgrid(x, x, indexing="ij")
    np.testing.assert_allclose(f.to_physical(), 1.5 * np.cos(3 * X - 2 * Y + 0.3), atol=1e-13)
    assert linf_norm(single_mode(grid32, 3, -2, amplitude=1.5)) == pytest.approx(1.5, rel=1e-12)


def test_linf_examples(grid32):
    assert linf_norm(SpectralField.zeros(grid32)) == 0.0
    a = single_mode(grid32, 1, 0, 1.0)
    b = single_mode(grid32, 0, 3, 0.5)
    assert linf_norm(a.with_coeffs(a.coeffs + b.coeffs)) <= 1.5 + 1e-12


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_mode_at_dyadic_radius_is_in_one_shell(grid64, bank64, j):
    f = single_mode(grid64, 2**j, 0, amplitude=math.sqrt(2.0))
    assert l2_norm(f) == pytest.approx(1.0, rel=1e-14)
    norms = shell_l2_norms(f, bank64)
    expected = np.zeros(bank64.jmax + 1)
    expected[j] = 1.0
    np.testing.assert_allclose(norms, expected, atol=1e-15)
    np.testing.assert_allclose(project_shell(f, j, bank64).coeffs, f.coeffs, atol=1e-15)


def test_mode_two_octaves_up_is_outside(grid64, bank64):
    f = single_mode(grid64, 16, 0)
    assert l2_norm(project_shell(f, 2, bank64)) == 0.0


def test_projection_index_range(grid64, bank64):
    f = single_mode(grid64, 1, 1)
    assert l2_norm(project_shell(f, -1, bank64)) == 0.0
    with pytest.raises(ValueError):
        project_shell(f, bank64.jmax + 1, bank64)


def test_projections_sum_to_field(grid64, bank64, rng):
    f = random_field(grid64, rng)
    total = sum(project_shell(f, j, bank64).coeffs for j in bank64.shells)
    resolved = grid64.kmag <= 2.0**bank64.jmax
    assert np.max(np.abs(total - f.coeffs)[resolved]) <= 1e-12


def test_grid_partition_of_unity(grid64, bank64):
    resolved = grid64.kmag <= 2.0**bank64.jmax
    assert np.max(np.abs(bank64.symbols.sum(axis=0) - 1.0)[resolved]) <= 1e-12
    assert np.all((bank64.symbols >= 0) & (bank64.symbols <= 1))


def test_almost_orthogonality(grid64, bank64, rng):
    f = random_field(grid64, rng)
    s = np.sum(shell_l2_norms(f, bank64) ** 2)
    assert 0.5 * l2_norm(f) ** 2 <= s <= 2.0 * l2_norm(f) ** 2


def test_zero_field_norms(grid64, bank64):
    assert not np.any(shell_l2_norms(SpectralField.zeros(grid64), bank64))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_vorticity_velocity_shell_ratio(seed):
    grid = Grid(32)
    bank = make_lp_bank(grid)
    w = random_field(grid, np.random.default_rng(seed), kind="vorticity")
    u = velocity_from_vorticity(w)
    a, b = shell_l2_norms(w, bank), shell_l2_norms(u, bank)
    for j in bank.shells:
        if b[j] > 0:
            assert 2.0 ** (j - 1) <= a[j] / b[j] <= 2.0 ** (j + 1)
