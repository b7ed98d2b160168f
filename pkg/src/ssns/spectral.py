"""Fourier representation on the periodic square and Littlewood-Paley shells.

Coefficients are stored in the real-to-complex (``rfft2``) layout with shape
``(n, n//2 + 1)`` and normalized so that

    f(x) = sum_xi fhat(xi) exp(i xi . x),    fhat = rfft2(f) / n**2.

With this convention a coefficient pair ``fhat(+-xi) = 1/2`` is the physical
field ``cos(xi . x)`` and the L2 norm is the root-mean-square over the torus,
``||f||^2 = mean |f|^2 = sum_xi |fhat(xi)|^2`` (Parseval, full plane).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

KINDS = ("scalar", "vorticity", "velocity")


@dataclass(frozen=True)
class Grid:
    """Uniform ``n x n`` grid on ``[0, 2 pi)^2``."""

    n: int
    length: float = TWO_PI
    d: int = 2

    def __post_init__(self):
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        if self.d != 2:
            raise ValueError("only d = 2 grids are supported")
        if not np.isclose(self.length, TWO_PI):
            raise ValueError("domain period is fixed at 2 pi")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n // 2 + 1)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def kx(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, 1.0 / self.n).reshape(-1, 1)

    @cached_property
    def ky(self) -> np.ndarray:
        return np.fft.rfftfreq(self.n, 1.0 / self.n).reshape(1, -1)

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each rfft column in full-plane Parseval sums."""
        w = np.full(self.shape, 2.0)
        w[:, 0] = 1.0
        w[:, -1] = 1.0
        return w

    def __hash__(self):
        return hash((self.n, self.d))

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.n, self.d) == (other.n, other.d)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real field; vector fields carry a leading axis of 2."""

    grid: Grid
    coeffs: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        shape = self.grid.shape
        expected = (2, *shape) if self.kind == "velocity" else shape
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {expected}")

    @property
    def is_vector(self) -> bool:
        return self.kind == "velocity"

    def with_coeffs(self, coeffs: np.ndarray, kind: str | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.kind if kind is None else kind)

    def to_physical(self) -> np.ndarray:
        return to_physical(self.grid, self.coeffs)

    def norm(self) -> float:
        return l2_norm(self)

    @classmethod
    def zeros(cls, grid: Grid, kind: str = "scalar") -> "SpectralField":
        shape = (2, *grid.shape) if kind == "velocity" else grid.shape
        return cls(grid, np.zeros(shape, dtype=complex), kind)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray, kind: str = "scalar") -> "SpectralField":
        return cls(grid, to_spectral(grid, np.asarray(values, dtype=float)), kind)


def to_spectral(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.fft.rfft2(values, axes=(-2, -1)) / grid.n**2


def to_physical(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.irfft2(coeffs * grid.n**2, s=(grid.n, grid.n), axes=(-2, -1))


def weighted_sum_sq(grid: Grid, coeffs: np.ndarray) -> float:
    """Full-plane sum of ``|coeffs|^2`` over all leading axes."""
    sq = coeffs.real**2 + coeffs.imag**2
    if sq.ndim == 3:
        sq = sq.sum(axis=0)
    return float(np.sum(grid.weights * sq))


def l2_norm(f: SpectralField) -> float:
    return np.sqrt(weighted_sum_sq(f.grid, f.coeffs))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Real L2 pairing <f, g> (mean over the torus)."""
    prod = (np.conj(f.coeffs) * g.coeffs).real
    if prod.ndim == 3:
        prod = prod.sum(axis=0)
    return float(np.sum(f.grid.weights * prod))


def hermitian_defect(f: SpectralField) -> float:
    """Largest violation of coeffs(-xi) = conj(coeffs(xi)) in the self-conjugate columns."""
    c = f.coeffs
    worst = 0.0
    for col in (0, -1):
        v = c[..., col]
        mirrored = np.conj(np.roll(v[..., ::-1], 1, axis=-1))
        worst = max(worst, float(np.max(np.abs(v - mirrored), initial=0.0)))
    return worst


def linf_norm(f: SpectralField) -> float:
    """Max of the physical field's absolute value (vector magnitude for velocities)."""
    values = f.to_physical()
    if f.is_vector:
        return float(np.max(np.sqrt(np.sum(values**2, axis=0))))
    return float(np.max(np.abs(values)))


def single_mode(grid: Grid, kx: int, ky: int, amplitude: float = 1.0, phase: float = 0.0,
                kind: str = "scalar") -> SpectralField:
    """The real field ``amplitude * cos(kx x + ky y + phase)``."""
    n = grid.n
    if max(abs(kx), abs(ky)) >= n // 2:
        raise ValueError("mode not representable below the Nyquist frequency")
    coeffs = np.zeros(grid.shape, dtype=complex)
    if kx == 0 and ky == 0:
        coeffs[0, 0] = amplitude * np.cos(phase)
        return SpectralField(grid, coeffs, kind)
    a = 0.5 * amplitude * np.exp(1j * phase)
    if ky < 0 or (ky == 0 and kx < 0):
        kx, ky, a = -kx, -ky, np.conj(a)
    coeffs[kx % n, ky] += a
    if ky == 0:
        coeffs[-kx % n, 0] += np.conj(a)
    return SpectralField(grid, coeffs, kind)


def random_field(grid: Grid, rng: np.random.Generator, envelope=None, kind: str = "scalar") -> SpectralField:
    """Gaussian random real field with optional radial spectral envelope ``envelope(|xi|)``.

    The mean mode and the Nyquist lines are removed.
    """
    noise = rng.standard_normal((grid.n, grid.n))
    coeffs = to_spectral(grid, noise)
    if envelope is not None:
        coeffs = coeffs * envelope(grid.kmag)
    coeffs[0, 0] = 0.0
    coeffs[grid.n // 2, :] = 0.0
    coeffs[:, -1] = 0.0
    return SpectralField(grid, coeffs, kind)


# --------------------------------------------------------------------------
# Littlewood-Paley decomposition
# --------------------------------------------------------------------------

def _h(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def phi(x) -> np.ndarray:
    """Smooth cutoff: 1 on [0, 1], 0 on [2, inf), exp(-1/t) blend in between."""
    x = np.asarray(x, dtype=float)
    a = _h(2.0 - x)
    b = _h(x - 1.0)
    out = np.where(x <= 1.0, 1.0, 0.0)
    mid = (x > 1.0) & (x < 2.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        blend = a / (a + b)
    return np.where(mid, blend, out)


def psi(j: int, r) -> np.ndarray:
    """Shell symbol psi_j(r); psi_0 = phi(r), and zero for negative j."""
    r = np.asarray(r, dtype=float)
    if j < 0:
        return np.zeros_like(r)
    if j == 0:
        return phi(r)
    return phi(r / 2.0**j) - phi(r / 2.0 ** (j - 1))


def band_symbol(lo: int, hi: int, r) -> np.ndarray:
    """Symbol of sum_{j=lo}^{hi} P_j (telescoped)."""
    r = np.asarray(r, dtype=float)
    top = phi(r / 2.0**hi)
    if lo <= 0:
        return top
    return top - phi(r / 2.0 ** (lo - 1))


@dataclass(frozen=True)
class LPBank:
    grid: Grid
    jmax: int
    symbols: np.ndarray = field(repr=False)

    @property
    def shells(self) -> range:
        return range(self.jmax + 1)


def make_lp_bank(grid: Grid) -> LPBank:
    jmax = int(np.log2(grid.n // 2))
    if jmax + 1 < 3:
        raise ValueError("grid too small to host three shells")
    symbols = np.stack([psi(j, grid.kmag) for j in range(jmax + 1)])
    return LPBank(grid, jmax, symbols)


def project_shell(f: SpectralField, j: int, bank: LPBank) -> SpectralField:
    if j > bank.jmax:
        raise ValueError(f"shell {j} exceeds jmax = {bank.jmax}")
    if j < 0:
        return f.with_coeffs(np.zeros_like(f.coeffs))
    return f.with_coeffs(f.coeffs * bank.symbols[j])


def shell_l2_norms(f: SpectralField, bank: LPBank) -> np.ndarray:
    """||P_j f|| for every shell, by Parseval."""
    sq = np.abs(f.coeffs) ** 2
    if sq.ndim == 3:
        sq = sq.sum(axis=0)
    weighted = bank.grid.weights * sq
    return np.sqrt(np.einsum("jab,ab->j", bank.symbols**2, weighted))
