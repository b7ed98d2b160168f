"""Fitted-constant checks of the inequalities behind the shell estimates.

Each check returns the two sides of an inequality on concrete fields; the
ensemble drivers take the worst ratio over seeded random samples. A bounded
ratio is the numerical content of "there is a universal constant".
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dissipation import DissipationSpec, shell_dissipation_factor, symbol_squared
from .solver import nonlinear_term, velocity_from_vorticity
from .spectral import (
    Grid,
    LPBank,
    SpectralField,
    band_symbol,
    inner,
    l2_norm,
    linf_norm,
    make_lp_bank,
    project_shell,
    psi,
    random_field,
    shell_l2_norms,
)

PHI_DEFINITION = (
    "phi(x) = 1 for x <= 1, 0 for x >= 2, h(2-x)/(h(2-x)+h(x-1)) on (1,2), "
    "h(t) = exp(-1/t) for t > 0 else 0"
)


# --------------------------------------------------------------------------
# exact products on a padded grid
# --------------------------------------------------------------------------

def _padded_physical(grid: Grid, coeffs: np.ndarray, m: int) -> np.ndarray:
    """Physical values of a band-limited field on an m x m grid (Nyquist lines dropped)."""
    n = grid.n
    h = n // 2
    out = np.zeros((*coeffs.shape[:-2], m, m // 2 + 1), dtype=complex)
    out[..., :h, :h] = coeffs[..., :h, :h]
    out[..., m - h + 1:, :h] = coeffs[..., h + 1:, :h]
    return np.fft.irfft2(out * m**2, s=(m, m), axes=(-2, -1))


def _gradient_physical(f: SpectralField, m: int) -> np.ndarray:
    g = f.grid
    return _padded_physical(g, np.stack([1j * g.kx * f.coeffs, 1j * g.ky * f.coeffs]), m)


def _truncate(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Spectral coefficients on ``grid`` of physical values sampled on a finer grid."""
    m = values.shape[-1]
    n = grid.n
    h = n // 2
    full = np.fft.rfft2(values) / m**2
    out = np.zeros(grid.shape, dtype=complex)
    out[:h, :h] = full[:h, :h]
    out[h + 1:, :h] = full[m - h + 1:, :h]
    return out


def advect_field(u: SpectralField, f: SpectralField) -> SpectralField:
    """(u . grad) f, exact when its band stays below the Nyquist frequency of ``f.grid``."""
    m = 2 * f.grid.n
    up = _padded_physical(u.grid, u.coeffs, m)
    df = _gradient_physical(f, m)
    return f.with_coeffs(_truncate(f.grid, up[0] * df[0] + up[1] * df[1]))


def _advect_pair(u: SpectralField, f: SpectralField, g: SpectralField) -> float:
    """<(u . grad) f, g>, exact for fields below the Nyquist frequency."""
    m = 2 * f.grid.n
    up = _padded_physical(u.grid, u.coeffs, m)
    df = _gradient_physical(f, m)
    gp = _padded_physical(g.grid, g.coeffs, m)
    return float(np.mean((up[0] * df[0] + up[1] * df[1]) * gp))


# --------------------------------------------------------------------------
# single-field checks
# --------------------------------------------------------------------------

def skew_adjoint_check(u_low: SpectralField, f: SpectralField) -> float:
    """<u . grad f, f>; zero when u is divergence free."""
    return _advect_pair(u_low, f, f)


def skew_scale(u_low: SpectralField, f: SpectralField) -> float:
    return linf_norm(u_low) * l2_norm(f) ** 2


@dataclass
class CommutatorResult:
    lhs: float
    bound: float
    ratio: float
    plain: float
    plain_ratio: float


def _multiplier(j: int, multiplier: str, r: np.ndarray) -> np.ndarray:
    if multiplier == "Q":
        return band_symbol(j - 3, j + 3, r)
    if multiplier == "P":
        return psi(j, r)
    raise ValueError(f"unknown multiplier {multiplier!r}")


def commutator_check(l: int, j: int, u_low: SpectralField, f: SpectralField, g: SpectralField,
                     bank: LPBank, multiplier: str = "Q") -> CommutatorResult:
    """<[M, P_l u . grad] f, g> against 2^l ||P_l u||_inf ||f|| ||g||.

    ``multiplier`` selects M: ``"Q"`` is sum_{|b| <= 3} P_{j+b}, ``"P"`` is P_j.
    ``plain`` is the uncommuted pairing <M (P_l u . grad f), g>, whose ratio
    to the same bound grows like 2^(j - l).
    """
    if l > j - 3:
        raise ValueError(f"commutator estimate needs l <= j - 3, got l = {l}, j = {j}")
    grid = f.grid
    sym = _multiplier(j, multiplier, grid.kmag)
    ul = project_shell(u_low, l, bank)
    Mf = f.with_coeffs(f.coeffs * sym)
    Mg = g.with_coeffs(g.coeffs * sym)
    plain = _advect_pair(ul, f, Mg)
    lhs = plain - _advect_pair(ul, Mf, g)
    bound = 2.0**l * linf_norm(ul) * l2_norm(f) * l2_norm(g)
    if bound == 0:
        return CommutatorResult(lhs, 0.0, 0.0 if lhs == 0 else np.inf, plain, 0.0 if plain == 0 else np.inf)
    return CommutatorResult(lhs, bound, abs(lhs) / bound, plain, abs(plain) / bound)


@dataclass
class TrichotomyResult:
    lhs: float
    rhs: float
    nonlinear: float
    dissipative: float
    bound: float
    dissipation_term: float
    ratio: float
    diss_ratio: float


def trichotomy_check(omega: SpectralField, j: int, bank: LPBank, spec: DissipationSpec) -> TrichotomyResult | None:
    """Both sides of the shell growth estimate for d/dt ||P_j omega||.

    The left side is evaluated from the instantaneous PDE right-hand side and
    split into advective and dissipative parts. ``bound`` is the nonlinear
    bracket built from the shell norms (coefficient 1), so ``ratio`` is the
    constant that the advective part needs. Returns None when P_j omega = 0.
    """
    d = spec.d
    pj = project_shell(omega, j, bank)
    npj = l2_norm(pj)
    if npj == 0:
        return None
    adv = nonlinear_term(omega)
    nonlinear = -inner(project_shell(adv, j, bank), pj) / npj
    m2 = symbol_squared(spec, omega.grid.kmag)
    dissipative = -inner(pj.with_coeffs(pj.coeffs * m2), pj) / npj

    a = shell_l2_norms(omega, bank)
    padded = np.concatenate([np.zeros(5), a, np.zeros(5)])

    def near(k):
        return padded[k:k + 11].sum()  # sum_{|alpha| <= 5} a_{k+alpha}

    low = sum(2.0 ** (d * k / 2.0) * a[k] for k in range(0, min(j + 5, bank.jmax) + 1))
    high = sum(2.0 ** (d * j / 2.0) * a[k] * near(k) for k in range(j, bank.jmax + 1))
    bound = low * near(j) + high
    diss_term = float(shell_dissipation_factor(j, spec)) * npj
    ratio = nonlinear / bound if bound > 0 else 0.0
    return TrichotomyResult(nonlinear + dissipative, bound - diss_term, nonlinear, dissipative, bound,
                            diss_term, ratio, -dissipative / diss_term)


# --------------------------------------------------------------------------
# ensembles
# --------------------------------------------------------------------------

def shell_localized(grid: Grid, rng: np.random.Generator, j: int, kind: str = "scalar") -> SpectralField:
    f = random_field(grid, rng, lambda r: psi(j, r), kind=kind)
    return f.with_coeffs(f.coeffs / l2_norm(f))


def band_localized(grid: Grid, rng: np.random.Generator, lo: int, hi: int, kind: str = "scalar") -> SpectralField:
    f = random_field(grid, rng, lambda r: band_symbol(lo, hi, r), kind=kind)
    return f.with_coeffs(f.coeffs / l2_norm(f))


def bernstein_fit(bank: LPBank, ensemble: int, seed: int = 0, d: int = 2) -> np.ndarray:
    """max over the ensemble of ||P_j f||_inf / (2^(dj/2) ||P_j f||_2), per shell."""
    rng = np.random.default_rng(seed)
    grid = bank.grid
    worst = np.zeros(bank.jmax + 1)
    for _ in range(ensemble):
        noise = random_field(grid, rng)
        for j in bank.shells:
            pj = project_shell(noise, j, bank)
            n2 = l2_norm(pj)
            if n2 > 0:
                worst[j] = max(worst[j], linf_norm(pj) / (2.0 ** (d * j / 2.0) * n2))
    return worst


def skew_ensemble(grid: Grid, seeds: Sequence[int], gradient: bool = False, shell_u: int = 1,
                  shell_f: int = 2) -> np.ndarray:
    """Normalized pairings |<u . grad f, f>| / (||u||_inf ||f||^2) over seeds.

    ``gradient=True`` replaces the divergence-free u by a gradient field
    (negative control).
    """
    out = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        w = band_localized(grid, rng, 0, shell_u, kind="vorticity")
        if gradient:
            pot = w.coeffs
            u = SpectralField(grid, np.stack([1j * grid.kx * pot, 1j * grid.ky * pot]), "velocity")
        else:
            u = velocity_from_vorticity(w)
        f = band_localized(grid, rng, shell_f - 1, shell_f + 1)
        out.append(abs(skew_adjoint_check(u, f)) / skew_scale(u, f))
    return np.array(out)


def commutator_fit(bank: LPBank, pairs: Sequence[tuple[int, int]], ensemble: int, seed: int = 0,
                   multiplier: str = "P", adversarial: bool = True) -> dict[tuple[int, int], tuple[float, float]]:
    """Worst (commutator ratio, plain ratio) for each (l, j) pair over the ensemble.

    With ``adversarial`` the test function g is aligned with M(P_l u . grad f),
    which maximizes the plain pairing; otherwise g is independent noise.
    """
    grid = bank.grid
    rng = np.random.default_rng(seed)
    out = {}
    for l, j in pairs:
        worst_c = worst_p = 0.0
        for _ in range(ensemble):
            u = velocity_from_vorticity(shell_localized(grid, rng, l, kind="vorticity"))
            f = band_localized(grid, rng, j - 1, j + 1)
            g = band_localized(grid, rng, j - 1, j + 1)
            if adversarial:
                af = advect_field(project_shell(u, l, bank), f)
                g = af.with_coeffs(af.coeffs * _multiplier(j, multiplier, grid.kmag))
                g = g.with_coeffs(g.coeffs / l2_norm(g))
            res = commutator_check(l, j, u, f, g, bank, multiplier)
            worst_c = max(worst_c, res.ratio)
            worst_p = max(worst_p, res.plain_ratio)
        out[(l, j)] = (worst_c, worst_p)
    return out


def trichotomy_fit(bank: LPBank, spec: DissipationSpec, ensemble: int, seed: int = 0) -> np.ndarray:
    """Largest advective ratio per shell over random two-shell vorticity fields."""
    grid = bank.grid
    rng = np.random.default_rng(seed)
    worst = np.zeros(bank.jmax + 1)
    top = bank.jmax - 1  # keep energy inside the dealiased band
    for _ in range(ensemble):
        j1, j2 = rng.integers(0, top + 1, size=2)
        a = shell_localized(grid, rng, int(j1), kind="vorticity")
        b = shell_localized(grid, rng, int(j2), kind="vorticity")
        w = a.with_coeffs(a.coeffs + rng.uniform(0.2, 2.0) * b.coeffs)
        w.coeffs[0, 0] = 0.0
        for j in bank.shells:
            res = trichotomy_check(w, j, bank, spec)
            if res is not None:
                worst[j] = max(worst[j], res.ratio)
    return worst


def dissipation_shell_constants(bank: LPBank, spec: DissipationSpec) -> tuple[float, float]:
    """Range of m(|xi|)^2 / (2^((d+2)j/2) / (1+j)^(2 gamma)) over each shell's support, j >= 1."""
    r = bank.grid.kmag
    m2 = symbol_squared(spec, r)
    lo, hi = np.inf, 0.0
    for j in range(1, bank.jmax + 1):
        support = (bank.symbols[j] > 0) & (r <= 2.0**bank.jmax)
        ratio = m2[support] / shell_dissipation_factor(j, spec)
        lo, hi = min(lo, ratio.min()), max(hi, ratio.max())
    return float(lo), float(hi)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

@dataclass
class CheckRecord:
    name: str
    shells: list
    ensemble: int
    fitted_constant: float
    max_ratio: float
    seed: int


def run_verification(n: int = 64, spec: DissipationSpec | None = None, ensemble: int = 20,
                     seed: int = 0) -> dict:
    """All fitted-constant checks, as a JSON-serializable report."""
    spec = spec or DissipationSpec()
    grid = Grid(n)
    bank = make_lp_bank(grid)
    checks = []

    bern = bernstein_fit(bank, ensemble, seed)
    checks.append(CheckRecord("bernstein", list(bank.shells), ensemble, float(bern.max()), float(bern.max()), seed))

    tri = trichotomy_fit(bank, spec, ensemble, seed)
    checks.append(CheckRecord("trichotomy", list(bank.shells), ensemble, float(tri.max()), float(tri.max()), seed))

    pairs = [(l, j) for j in range(3, bank.jmax) for l in range(0, j - 2)]
    comm = commutator_fit(bank, pairs, ensemble, seed, "P")
    cmax = max(v[0] for v in comm.values())
    checks.append(CheckRecord("commutator", [list(p) for p in pairs], ensemble, cmax, cmax, seed))
    pmax = max(v[1] for v in comm.values())
    checks.append(CheckRecord("commutator_plain_control", [list(p) for p in pairs], ensemble, pmax, pmax, seed))

    seeds = list(range(seed, seed + ensemble))
    skew = skew_ensemble(grid, seeds)
    checks.append(CheckRecord("skew_adjoint", [1, 2], ensemble, float(skew.max()), float(skew.max()), seed))
    neg = skew_ensemble(grid, seeds, gradient=True)
    checks.append(CheckRecord("skew_adjoint_gradient_control", [1, 2], ensemble, float(neg.min()),
                              float(neg.max()), seed))

    c1, c2 = dissipation_shell_constants(bank, spec)
    checks.append(CheckRecord("dissipation_shell_lower", list(range(1, bank.jmax + 1)), 0, c1, c1, seed))
    checks.append(CheckRecord("dissipation_shell_upper", list(range(1, bank.jmax + 1)), 0, c2, c2, seed))

    return {
        "phi": PHI_DEFINITION,
        "grid_n": n,
        "gamma": spec.gamma,
        "d": spec.d,
        "seed": seed,
        "checks": [asdict(c) for c in checks],
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
