import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from ssns.diagnostics import shell_spectrum
from ssns.dissipation import DissipationSpec
from ssns.solver import initial_vorticity
from ssns.spectral import Grid, SpectralField, make_lp_bank, shell_l2_norms
from ssns.transformers import LittlewoodPaleyTransformer, ShellSpectrumTransformer


@pytest.fixture
def fields():
    grid = Grid(32)
    return np.stack([initial_vorticity(grid, "random", s).to_physical() for s in range(4)])


def test_lp_transformer_matches_direct(fields):
    t = LittlewoodPaleyTransformer().fit(fields)
    out = t.transform(fields)
    bank = make_lp_bank(Grid(32))
    assert out.shape == (4, bank.jmax + 1)
    want = shell_l2_norms(SpectralField.from_physical(Grid(32), fields[2]), bank)
    np.testing.assert_allclose(out[2], want, rtol=1e-13)
    assert list(t.get_feature_names_out()) == [f"shell_{j}" for j in range(bank.jmax + 1)]


def test_shell_spectrum_transformer(fields):
    t = ShellSpectrumTransformer(gamma=0.25)
    out = t.fit_transform(fields)
    grid = Grid(32)
    want = shell_spectrum(SpectralField.from_physical(grid, fields[0], "vorticity"), make_lp_bank(grid),
                          DissipationSpec(0.25)).b
    np.testing.assert_allclose(out[0], want, rtol=1e-13)
    np.testing.assert_allclose(t.besov_norm(fields), out.sum(axis=1))


def test_velocity_input(fields):
    grid = Grid(32)
    from ssns.solver import velocity_from_vorticity

    u = np.stack([velocity_from_vorticity(SpectralField.from_physical(grid, f, "vorticity")).to_physical()
                  for f in fields])
    from_u = ShellSpectrumTransformer(field="velocity").fit_transform(u)
    from_w = ShellSpectrumTransformer().fit_transform(fields)
    np.testing.assert_allclose(from_u, from_w, rtol=1e-10, atol=1e-14)


def test_params_and_clone():
    t = ShellSpectrumTransformer(field="vorticity", gamma=0.5)
    assert t.get_params() == {"field": "vorticity", "gamma": 0.5}
    c = clone(t.set_params(gamma=0.1))
    assert c.gamma == 0.1


def test_validation(fields):
    with pytest.raises(NotFittedError):
        LittlewoodPaleyTransformer().transform(fields)
    with pytest.raises(ValueError):
        LittlewoodPaleyTransformer(field="pressure").fit(fields)
    with pytest.raises(ValueError):
        LittlewoodPaleyTransformer().fit(fields[0])
    with pytest.raises(ValueError):
        LittlewoodPaleyTransformer().fit(fields[:, :, :16])
    t = LittlewoodPaleyTransformer().fit(fields)
    with pytest.raises(ValueError):
        t.transform(fields[:, ::2, ::2])
    bad = fields.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        LittlewoodPaleyTransformer().fit(bad)


def test_pipeline(fields):
    pipe = make_pipeline(ShellSpectrumTransformer(), FunctionTransformer(np.log1p))
    assert pipe.fit_transform(fields).shape == (4, 5)
