"""scikit-learn transformers over batches of periodic fields.

Inputs are physical-space samples on a square power-of-two grid:
``(n_samples, n, n)`` for scalar or vorticity fields and
``(n_samples, 2, n, n)`` for velocity fields.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .diagnostics import shell_spectrum
from .dissipation import DissipationSpec
from .spectral import Grid, SpectralField, make_lp_bank, shell_l2_norms

_NDIM = {"scalar": 3, "vorticity": 3, "velocity": 4}


class LittlewoodPaleyTransformer(TransformerMixin, BaseEstimator):
    """Map each field to its Littlewood-Paley shell norms ||P_j f||, j = 0..jmax.

    Parameters
    ----------
    field : {"scalar", "vorticity", "velocity"}
        How samples are interpreted. Vorticity samples are measured as given;
        use ``ShellSpectrumTransformer`` for the velocity-based weights.
    """

    def __init__(self, field="scalar"):
        self.field = field

    def _validate(self, X, reset):
        if self.field not in _NDIM:
            raise ValueError(f"field must be one of {sorted(_NDIM)}, got {self.field!r}")
        X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
        if X.ndim != _NDIM[self.field]:
            raise ValueError(f"expected {_NDIM[self.field]}-d input for field={self.field!r}, got {X.ndim}-d")
        if self.field == "velocity" and X.shape[1] != 2:
            raise ValueError("velocity samples need two components on axis 1")
        n = X.shape[-1]
        if X.shape[-2] != n:
            raise ValueError("samples must be square")
        if reset:
            self.grid_ = Grid(n)
            self.bank_ = make_lp_bank(self.grid_)
            self.n_shells_ = self.bank_.jmax + 1
        elif n != self.grid_.n:
            raise ValueError(f"fitted on n = {self.grid_.n}, got n = {n}")
        return X

    def fit(self, X, y=None):
        self._validate(X, reset=True)
        return self

    def _fields(self, X):
        for sample in X:
            yield SpectralField.from_physical(self.grid_, sample, self.field)

    def _row(self, f):
        return shell_l2_norms(f, self.bank_)

    def transform(self, X):
        check_is_fitted(self, "bank_")
        X = self._validate(X, reset=False)
        return np.array([self._row(f) for f in self._fields(X)])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "bank_")
        return np.array([f"shell_{j}" for j in range(self.n_shells_)], dtype=object)


class ShellSpectrumTransformer(LittlewoodPaleyTransformer):
    """Map vorticity or velocity samples to b_j = 2^((d+2)j/2) ||P_j u||."""

    def __init__(self, field="vorticity", gamma=0.25):
        self.field = field
        self.gamma = gamma

    def _row(self, f):
        return shell_spectrum(f, self.bank_, DissipationSpec(self.gamma)).b

    def besov_norm(self, X):
        """c = sum_j b_j per sample."""
        return self.transform(X).sum(axis=1)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "bank_")
        return np.array([f"b_{j}" for j in range(self.n_shells_)], dtype=object)
