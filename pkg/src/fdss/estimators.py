"""scikit-learn style wrappers over the closed-form parts of the package.

Rows of ``X`` are parameter quadruples ``(N, m, p, sigma)``. The wrappers
are stateless apart from validation; they exist so that parameter tables
can pass through sklearn pipelines and tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import MOutOfRange, NOutOfRange, POutOfRange, SigmaOutOfRange, SupercriticalM
from .params import ParameterSet, L_const, m_c, m_s, p_c, p_F, p_L, p_s, sigma_L
from .regions import REGION_TAGS, classify_region
from .selfmap import N_bar, sigma_bar, theta_exp

PARAM_NAMES = ("N", "m", "p", "sigma")


def check_params_array(X) -> np.ndarray:
    """Validate an ``(n, 4)`` table of quadruples; raise on the first bad row."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != 4:
        raise ValueError(f"expected 4 columns (N, m, p, sigma), got {X.shape[1]}")
    N, m, p, sigma = X.T
    for err, bad, what in (
        (NOutOfRange, N <= 2.0, "N must be > 2"),
        (MOutOfRange, (m <= 0.0) | (m >= 1.0), "m must lie in (0, 1)"),
        (SigmaOutOfRange, sigma <= -2.0, "sigma must be > -2"),
        (POutOfRange, p <= m, "p must be > m"),
    ):
        if bad.any():
            raise err(f"row {int(np.flatnonzero(bad)[0])}: {what}")
    return X


class CriticalExponentsTransformer(TransformerMixin, BaseEstimator):
    """Map quadruples to ``(m_c, m_s, p_L, p_F, p_c, p_s, L, sigma_L)``."""

    def fit(self, X, y=None):
        X = check_params_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        N, m, p, sigma = check_params_array(X).T
        return np.column_stack([m_c(N), m_s(N), p_L(m, sigma), p_F(N, m, sigma),
                                p_c(N, m, sigma), p_s(N, m, sigma),
                                L_const(m, p, sigma), sigma_L(m, p)])

    def get_feature_names_out(self, input_features=None):
        return np.array(["m_c", "m_s", "p_L", "p_F", "p_c", "p_s", "L", "sigma_L"])


class SelfMapTransformer(TransformerMixin, BaseEstimator):
    """``(N, m, p, sigma) -> (Nbar, m, p, sigmabar)``.

    The map is an involution, so :meth:`inverse_transform` applies it again.
    With ``with_theta=True`` a fifth column holds ``theta``.
    """

    def __init__(self, with_theta: bool = False):
        self.with_theta = with_theta

    def fit(self, X, y=None):
        X = self._check(X)
        self.n_features_in_ = X.shape[1]
        return self

    @staticmethod
    def _check(X):
        X = check_params_array(X)
        bad = X[:, 1] >= m_c(X[:, 0])
        if bad.any():
            raise SupercriticalM(f"row {int(np.flatnonzero(bad)[0])}: m >= m_c")
        return X

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        N, m, p, sigma = self._check(X).T
        cols = [N_bar(N, m), m, p, sigma_bar(N, m, p, sigma)]
        if self.with_theta:
            cols.append(theta_exp(N, m))
        return np.column_stack(cols)

    def inverse_transform(self, X):
        X = np.asarray(X, dtype=float)
        return self.transform(X[:, :4])

    def get_feature_names_out(self, input_features=None):
        names = ["Nbar", "m", "p", "sigmabar"]
        return np.array(names + (["theta"] if self.with_theta else []))


class RegionClassifier(ClassifierMixin, BaseEstimator):
    """Rule-based region tags; ``fit`` only records the label set.

    Rows with sigma < 0 have no letter tag and predict ``""``.
    """

    def fit(self, X, y=None):
        X = check_params_array(X)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array(REGION_TAGS + ("",))
        return self

    def _labels(self, X):
        check_is_fitted(self, "classes_")
        X = check_params_array(X)
        return [classify_region(ParameterSet(*map(float, row))) for row in X]

    def predict(self, X):
        return np.array([lab.tag or "" for lab in self._labels(X)], dtype=object)

    def predict_behaviors(self, X):
        return [sorted(b.value for b in lab.behaviors) for lab in self._labels(X)]
