"""scikit-learn style wrappers around the samplers and the KSD.

The input matrix ``X`` is the initial particle cloud (one particle per
row); ``transform`` moves a cloud with the fitted settings.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import baselines, kernels, svgd, theory


def _kernel(family, dim, bandwidth, c, beta, X):
    family = kernels.canonical_family(family)
    if family == kernels.RBF and bandwidth == "median":
        bandwidth = kernels.median_bandwidth(X)
    return kernels.KernelSpec(family, dim, c=c, beta=beta, bandwidth=bandwidth)


def _check_target(target, X):
    if target.dim != X.shape[1]:
        raise ValueError(f"X has {X.shape[1]} columns but the target has dimension {target.dim}")


class SVGDSampler(TransformerMixin, BaseEstimator):
    """Run SVGD from the rows of ``X``.

    ``step_mode`` is ``"fixed"`` (needs ``gamma``) or ``"adaptive"``.  The
    theory step needs a transport profile and is reached through
    :func:`relaxed_svgd.theory.theory_report` and ``gamma`` instead.
    """

    def __init__(self, target, kernel="inverse_multiquadric", steps=100, step_mode="adaptive",
                 gamma=None, alpha=2.0, bandwidth=1.0, c=1.0, beta=-0.5):
        self.target = target
        self.kernel = kernel
        self.steps = steps
        self.step_mode = step_mode
        self.gamma = gamma
        self.alpha = alpha
        self.bandwidth = bandwidth
        self.c = c
        self.beta = beta

    def _run(self, X):
        X = check_array(X, dtype=np.float64)
        _check_target(self.target, X)
        if self.step_mode not in (theory.FIXED, theory.ADAPTIVE):
            raise ValueError(f"step_mode must be 'fixed' or 'adaptive', got {self.step_mode!r}")
        spec = _kernel(self.kernel, X.shape[1], self.bandwidth, self.c, self.beta, X)
        policy = theory.StepPolicy(mode=self.step_mode, gamma=self.gamma, alpha=self.alpha)
        B = kernels.kernel_bound(spec)
        L1 = self.target.smoothness_constants()[1]
        trace, rejected, X_out = svgd._loop(
            X, self.target, spec, int(self.steps),
            step_fn=lambda gnorm, *_: policy.step(gnorm, B, L1),
            timing=False, out_dir=None, snapshot_every=0,
        )
        if rejected is not None:
            raise rejected
        return spec, trace, X_out

    def fit(self, X, y=None):
        self.kernel_spec_, self.trace_, self.particles_ = self._run(X)
        self.n_features_in_ = self.particles_.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "particles_")
        return self._run(X)[2]

    def fit_transform(self, X, y=None):
        return self.fit(X).particles_


class LangevinSampler(TransformerMixin, BaseEstimator):
    """Unadjusted Langevin chains started at the rows of ``X``."""

    def __init__(self, target, gamma=0.1, steps=100, seed=0):
        self.target = target
        self.gamma = gamma
        self.steps = steps
        self.seed = seed

    def _run(self, X):
        X = check_array(X, dtype=np.float64)
        _check_target(self.target, X)
        state = baselines.LmcState(X, seed=self.seed)
        for _ in range(int(self.steps)):
            state = baselines.lmc_step(state, self.target, self.gamma)
        return state.positions

    def fit(self, X, y=None):
        self.particles_ = self._run(X)
        self.n_features_in_ = self.particles_.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "particles_")
        return self._run(X)

    def fit_transform(self, X, y=None):
        return self.fit(X).particles_


class SteinDiscrepancy(BaseEstimator):
    """Squared KSD of a particle cloud against ``target``; ``score`` is its negative."""

    def __init__(self, target, kernel="inverse_multiquadric", bandwidth=1.0, c=1.0, beta=-0.5):
        self.target = target
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.c = c
        self.beta = beta

    def _ksd(self, X):
        X = check_array(X, dtype=np.float64)
        _check_target(self.target, X)
        spec = _kernel(self.kernel, X.shape[1], self.bandwidth, self.c, self.beta, X)
        return svgd.ksd_squared(svgd.Ensemble(X), self.target, spec)

    def fit(self, X, y=None):
        self.ksd2_ = self._ksd(X)
        self.n_features_in_ = np.shape(X)[1]
        return self

    def score(self, X, y=None):
        return -self._ksd(X)
