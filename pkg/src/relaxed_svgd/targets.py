"""Target densities ``pi = exp(-V)`` and the constants the convergence theory needs.

Potentials use unit normalisation: ``V`` includes ``log Z`` so that
``exp(-V)`` integrates to one.  For the Bayesian LASSO the normalising
constant has no closed form; it is supplied through ``log_normalizer``
(default 0, i.e. the bare ``f(x) + tau ||x||_q^q``).

Each target carries

* ``L0, L1`` with ``||hess V(x)||_op <= L0 + L1 ||grad V(x)||``;
* a growth polynomial ``Q(r) = sum_i a_i r^{p_i}`` with ``||grad V(x)|| <= Q(||x||)``;
* ``p_order``, the transport order shared with the T_p profile.

The top exponent of ``Q`` for the generalized Gaussian is ``p - 1`` (the
gradient's growth) while ``p_order`` is ``p`` (the tail order).
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, special

from ._validation import as_points, require_finite

GAUSSIAN = "gaussian"
GENERALIZED_GAUSSIAN = "generalized_gaussian"
BAYESIAN_LASSO = "bayesian_lasso"
FAMILIES = (GAUSSIAN, GENERALIZED_GAUSSIAN, BAYESIAN_LASSO)

TALAGRAND = "talagrand"
BOLLEY_VILLANI = "bolley_villani"


class ConfigurationError(ValueError):
    """A target or profile cannot provide what was asked of it."""


@dataclass(frozen=True, eq=False)
class Target:
    family: str
    dim: int
    p_order: float
    L0: float
    L1: float
    q_coeffs: tuple
    v_at_zero: float
    mean: np.ndarray = None
    sigma: float = 1.0
    p: float = 2.0
    A: np.ndarray = None
    b: np.ndarray = None
    tau: float = 1.0
    q: float = 2.0
    log_normalizer: float = 0.0
    wp_override: float = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown target family {self.family!r}")
        if not self.q_coeffs:
            raise ConfigurationError("growth polynomial needs at least one term")
        for coef, expo in self.q_coeffs:
            if not coef > 0:
                raise ConfigurationError(f"growth polynomial coefficients must be positive, got {coef}")
            if expo < 0 or expo > self.p_order + 1e-12:
                raise ConfigurationError(f"growth exponent {expo} outside [0, p_order={self.p_order}]")

    # potentials -----------------------------------------------------------

    def potential(self, x):
        """V(x) for a vector or each row of an (n, d) array."""
        X = self._points(x)
        if self.family == BAYESIAN_LASSO:
            resid = X @ self.A.T - self.b
            val = np.sum(resid**2, axis=1) + self.tau * np.sum(np.abs(X) ** self.q, axis=1)
            val = val + self.log_normalizer
        else:
            r = np.linalg.norm(X - self.mean, axis=1)
            if self.family == GAUSSIAN:
                val = r**2 / (2.0 * self.sigma**2)
            else:
                val = r**self.p / (2.0 * self.sigma**self.p)
            val = val + self.log_normalizer
        return val[0] if np.ndim(x) == 1 else val

    def grad_potential(self, x):
        """grad V at a vector or at each row of an (n, d) array."""
        X = self._points(x)
        if self.family == BAYESIAN_LASSO:
            resid = X @ self.A.T - self.b
            g = 2.0 * resid @ self.A + self.tau * self.q * np.abs(X) ** (self.q - 1.0) * np.sign(X)
        else:
            diff = X - self.mean
            if self.family == GAUSSIAN:
                g = diff / self.sigma**2
            else:
                r = np.linalg.norm(diff, axis=1, keepdims=True)
                g = (self.p / (2.0 * self.sigma**self.p)) * r ** (self.p - 2.0) * diff
        return g[0] if np.ndim(x) == 1 else g

    def _points(self, x):
        X = as_points(x, self.dim, "x")
        return require_finite(X, "x")

    # assumption metadata --------------------------------------------------

    def smoothness_constants(self):
        return self.L0, self.L1

    def growth_poly(self, r):
        if np.any(np.asarray(r) < 0):
            raise ValueError("growth polynomial is defined for r >= 0")
        r = np.asarray(r, dtype=float)
        return sum(a * r**e for a, e in self.q_coeffs)

    @property
    def q_at_one(self):
        return float(sum(a for a, _ in self.q_coeffs))

    @property
    def q_order(self):
        """Top exponent of the growth polynomial."""
        return float(max(e for _, e in self.q_coeffs))

    def pth_moment_root(self):
        """W_p(pi, delta_0) with p = p_order.

        Exact for centred Gaussian and generalized Gaussian targets; with a
        non-zero mean the triangle-inequality bound ``W_p(pi, delta_a) + ||a||``
        is returned, which is what the step-size theory needs.
        """
        if self.wp_override is not None:
            return float(self.wp_override)
        if self.family == BAYESIAN_LASSO:
            raise ConfigurationError(
                "bayesian_lasso has no closed-form p-th moment; set target.wp_override"
            )
        shift = float(np.linalg.norm(self.mean))
        if self.family == GAUSSIAN:
            # p_order is 2 for the Gaussian
            root = self.sigma * np.sqrt(self.dim)
        else:
            root = (2.0 * self.sigma**self.p * self.dim / self.p) ** (1.0 / self.p)
        return float(root + shift)


def potential(target, x):
    return target.potential(x)


def grad_potential(target, x):
    return target.grad_potential(x)


def smoothness_constants(target):
    return target.smoothness_constants()


def growth_poly(target, r):
    return target.growth_poly(r)


def pth_moment_root(target):
    return target.pth_moment_root()


# constructors -------------------------------------------------------------


def _mean(mean, dim):
    if mean is None:
        if dim is None:
            raise ConfigurationError("either mean or dim must be given")
        return np.zeros(int(dim))
    mean = np.asarray(mean, dtype=float).ravel()
    if dim is not None and mean.shape[0] != dim:
        raise ConfigurationError(f"mean has length {mean.shape[0]}, expected dim={dim}")
    return mean


def _log_radial_mass(dim, p, scale):
    """log of the integral of exp(-(||x|| / scale)^p) over R^dim."""
    return (
        dim * np.log(scale)
        + 0.5 * dim * np.log(np.pi)
        + special.gammaln(dim / p + 1.0)
        - special.gammaln(dim / 2.0 + 1.0)
    )


def gaussian(dim=None, mean=None, sigma=1.0, wp_override=None):
    """Isotropic Gaussian N(mean, sigma^2 I)."""
    mean = _mean(mean, dim)
    d = mean.shape[0]
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    log_z = 0.5 * d * np.log(2.0 * np.pi * sigma**2)
    shift = float(np.linalg.norm(mean))
    q = [(1.0 / sigma**2, 1.0)]
    if shift > 0:
        q.append((shift / sigma**2, 0.0))
    return Target(
        family=GAUSSIAN,
        dim=d,
        p_order=2.0,
        L0=1.0 / sigma**2,
        L1=0.0,
        q_coeffs=tuple(q),
        v_at_zero=float(shift**2 / (2.0 * sigma**2) + log_z),
        mean=mean,
        sigma=float(sigma),
        p=2.0,
        log_normalizer=float(log_z),
        wp_override=wp_override,
    )


def generalized_gaussian(p, dim=None, mean=None, sigma=1.0, wp_override=None):
    """Density proportional to exp(-||x - a||^p / (2 sigma^p)), p >= 2."""
    mean = _mean(mean, dim)
    d = mean.shape[0]
    if not p >= 2:
        raise ConfigurationError(f"generalized_gaussian requires p >= 2, got {p}")
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    scale = (2.0 * sigma**p) ** (1.0 / p)
    log_z = float(_log_radial_mass(d, p, scale))
    c = p / (2.0 * sigma**p)
    shift = float(np.linalg.norm(mean))
    if shift == 0.0:
        q = [(c, p - 1.0)]
    else:
        # (r + |a|)^{p-1} <= 2^{p-2} (r^{p-1} + |a|^{p-1}) for p - 1 >= 1
        w = c * 2.0 ** (p - 2.0)
        q = [(w, p - 1.0), (w * shift ** (p - 1.0), 0.0)]
    return Target(
        family=GENERALIZED_GAUSSIAN,
        dim=d,
        p_order=float(p),
        L0=p * (p - 1.0) / (2.0 * sigma**p),
        L1=p - 1.0,
        q_coeffs=tuple(q),
        v_at_zero=float(shift**p / (2.0 * sigma**p) + log_z),
        mean=mean,
        sigma=float(sigma),
        p=float(p),
        log_normalizer=log_z,
        wp_override=wp_override,
    )


def _lasso_l0(a_op, atb, tau, q, dim):
    """L0 certifying ||hess V|| <= L0 + (q - 1) ||grad V|| for the LASSO potential.

    Inside the unit cube (max |x_i| <= 1) the penalty Hessian is at most
    tau q (q-1).  Outside, with m = max |x_i| > 1, the penalty gradient has
    norm >= tau q m^{q-1} and the data term has norm <= 2 a_op sqrt(d) m + 2 |A^T b|,
    which leaves the one-dimensional supremum of
    h(m) = 2 a_op sqrt(d) m - tau q m^{q-2} (m - 1) over m >= 1.
    """
    base = 2.0 * a_op
    if q == 2.0:
        return base + 2.0 * tau
    slope = 2.0 * a_op * np.sqrt(dim)

    def h(m):
        return slope * m - tau * q * m ** (q - 2.0) * (m - 1.0)

    def dh(m):
        return slope - tau * q * ((q - 1.0) * m ** (q - 2.0) - (q - 2.0) * m ** (q - 3.0))

    # h is concave on [1, inf) for q > 2, so its maximiser is the root of h'
    if dh(1.0) <= 0:
        sup_h = h(1.0)
    else:
        hi = 2.0
        while dh(hi) > 0:
            hi *= 2.0
        sup_h = h(optimize.brentq(dh, 1.0, hi, xtol=1e-14, rtol=1e-15))
    return base + (q - 1.0) * max(tau * q, 2.0 * atb + sup_h)


def bayesian_lasso(A, b, tau=1.0, q=2.0, log_normalizer=0.0, wp_override=None):
    """Density proportional to exp(-||A x - b||^2 - tau ||x||_q^q), q >= 2."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.shape[0]:
        raise ConfigurationError(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
    if not q >= 2:
        raise ConfigurationError(f"bayesian_lasso requires q >= 2, got {q}")
    if not tau > 0:
        raise ConfigurationError("tau must be positive")
    d = A.shape[1]
    a_op = float(np.linalg.norm(A.T @ A, 2))
    atb = float(np.linalg.norm(A.T @ b))
    q_terms = [(tau * q, q - 1.0)]
    if a_op > 0:
        q_terms.append((2.0 * a_op, 1.0))
    if atb > 0:
        q_terms.append((2.0 * atb, 0.0))
    return Target(
        family=BAYESIAN_LASSO,
        dim=d,
        p_order=float(q),
        L0=_lasso_l0(a_op, atb, tau, q, d),
        L1=q - 1.0,
        q_coeffs=tuple(sorted(q_terms, key=lambda t: -t[1])),
        v_at_zero=float(b @ b + log_normalizer),
        A=A,
        b=b,
        tau=float(tau),
        q=float(q),
        log_normalizer=float(log_normalizer),
        wp_override=wp_override,
    )


def load_csv_matrix(path):
    """Read a comma-separated matrix, one row per line, no header."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read matrix from {path}: {exc}")
    return data


# T_p profiles -------------------------------------------------------------


@dataclass(frozen=True)
class TpProfile:
    """Increasing function J with W_p(mu, pi) <= J(KL(mu | pi))."""

    form: str
    p_order: float
    wp_to_origin: float
    lambda_t: float = None
    lambda_bv: float = None

    def __post_init__(self):
        if self.form == TALAGRAND:
            if self.lambda_t is None or not self.lambda_t > 0:
                raise ConfigurationError("talagrand profile needs lambda_t > 0")
        elif self.form == BOLLEY_VILLANI:
            if self.lambda_bv is None or not self.lambda_bv > 0:
                raise ConfigurationError("bolley_villani profile needs lambda_bv > 0")
        else:
            raise ConfigurationError(f"unknown T_p form {self.form!r}")
        if not self.p_order >= 1:
            raise ConfigurationError("p_order must be >= 1")
        if self.wp_to_origin < 0:
            raise ConfigurationError("wp_to_origin must be nonnegative")
