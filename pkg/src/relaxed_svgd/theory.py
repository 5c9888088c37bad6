"""Step sizes, transport constants and iteration budgets for SVGD under (L0, L1) smoothness.

Everything here is a closed-form function of target and kernel constants;
nothing depends on the particle trajectory except ``adaptive_step_size``,
which clips the step by the current RKHS norm of the direction.
"""

import math
from dataclasses import asdict, dataclass

from scipy import special

from . import kernels
from .targets import (
    BOLLEY_VILLANI,
    GAUSSIAN,
    GENERALIZED_GAUSSIAN,
    TALAGRAND,
    ConfigurationError,
    TpProfile,
)

SAFETY = 0.99
E_MINUS_1 = math.e - 1.0

FIXED = "fixed"
THEORY = "theory"
ADAPTIVE = "adaptive"
MODES = (FIXED, THEORY, ADAPTIVE)


@dataclass
class StepPolicy:
    mode: str = FIXED
    gamma: float = None
    alpha: float = 2.0
    epsilon: float = None
    computed_gamma: float = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown step policy mode {self.mode!r}")
        if not self.alpha > 1:
            raise ConfigurationError(f"alpha must be > 1, got {self.alpha}")
        if self.mode == FIXED and (self.gamma is None or not self.gamma > 0):
            raise ConfigurationError("fixed step policy needs gamma > 0")

    def step(self, g_norm_h, B, L1):
        """Step size to use at the current iterate."""
        if self.mode == FIXED:
            return float(self.gamma)
        if self.mode == THEORY:
            if self.computed_gamma is None:
                raise ConfigurationError("theory step policy has not been resolved")
            return float(self.computed_gamma)
        fallback = self.gamma if self.gamma is not None else self.computed_gamma
        return adaptive_step_size(g_norm_h, B, L1, self.alpha, fallback=fallback)


# initial KL and Gaussian moments -------------------------------------------


def gaussian_moment_bound(d, m):
    """Upper bound (2d)^{m/2} Gamma((m+1)/2) / sqrt(pi) on E||X||^m for X ~ N(0, I_d)."""
    if m < 2:
        raise ValueError(f"moment order must be >= 2, got {m}")
    return float((2.0 * d) ** (m / 2.0) * special.gamma((m + 1.0) / 2.0) / math.sqrt(math.pi))


def kl0_upper_bound(target, d=None, init="standard_normal"):
    """Upper bound on KL(N(0, I_d) | pi) from the growth polynomial and V(0)."""
    if init != "standard_normal":
        raise ConfigurationError(f"initial KL bound only holds for a standard normal start, not {init!r}")
    d = target.dim if d is None else int(d)
    if d != target.dim:
        raise ConfigurationError(f"dimension {d} does not match target dimension {target.dim}")
    p = target.q_order
    q1 = target.q_at_one
    return float(
        0.5 * d * math.log(1.0 / (2.0 * math.pi * math.e))
        + target.v_at_zero
        + q1 * d * math.sqrt(2.0 / math.pi)
        + q1 * (2.0 * d) ** ((p + 1.0) / 2.0) * special.gamma((p + 2.0) / 2.0) / (math.sqrt(math.pi) * (p + 1.0))
    )


# transport inequality -------------------------------------------------------


def j_eval(profile, r):
    """J(r) for the profile; increasing with J(0) = 0."""
    if r < 0:
        raise ValueError("J is defined for r >= 0")
    if profile.form == TALAGRAND:
        return math.sqrt(2.0 * r / profile.lambda_t)
    p = profile.p_order
    return profile.lambda_bv * (r ** (1.0 / p) + (r / 2.0) ** (1.0 / (2.0 * p)))


def _bv_objective(s, d, p):
    return 2.0 * (1.5 / s - (d / p) * math.log1p(-s) / s) ** (1.0 / p)


def golden_section_min(f, lo, hi, tol=1e-8):
    """Minimise a unimodal f on [lo, hi]; returns (argmin, min)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    e = a + inv_phi * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + inv_phi * (b - a)
            fe = f(e)
    x = 0.5 * (a + b)
    return x, min(f(x), fc, fe)


def lambda_bv_radial(d, p, tol=1e-8):
    """Bolley-Villani constant for pi proportional to exp(-||x||^p).

    The exponential moment has the closed form (1 - s)^{-d/p}, leaving a
    one-dimensional minimisation over s in (0, 1).
    """
    if p < 1 or d < 1:
        raise ValueError("need p >= 1 and d >= 1")
    _, val = golden_section_min(lambda s: _bv_objective(s, d, p), tol, 1.0 - tol, tol=tol)
    return float(val)


def lambda_bv(target, tol=1e-8):
    """Bolley-Villani constant for a (generalized) Gaussian target.

    ``exp(-||x - a||^p / (2 sigma^p))`` is the radial profile rescaled by
    ``(2 sigma^p)^{1/p}``; the constant scales linearly with that factor and
    is translation invariant.
    """
    if target.family not in (GENERALIZED_GAUSSIAN, GAUSSIAN):
        raise ConfigurationError(f"lambda_bv has no closed form for {target.family!r}")
    p = target.p
    scale = (2.0 * target.sigma**p) ** (1.0 / p)
    return scale * lambda_bv_radial(target.dim, p, tol=tol)


def default_profile(target):
    """T_p profile implied by the target family when none is configured."""
    wp = target.pth_moment_root()
    if target.family == GAUSSIAN:
        # strongly log-concave with modulus 1 / sigma^2
        return TpProfile(TALAGRAND, target.p_order, wp, lambda_t=1.0 / target.sigma**2)
    if target.family == GENERALIZED_GAUSSIAN:
        return TpProfile(BOLLEY_VILLANI, target.p_order, wp, lambda_bv=lambda_bv(target))
    raise ConfigurationError(f"no default T_p profile for {target.family!r}; configure tp_profile")


def c0(target, profile, kl0):
    """Q(J(kl0) + W_p(pi, delta_0)): bound on the mean gradient norm along the run."""
    if kl0 < 0:
        raise ValueError("kl0 must be nonnegative")
    return float(target.growth_poly(j_eval(profile, kl0) + profile.wp_to_origin))


# step sizes -----------------------------------------------------------------


def _short_denominator(B, L0, L1, c0_val, alpha):
    return alpha * B**2 * (alpha**2 + E_MINUS_1 * (max(L0, L1, 1.0) + max(L1, 1.0) * c0_val))


def theory_step_size(B, L0, L1, c0_val, alpha=2.0):
    """Fixed step strictly inside the admissible region (0.99 of the open bound)."""
    if not alpha > 1:
        raise ValueError("alpha must be > 1")
    if min(B, L0, L1, c0_val) < 0:
        raise ValueError("constants must be nonnegative")
    return SAFETY * (alpha - 1.0) / _short_denominator(B, L0, L1, c0_val, alpha)


def gamma_conditions(gamma, B, L0, L1, c0_val, alpha=2.0):
    """Check the two step-size conditions the fixed step is meant to imply.

    Returns ``(clip_ok, descent_ok)``: the RKHS clipping condition with the
    mean gradient bounded by ``c0_val`` and the condition making the descent
    factor at least 1/2.
    """
    clip = (alpha - 1.0) * min(1.0, 1.0 / L1 if L1 > 0 else math.inf) / (alpha * B**2 * (c0_val + 1.0))
    descent = 1.0 / (B**2 * (alpha**2 + E_MINUS_1 * (L0 + L1 * c0_val)))
    return gamma <= clip, gamma <= descent


def adaptive_step_size(g_norm_h, B, L1, alpha=2.0, fallback=None):
    """Clipped step (alpha - 1) min(1, 1/L1) / (alpha B ||g||_H).

    A zero direction means the ensemble is stationary; ``fallback`` is
    returned then (any positive step leaves it unchanged).
    """
    if not alpha > 1:
        raise ValueError("alpha must be > 1")
    scale = min(1.0, 1.0 / L1) if L1 > 0 else 1.0
    if not g_norm_h > 0:
        return float(fallback) if fallback is not None else 1.0
    return (alpha - 1.0) * scale / (alpha * B * g_norm_h)


def grad_growth_bound(L0, L1, grad_norm_at_x, delta):
    """Bound on ||grad V(x+)|| for ||x+ - x|| <= delta under (L0, L1) smoothness."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if L1 == 0:
        return grad_norm_at_x + L0 * delta
    grow = math.exp(delta * L1)
    return (L0 / L1) * math.expm1(delta * L1) + grad_norm_at_x * grow


def iteration_budget(kl0, gamma, epsilon):
    """Iterations after which the average squared KSD is at most epsilon."""
    if not (gamma > 0 and epsilon > 0) or kl0 < 0:
        raise ValueError("need kl0 >= 0, gamma > 0, epsilon > 0")
    if kl0 == 0:
        return 0
    return int(math.ceil(2.0 * kl0 / (gamma * epsilon)))


# report ---------------------------------------------------------------------


@dataclass
class TheoryReport:
    B: float
    L0: float
    L1: float
    Q1: float
    kl0_bound: float
    wp_to_origin: float
    c0: float
    gamma_max: float
    gamma: float
    iteration_budget: int
    epsilon: float
    alpha: float
    tp_form: str
    clip_condition_ok: bool
    descent_condition_ok: bool

    def to_dict(self):
        return asdict(self)


def theory_report(target, spec, profile=None, alpha=2.0, epsilon=None):
    """Collect every constant the fixed-step guarantee depends on."""
    profile = default_profile(target) if profile is None else profile
    B = kernels.kernel_bound(spec)
    L0, L1 = target.smoothness_constants()
    kl0 = kl0_upper_bound(target)
    c = c0(target, profile, max(kl0, 0.0))
    gamma = theory_step_size(B, L0, L1, c, alpha)
    clip_ok, descent_ok = gamma_conditions(gamma, B, L0, L1, c, alpha)
    budget = iteration_budget(max(kl0, 0.0), gamma, epsilon) if epsilon is not None else None
    return TheoryReport(
        B=B,
        L0=L0,
        L1=L1,
        Q1=target.q_at_one,
        kl0_bound=kl0,
        wp_to_origin=profile.wp_to_origin,
        c0=c,
        gamma_max=gamma / SAFETY,
        gamma=gamma,
        iteration_budget=budget,
        epsilon=epsilon,
        alpha=alpha,
        tp_form=profile.form,
        clip_condition_ok=bool(clip_ok),
        descent_condition_ok=bool(descent_ok),
    )


def average_rate_bound(kl0, n, gamma_min):
    """Right-hand side 2 KL / (n gamma) of the averaged squared-KSD guarantee."""
    return 2.0 * kl0 / (n * gamma_min)
