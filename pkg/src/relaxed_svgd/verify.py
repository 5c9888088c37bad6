"""Numerical checks of every inequality and identity the convergence argument uses.

Each check runs at a fixed seed and returns a :class:`CheckResult`.  Two
mutation knobs exist so the suite can be shown to have teeth:
``b_scale`` multiplies the kernel bound B wherever a check uses it, and
``stein_cross_sign`` flips the cross term of the Stein kernel inside the
KSD estimator.
"""

import math
import sys
from dataclasses import dataclass

import numpy as np

from . import kernels, svgd, targets, theory


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class Mutation:
    b_scale: float = 1.0
    stein_cross_sign: float = 1.0


# instance generators --------------------------------------------------------------


def random_kernel(rng, d):
    if rng.random() < 0.5:
        return kernels.KernelSpec.imq(d, c=rng.uniform(0.5, 2.0), beta=rng.uniform(-0.9, -0.1))
    return kernels.KernelSpec.rbf(d, bandwidth=rng.uniform(0.3, 3.0))


def random_target(rng, d, family=None):
    family = family or rng.choice(targets.FAMILIES)
    if family == targets.GAUSSIAN:
        return targets.gaussian(d, mean=rng.normal(size=d), sigma=rng.uniform(0.5, 2.0))
    if family == targets.GENERALIZED_GAUSSIAN:
        return targets.generalized_gaussian(rng.choice([2.0, 3.0, 4.0]), d, mean=rng.normal(size=d))
    m = int(rng.integers(d, d + 4))
    return targets.bayesian_lasso(
        rng.normal(size=(m, d)), rng.normal(size=m), tau=rng.uniform(0.1, 2.0), q=rng.choice([2.0, 3.0, 4.0])
    )


def _tight_instances():
    """Instances where the kernel-bound inequalities are (nearly) equalities.

    A single particle with d=1 and an RBF kernel of bandwidth 1 makes
    sqrt(phi(0)) = sqrt(-2 d phi'(0)) = B; at the particle itself the
    direction is grad V(x) phi(0) and its derivative is -2 phi'(0).
    """
    spec = kernels.KernelSpec.rbf(1, bandwidth=1.0)
    far = targets.gaussian(1, mean=[50.0])
    at_mode = targets.gaussian(1, mean=[0.0])
    x = np.zeros((1, 1))
    return [(svgd.Ensemble(x), far, spec), (svgd.Ensemble(x), at_mode, spec)]


def _random_instances(rng, count, max_n=20, max_d=5):
    out = []
    for _ in range(count):
        d = int(rng.integers(1, max_d + 1))
        n = int(rng.integers(1, max_n + 1))
        ens = svgd.Ensemble(rng.normal(size=(n, d)) * rng.uniform(0.5, 2.0))
        out.append((ens, random_target(rng, d), random_kernel(rng, d)))
    return out


def jacobian_fd(ens, target, spec, y, h=1e-5):
    """Central-difference Jacobian of the empirical direction at y (rows: outputs)."""
    d = spec.dim
    pts = np.concatenate([y + h * np.eye(d), y - h * np.eye(d)])
    vals = svgd.direction(ens, target, spec, pts)
    return ((vals[:d] - vals[d:]) / (2.0 * h)).T


# checks ---------------------------------------------------------------------------


def check_ksd_oracle(mut, count=100, seed=11):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for ens, target, spec in _random_instances(rng, count):
        a = svgd.ksd_squared(ens, target, spec, _cross_sign=mut.stein_cross_sign)
        b = svgd.direction_norm_squared(ens, target, spec)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst <= 1e-10, f"max relative gap {worst:.3e} over {count} instances (tol 1e-10)"


def check_norm_bound(mut, count=60, seed=12):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for ens, target, spec in _random_instances(rng, count) + _tight_instances():
        B = mut.b_scale * kernels.kernel_bound(spec)
        lhs = math.sqrt(max(svgd.ksd_squared(ens, target, spec), 0.0))
        mean_grad = np.mean(np.linalg.norm(target.grad_potential(ens.positions), axis=1))
        worst = max(worst, lhs - B * (mean_grad + 1.0))
    return worst <= 1e-8, f"max excess {worst:.3e} (tol 1e-8)"


def check_norm2_h(mut, count=40, points=10, seed=13):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    cases = [
        (e, t, s, e.positions[rng.integers(e.n, size=points)] + rng.normal(size=(points, e.d)))
        for e, t, s in _random_instances(rng, count)
    ]
    cases += [(e, t, s, e.positions) for e, t, s in _tight_instances()]
    for ens, target, spec, Y in cases:
        B = mut.b_scale * kernels.kernel_bound(spec)
        norm_h = math.sqrt(max(svgd.ksd_squared(ens, target, spec), 0.0))
        vals = np.linalg.norm(svgd.direction(ens, target, spec, Y), axis=1)
        worst = max(worst, float(np.max(vals - B * norm_h)))
    return worst <= 1e-8, f"max excess {worst:.3e} (tol 1e-8)"


def check_jacobian_bound(mut, count=40, points=5, seed=14):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    cases = [
        (e, t, s, e.positions[rng.integers(e.n, size=points)] + 0.5 * rng.normal(size=(points, e.d)))
        for e, t, s in _random_instances(rng, count)
    ]
    cases += [(e, t, s, e.positions) for e, t, s in _tight_instances()]
    for ens, target, spec, Y in cases:
        B = mut.b_scale * kernels.kernel_bound(spec)
        norm_h = math.sqrt(max(svgd.ksd_squared(ens, target, spec), 0.0))
        for y in Y:
            hs = np.linalg.norm(jacobian_fd(ens, target, spec, y), "fro")
            worst = max(worst, hs - B * norm_h)
    return worst <= 1e-4, f"max excess {worst:.3e} (tol 1e-4)"


def check_kernel_bound(mut, count=200, seed=15):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    specs = [random_kernel(rng, int(rng.integers(1, 6))) for _ in range(count)]
    specs.append(kernels.KernelSpec.rbf(1, bandwidth=1.0))
    for spec in specs:
        B = mut.b_scale * kernels.kernel_bound(spec)
        x = rng.normal(size=spec.dim)
        diag = max(kernels.eval(spec, x, x), kernels.trace_mixed_second(spec, x, x))
        worst = max(worst, diag - B * B)
    return worst <= 1e-12, f"max excess of k(x,x), tr(x,x) over B^2: {worst:.3e}"


def check_grad_growth(mut, count=2000, seed=16):
    rng = np.random.default_rng(seed)
    violations = 0
    total = 0
    for p in (2.0, 4.0):
        for d in (1, 2, 3):
            t = targets.generalized_gaussian(p, d, mean=rng.normal(size=d))
            L0, L1 = t.smoothness_constants()
            x = rng.normal(size=(count, d)) * 2.0
            step = rng.normal(size=(count, d)) * rng.uniform(0.0, 1.0, size=(count, 1))
            gx = np.linalg.norm(t.grad_potential(x), axis=1)
            gy = np.linalg.norm(t.grad_potential(x + step), axis=1)
            delta = np.linalg.norm(step, axis=1)
            bounds = np.array([theory.grad_growth_bound(L0, L1, g, dl) for g, dl in zip(gx, delta)])
            violations += int(np.sum(gy > bounds * (1 + 1e-12)))
            total += count
    return violations == 0, f"{violations} violations in {total} segments"


def check_smoothness(mut, count=100, seed=17):
    """Hessian norm <= L0 + L1 ||grad V|| and ||grad V(x)|| <= Q(||x||) at random points."""
    rng = np.random.default_rng(seed)
    worst_h = worst_q = -math.inf
    for _ in range(count):
        d = int(rng.integers(1, 5))
        t = random_target(rng, d)
        L0, L1 = t.smoothness_constants()
        x = rng.normal(size=d) * rng.uniform(0.1, 3.0)
        g = t.grad_potential(x)
        h = 1e-5 * max(1.0, float(np.linalg.norm(x)))
        H = np.stack([(t.grad_potential(x + h * e) - t.grad_potential(x - h * e)) / (2 * h) for e in np.eye(d)])
        hess = np.linalg.norm(0.5 * (H + H.T), 2)
        bound = L0 + L1 * np.linalg.norm(g)
        worst_h = max(worst_h, (hess - bound) / max(bound, 1.0))
        worst_q = max(worst_q, (np.linalg.norm(g) - t.growth_poly(np.linalg.norm(x))) / max(np.linalg.norm(g), 1.0))
    ok = worst_h <= 1e-5 and worst_q <= 1e-12
    return ok, f"max relative Hessian excess {worst_h:.3e}, growth excess {worst_q:.3e}"


def check_gaussian_moment(mut, samples=200_000, seed=18):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for d in (1, 2, 5):
        r = np.linalg.norm(rng.standard_normal((samples, d)), axis=1)
        for m in (2, 3, 4):
            v = r**m
            se = v.std(ddof=1) / math.sqrt(samples)
            worst = max(worst, (v.mean() - 3 * se - theory.gaussian_moment_bound(d, m)) / se)
    exact = {(1, 2): 1.0, (1, 4): 3.0, (2, 2): 2.0}
    gap = max(abs(theory.gaussian_moment_bound(d, m) / val - 1.0) for (d, m), val in exact.items())
    return worst <= 0 and gap <= 1e-6, f"max MC excess {worst:.2f} SE, closed-form gap {gap:.2e}"


def kl_mc(target, samples, rng):
    """MC estimate and SE of KL(N(0, I) | pi), with V carrying the log normalizer."""
    d = target.dim
    X = rng.standard_normal((samples, d))
    vals = -0.5 * d * math.log(2 * math.pi) - 0.5 * np.sum(X * X, axis=1) + target.potential(X)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def check_kl0_bound(mut, samples=200_000, seed=19):
    rng = np.random.default_rng(seed)
    gap = max(
        abs(theory.kl0_upper_bound(targets.gaussian(d)) - d * math.sqrt(2 / math.pi)) for d in (1, 2, 5)
    )
    worst = -math.inf
    for d in (1, 2, 3):
        t = targets.generalized_gaussian(4.0, d)
        est, se = kl_mc(t, samples, rng)
        worst = max(worst, (est - 3 * se - theory.kl0_upper_bound(t)) / se)
    return gap <= 1e-9 and worst <= 0, f"standard-normal gap {gap:.2e}, max MC excess {worst:.2f} SE"


def check_lambda_bv(mut):
    worst_lo = worst_hi = -math.inf
    for d, p in ((1, 2), (4, 2), (2, 4), (3, 3)):
        lam = theory.lambda_bv_radial(d, p)
        worst_lo = max(worst_lo, 2 * (1.5 + d / p) ** (1 / p) - 1e-6 - lam)
        worst_hi = max(worst_hi, lam - theory._bv_objective(0.5, d, p))
    ok = worst_lo <= 0 and worst_hi <= 0
    return ok, f"lower-bound excess {worst_lo:.2e}, s=0.5 excess {worst_hi:.2e}"


CHECKS = {
    "ksd_oracle": check_ksd_oracle,
    "mean_gradient_norm_bound": check_norm_bound,
    "norm2_h_pointwise": check_norm2_h,
    "jacobian_hs_bound": check_jacobian_bound,
    "kernel_bound": check_kernel_bound,
    "grad_growth": check_grad_growth,
    "smoothness_certificate": check_smoothness,
    "gaussian_moment": check_gaussian_moment,
    "kl0_bound": check_kl0_bound,
    "lambda_bv": check_lambda_bv,
}


def run_checks(name_filter=None, b_scale=1.0, stein_cross_sign=1.0, stream=None):
    """Run every check whose name contains ``name_filter``; print one line each."""
    stream = sys.stdout if stream is None else stream
    mut = Mutation(b_scale=b_scale, stein_cross_sign=stein_cross_sign)
    results = []
    for name, fn in CHECKS.items():
        if name_filter and name_filter not in name:
            continue
        passed, detail = fn(mut)
        res = CheckResult(name, bool(passed), detail)
        print(res.line(), file=stream, flush=True)
        results.append(res)
    return results
