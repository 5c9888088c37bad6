"""Finite-particle SVGD: the empirical direction, the squared KSD and the update.

The population iteration pushes a measure forward by ``I - gamma g_mu``.
Here ``mu`` is the empirical measure of ``N`` particles, so

    g(y) = (1/N) sum_i [ grad V(x_i) k(x_i, y) - grad_1 k(x_i, y) ]

and ``||g||_H^2`` is the V-statistic of the Stein kernel.  Every bound that
the convergence argument derives for a general measure applies verbatim to
the empirical one.

Pairwise work is split into fixed row blocks (see ``_parallel``) so the
result is bit-identical for any worker count.
"""

import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io, kernels, theory
from ._parallel import map_blocks
from ._validation import as_points, as_vector
from .targets import ConfigurationError

log = logging.getLogger(__name__)


class StepRejected(RuntimeError):
    """An update produced non-finite positions; the step size was too large."""

    def __init__(self, iteration, gamma, n_bad):
        self.iteration = iteration
        self.gamma = gamma
        self.n_bad = n_bad
        super().__init__(
            f"step rejected at iteration {iteration}: gamma={gamma:.6g} produced "
            f"{n_bad} non-finite particle coordinates"
        )


@dataclass
class Ensemble:
    positions: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.positions = as_points(self.positions, name="positions")
        if self.positions.shape[0] < 1:
            raise ValueError("an ensemble needs at least one particle")

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]

    @classmethod
    def standard_normal(cls, n, d, seed=0):
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((n, d)), seed=seed)


@dataclass
class TraceRecord:
    iter: int
    gamma: float
    ksd2: float
    mean_grad_norm: float
    elapsed_ms: float


# pairwise blocks ------------------------------------------------------------------


def _block(spec, X, G, Y, GY=None, cross_sign=1.0):
    """Direction at the rows of Y and, if GY is given, Stein-kernel column sums.

    ``u(x_i, y) = G_i.G_y k - G_i.grad_2 k - G_y.grad_1 k + tr``; for radial
    kernels grad_2 k = -grad_1 k.
    """
    # grad_1 k(x_i, y_j) = 2 phi'_ij (x_i - y_j).  Working one coordinate at a
    # time keeps intermediates at (n, m) and the reductions off BLAS.
    d = X.shape[1]
    diffs = [X[:, k, None] - Y[None, :, k] for k in range(d)]
    s = diffs[0] * diffs[0]
    for k in range(1, d):
        s += diffs[k] * diffs[k]
    K, d1, d2 = kernels.profile(spec, s)
    n = X.shape[0]
    two_d1 = 2.0 * d1
    direction = np.empty_like(Y)
    for k in range(d):
        direction[:, k] = (K * G[:, k, None] - two_d1 * diffs[k]).sum(axis=0)
    direction /= n
    if GY is None:
        return direction, None
    gg = np.zeros_like(s)
    cross = np.zeros_like(s)
    for k in range(d):
        gg += G[:, k, None] * GY[None, :, k]
        cross += diffs[k] * (G[:, k, None] - GY[None, :, k])
    tr = -(spec.dim * two_d1 + 4.0 * s * d2)
    u = K * gg + cross_sign * two_d1 * cross + tr
    return direction, u.sum(axis=0)


def _direction_at(spec, X, G, Y):
    parts = map_blocks(lambda sl: _block(spec, X, G, Y[sl])[0], Y.shape[0])
    return np.concatenate(parts, axis=0)


def _terms(spec, X, G, cross_sign=1.0):
    """Direction at every particle and the V-statistic squared KSD."""
    parts = map_blocks(lambda sl: _block(spec, X, G, X[sl], G[sl], cross_sign), X.shape[0])
    direction = np.concatenate([p[0] for p in parts], axis=0)
    col_sums = np.concatenate([p[1] for p in parts])
    n = X.shape[0]
    return direction, float(np.sum(col_sums)) / (n * n)


def _check(ens, target, spec):
    if ens.d != spec.dim or ens.d != target.dim:
        raise ValueError(
            f"dimension mismatch: ensemble d={ens.d}, kernel dim={spec.dim}, target dim={target.dim}"
        )


# public operations -----------------------------------------------------------------


def direction(ens, target, spec, y):
    """Empirical optimal direction at a point y (or at each row of an array)."""
    _check(ens, target, spec)
    y_arr = np.asarray(y, dtype=float)
    Y = as_points(y_arr, spec.dim, "y")
    X = ens.positions
    out = _direction_at(spec, X, target.grad_potential(X), Y)
    return out[0] if y_arr.ndim == 1 else out


def stein_kernel(target, spec, x, y):
    """Stein kernel u(x, y) whose double average over the ensemble is ||g||_H^2."""
    x = as_vector(x, spec.dim, "x")
    y = as_vector(y, spec.dim, "y")
    gx = target.grad_potential(x)
    gy = target.grad_potential(y)
    grad_2 = kernels.grad1(spec, y, x)
    return float(
        (gx @ gy) * kernels.eval(spec, x, y)
        - gx @ grad_2
        - gy @ kernels.grad1(spec, x, y)
        + kernels.trace_mixed_second(spec, x, y)
    )


def ksd_squared(ens, target, spec, *, _cross_sign=1.0):
    """Squared kernelized Stein discrepancy of the ensemble (V-statistic)."""
    _check(ens, target, spec)
    X = ens.positions
    return _terms(spec, X, target.grad_potential(X), _cross_sign)[1]


def direction_norm_squared(ens, target, spec):
    """||g||_H^2 assembled from the four RKHS inner-product double sums.

    Expanding ``<g, g>_H`` with the reproducing property gives

    * sum k(x_i, x_j) <grad V_i, grad V_j>
    * - sum <grad V_i, grad_2 k(x_i, x_j)>, with grad_2 k(x, y) = grad_1 k(y, x)
    * - sum <grad V_j, grad_1 k(x_i, x_j)>
    * sum tr d1 d2 k(x_i, x_j)

    each divided by N^2.  This is an independent route to ``ksd_squared``.
    """
    _check(ens, target, spec)
    X = ens.positions
    G = target.grad_potential(X)
    K, g1, tr = kernels.pairwise(spec, X, X)
    n = X.shape[0]
    feature = np.sum(K * (G @ G.T))
    score_second = -np.einsum("ik,jik->", G, g1)
    score_first = -np.einsum("jk,ijk->", G, g1)
    return float((feature + score_second + score_first + np.sum(tr)) / (n * n))


def _advance(X, dirn, gamma, iteration):
    new = X - gamma * dirn
    bad = ~np.isfinite(new)
    if bad.any():
        raise StepRejected(iteration, gamma, int(bad.sum()))
    return new


def svgd_step(ens, target, spec, gamma, iteration=0):
    """One synchronous SVGD update; the direction uses the pre-step ensemble."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    _check(ens, target, spec)
    X = ens.positions
    with np.errstate(over="ignore", invalid="ignore"):
        dirn = _direction_at(spec, X, target.grad_potential(X), X)
        return Ensemble(_advance(X, dirn, gamma, iteration), seed=ens.seed)


# run orchestration -------------------------------------------------------------------


@dataclass
class RunResult:
    trace: list
    ensemble: Ensemble
    report: dict
    rejected: StepRejected = None

    @property
    def ok(self):
        return self.rejected is None


def _theory(config, target, spec, policy):
    """Theory report, or None when the target lacks a T_p profile."""
    profile = config.build_profile(target)
    eps = config.step_policy.epsilon
    if profile is None:
        if policy.mode == theory.THEORY:
            raise ConfigurationError(
                "tp_profile: theory step policy needs a T_p profile and W_p(pi, delta_0) "
                "(configure tp_profile and target.wp_override)"
            )
        return None
    return theory.theory_report(target, spec, profile, alpha=policy.alpha, epsilon=eps)


def run(config, write=True):
    """Run SVGD as configured and return the trace, final ensemble and report.

    A rejected step ends the run early; the partial trace is still returned
    (and written), with ``result.rejected`` set.
    """
    target = config.build_target()
    ens = Ensemble.standard_normal(config.particles.n, config.particles.d, config.particles.seed)
    spec = config.build_kernel(ens.positions)
    policy = config.build_policy()
    report = _theory(config, target, spec, policy)
    if policy.mode == theory.THEORY:
        policy.computed_gamma = report.gamma
        if not (report.clip_condition_ok and report.descent_condition_ok):
            log.warning("theory step size violates a step-size condition: %s", report)
    B = kernels.kernel_bound(spec)
    _, L1 = target.smoothness_constants()

    out_dir = config.output_path() if write else None
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)

    trace, rejected, X_final = _loop(
        ens.positions,
        target,
        spec,
        config.steps,
        step_fn=lambda gnorm, X, G, dirn, it: policy.step(gnorm, B, L1),
        timing=config.timing,
        out_dir=out_dir,
        snapshot_every=config.snapshot_every,
    )
    final = Ensemble(X_final, seed=ens.seed)
    summary = _summary(trace, rejected, kernel_spec=spec, policy=policy, report=report)
    if out_dir is not None:
        io.write_trace(Path(out_dir) / "trace.csv", trace)
        io.write_report(Path(out_dir) / "report.json", summary)
    return RunResult(trace, final, summary, rejected)


def _loop(X, target, spec, steps, step_fn, timing, out_dir, snapshot_every, update=None):
    """Shared iteration loop for SVGD (and, with ``update``, other samplers).

    Record ``i`` holds diagnostics of the i-th iterate and the step size the
    policy assigns to it; ``steps`` updates give ``steps + 1`` records.
    """
    start = time.perf_counter()
    trace = []
    with np.errstate(over="ignore", invalid="ignore"):
        # blow-ups surface as StepRejected, not as floating-point warnings
        X, rejected = _iterate(X, target, spec, steps, step_fn, timing, out_dir, snapshot_every, update, start, trace)
    if out_dir is not None:
        io.write_snapshot(out_dir, trace[-1].iter, X)
    return trace, rejected, X


def _iterate(X, target, spec, steps, step_fn, timing, out_dir, snapshot_every, update, start, trace):
    rejected = None
    for it in range(steps + 1):
        G = target.grad_potential(X)
        dirn, ksd2 = _terms(spec, X, G)
        gnorm = np.sqrt(max(ksd2, 0.0))
        gamma = step_fn(gnorm, X, G, dirn, it)
        elapsed = (time.perf_counter() - start) * 1e3 if timing else 0.0
        trace.append(TraceRecord(it, float(gamma), ksd2, float(np.mean(np.linalg.norm(G, axis=1))), elapsed))
        if out_dir is not None and snapshot_every > 0 and it % snapshot_every == 0 and it < steps:
            io.write_snapshot(out_dir, it, X)
        if it == steps:
            break
        try:
            X = _advance(X, dirn, gamma, it) if update is None else update(X, G, gamma, it)
        except StepRejected as exc:
            log.error("%s", exc)
            rejected = exc
            break
    return X, rejected


def _summary(trace, rejected, kernel_spec, policy, report):
    ksd = np.array([r.ksd2 for r in trace])
    gammas = np.array([r.gamma for r in trace[:-1]]) if len(trace) > 1 else np.array([trace[0].gamma])
    n_steps = len(trace) - 1
    out = {
        "status": "rejected" if rejected is not None else "ok",
        "steps_completed": n_steps,
        "initial_ksd2": float(ksd[0]),
        "final_ksd2": float(ksd[-1]),
        "average_ksd2": float(ksd[:-1].mean()) if n_steps > 0 else float(ksd[0]),
        "gamma_min": float(gammas.min()),
        "kernel": asdict(kernel_spec),
        "step_policy": {"mode": policy.mode, "alpha": policy.alpha, "gamma": policy.gamma},
        "theory": report.to_dict() if report is not None else None,
    }
    if rejected is not None:
        out["rejection"] = str(rejected)
    if report is not None and n_steps > 0:
        out["average_rate_bound"] = theory.average_rate_bound(report.kl0_bound, n_steps, out["gamma_min"])
    return out
