"""JSON run configuration: parsing, validation and construction of run objects.

Every validation failure raises :class:`ConfigError` whose message starts
with the dotted path of the offending key, e.g. ``step_policy.alpha: ...``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels, targets, theory
from .targets import ConfigurationError


class ConfigError(ConfigurationError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class TargetConfig:
    family: str
    p: float = 2.0
    sigma: float = 1.0
    mean: Optional[list] = None
    A_csv: Optional[str] = None
    b_csv: Optional[str] = None
    tau: float = 1.0
    q: float = 2.0
    wp_override: Optional[float] = None
    log_normalizer: float = 0.0


@dataclass
class KernelConfig:
    family: str
    c: float = 1.0
    beta: float = -0.5
    bandwidth: float = 1.0
    median_heuristic: bool = False


@dataclass
class ParticlesConfig:
    n: int
    d: int
    seed: int = 0
    init: str = "standard_normal"


@dataclass
class StepPolicyConfig:
    mode: str
    gamma: Optional[float] = None
    alpha: float = 2.0
    epsilon: Optional[float] = None


@dataclass
class TpProfileConfig:
    form: str
    lambda_t: Optional[float] = None
    lambda_bv: Optional[float] = None


@dataclass
class RunConfig:
    target: TargetConfig
    kernel: KernelConfig
    particles: ParticlesConfig
    steps: int
    step_policy: StepPolicyConfig
    tp_profile: Optional[TpProfileConfig] = None
    output_dir: str = "output"
    snapshot_every: int = 0
    timing: bool = True
    base_dir: Path = field(default_factory=Path.cwd)

    # construction -----------------------------------------------------------

    def build_target(self):
        t, d = self.target, self.particles.d
        try:
            if t.family == targets.GAUSSIAN:
                return targets.gaussian(dim=d, mean=t.mean, sigma=t.sigma, wp_override=t.wp_override)
            if t.family == targets.GENERALIZED_GAUSSIAN:
                return targets.generalized_gaussian(
                    t.p, dim=d, mean=t.mean, sigma=t.sigma, wp_override=t.wp_override
                )
            A = targets.load_csv_matrix(self._resolve(t.A_csv))
            b = targets.load_csv_matrix(self._resolve(t.b_csv)).ravel()
            if A.shape[1] != d:
                raise ConfigError("target.A_csv", f"matrix has {A.shape[1]} columns, expected particles.d={d}")
            return targets.bayesian_lasso(
                A, b, tau=t.tau, q=t.q, log_normalizer=t.log_normalizer, wp_override=t.wp_override
            )
        except ConfigError:
            raise
        except ConfigurationError as exc:
            raise ConfigError("target", str(exc))

    def build_kernel(self, X0=None):
        k = self.kernel
        bandwidth = k.bandwidth
        if k.median_heuristic:
            if X0 is None:
                raise ConfigError("kernel.median_heuristic", "needs the initial ensemble")
            bandwidth = kernels.median_bandwidth(X0)
        return kernels.KernelSpec(k.family, self.particles.d, c=k.c, beta=k.beta, bandwidth=bandwidth)

    def build_profile(self, target):
        """Configured T_p profile, or the family default (None if unavailable)."""
        try:
            wp = target.pth_moment_root()
        except ConfigurationError as exc:
            if self.tp_profile is None:
                return None
            raise ConfigError("target.wp_override", str(exc))
        prof = self.tp_profile
        if prof is None:
            try:
                return theory.default_profile(target)
            except ConfigurationError:
                return None
        lam_bv = prof.lambda_bv
        if prof.form == targets.BOLLEY_VILLANI and lam_bv is None:
            try:
                lam_bv = theory.lambda_bv(target)
            except ConfigurationError as exc:
                raise ConfigError("tp_profile.lambda_bv", str(exc))
        try:
            return targets.TpProfile(prof.form, target.p_order, wp, lambda_t=prof.lambda_t, lambda_bv=lam_bv)
        except ConfigurationError as exc:
            raise ConfigError("tp_profile", str(exc))

    def build_policy(self):
        sp = self.step_policy
        return theory.StepPolicy(mode=sp.mode, gamma=sp.gamma, alpha=sp.alpha, epsilon=sp.epsilon)

    def _resolve(self, name):
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path

    def output_path(self):
        return self._resolve(self.output_dir)


# parsing ----------------------------------------------------------------------

_REAL = "real"
_INT = "integer"
_BOOL = "boolean"
_STR = "string"
_VEC = "vector"


def _coerce(path, value, kind):
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == _VEC:
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(path, f"expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if not _is_number(value):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if kind == _INT:
        if float(value) != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _section(doc, path, schema, required=()):
    """Validate one JSON object against ``{key: kind}``; returns coerced values."""
    if not isinstance(doc, dict):
        raise ConfigError(path, f"expected an object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    for key in required:
        if key not in doc:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
    out = {}
    for key, kind in schema.items():
        if key in doc and doc[key] is not None:
            sub = f"{path}.{key}" if path else key
            out[key] = doc[key] if kind is None else _coerce(sub, doc[key], kind)
    return out


def _choice(path, value, options):
    if value not in options:
        raise ConfigError(path, f"must be one of {list(options)}, got {value!r}")
    return value


def parse_config(text, base_dir=None):
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}")
    top = _section(
        doc,
        "",
        {
            "target": None,
            "kernel": None,
            "particles": None,
            "steps": _INT,
            "step_policy": None,
            "tp_profile": None,
            "output_dir": _STR,
            "snapshot_every": _INT,
            "timing": _BOOL,
        },
        required=("target", "kernel", "particles", "steps", "step_policy"),
    )

    t = _section(
        top["target"],
        "target",
        {
            "family": _STR,
            "p": _REAL,
            "sigma": _REAL,
            "mean": _VEC,
            "A_csv": _STR,
            "b_csv": _STR,
            "tau": _REAL,
            "q": _REAL,
            "wp_override": _REAL,
            "log_normalizer": _REAL,
        },
        required=("family",),
    )
    _choice("target.family", t["family"], targets.FAMILIES)
    if t["family"] == targets.GENERALIZED_GAUSSIAN and "p" not in t:
        raise ConfigError("target.p", "missing required key for generalized_gaussian")
    if t["family"] == targets.BAYESIAN_LASSO:
        for key in ("A_csv", "b_csv"):
            if key not in t:
                raise ConfigError(f"target.{key}", "missing required key for bayesian_lasso")
        if t.get("q", 2.0) < 2:
            raise ConfigError("target.q", "must be >= 2")
        if t.get("tau", 1.0) <= 0:
            raise ConfigError("target.tau", "must be > 0")
    if t["family"] == targets.GENERALIZED_GAUSSIAN and t["p"] < 2:
        raise ConfigError("target.p", "must be >= 2")
    if t.get("sigma", 1.0) <= 0:
        raise ConfigError("target.sigma", "must be > 0")
    if t.get("wp_override", 0.0) < 0:
        raise ConfigError("target.wp_override", "must be >= 0")

    k = _section(
        top["kernel"],
        "kernel",
        {"family": _STR, "c": _REAL, "beta": _REAL, "bandwidth": _REAL, "median_heuristic": _BOOL},
        required=("family",),
    )
    try:
        k["family"] = kernels.canonical_family(k["family"])
    except ValueError as exc:
        raise ConfigError("kernel.family", str(exc))
    if k["family"] == kernels.IMQ:
        if not -1.0 < k.get("beta", -0.5) < 0.0:
            raise ConfigError("kernel.beta", "must lie in (-1, 0) for the inverse multiquadric")
        if k.get("c", 1.0) <= 0:
            raise ConfigError("kernel.c", "must be > 0")
        if k.get("median_heuristic"):
            raise ConfigError("kernel.median_heuristic", "only applies to gaussian_rbf")
    elif k.get("bandwidth", 1.0) <= 0:
        raise ConfigError("kernel.bandwidth", "must be > 0")

    pa = _section(
        top["particles"],
        "particles",
        {"n": _INT, "d": _INT, "seed": _INT, "init": _STR},
        required=("n", "d"),
    )
    if pa["n"] < 1:
        raise ConfigError("particles.n", "must be >= 1")
    if pa["d"] < 1:
        raise ConfigError("particles.d", "must be >= 1")
    if not 0 <= pa.get("seed", 0) < 2**64:
        raise ConfigError("particles.seed", "must be a 64-bit unsigned integer")
    _choice("particles.init", pa.get("init", "standard_normal"), ("standard_normal",))
    if "mean" in t and len(t["mean"]) != pa["d"]:
        raise ConfigError("target.mean", f"has length {len(t['mean'])}, expected particles.d={pa['d']}")

    if top["steps"] < 0:
        raise ConfigError("steps", "must be >= 0")

    sp = _section(
        top["step_policy"],
        "step_policy",
        {"mode": _STR, "gamma": _REAL, "alpha": _REAL, "epsilon": _REAL},
        required=("mode",),
    )
    _choice("step_policy.mode", sp["mode"], theory.MODES)
    if sp.get("alpha", 2.0) <= 1:
        raise ConfigError("step_policy.alpha", "must be > 1")
    if "gamma" in sp and sp["gamma"] <= 0:
        raise ConfigError("step_policy.gamma", "must be > 0")
    if sp["mode"] == theory.FIXED and "gamma" not in sp:
        raise ConfigError("step_policy.gamma", "missing required key for fixed mode")
    if sp["mode"] == theory.THEORY:
        if "epsilon" not in sp:
            raise ConfigError("step_policy.epsilon", "missing required key for theory mode")
    if "epsilon" in sp and sp["epsilon"] <= 0:
        raise ConfigError("step_policy.epsilon", "must be > 0")

    prof = None
    if "tp_profile" in top:
        pr = _section(
            top["tp_profile"],
            "tp_profile",
            {"form": _STR, "lambda_t": _REAL, "lambda_bv": _REAL},
            required=("form",),
        )
        _choice("tp_profile.form", pr["form"], (targets.TALAGRAND, targets.BOLLEY_VILLANI))
        if pr["form"] == targets.TALAGRAND and not pr.get("lambda_t", 0.0) > 0:
            raise ConfigError("tp_profile.lambda_t", "talagrand form needs lambda_t > 0")
        if "lambda_bv" in pr and pr["lambda_bv"] <= 0:
            raise ConfigError("tp_profile.lambda_bv", "must be > 0")
        prof = TpProfileConfig(**pr)

    snapshot_every = top.get("snapshot_every", 0)
    if snapshot_every < 0:
        raise ConfigError("snapshot_every", "must be >= 0")

    return RunConfig(
        target=TargetConfig(**t),
        kernel=KernelConfig(**k),
        particles=ParticlesConfig(**pa),
        steps=top["steps"],
        step_policy=StepPolicyConfig(**sp),
        tp_profile=prof,
        output_dir=top.get("output_dir", "output"),
        snapshot_every=snapshot_every,
        timing=top.get("timing", True),
        base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}")
    return parse_config(text, base_dir=path.parent)
