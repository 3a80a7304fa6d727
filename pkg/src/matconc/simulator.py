"""Monte Carlo coverage harness.

Every stated inequality in the library is checked the same way: pair a
bound with a generator whose relevant moments are known in closed form,
simulate many independent trials, and compare the empirical rejection
frequency against the stated bound with a Wilson interval.

Reproducibility contract
------------------------
Trials are partitioned into fixed-size blocks.  Block ``j`` of a run
draws from counter-based substreams keyed by ``(seed, tag, j)``, where
the tag identifies the bound family.  Block boundaries depend only on
the trial count and the data shape, never on the worker count, so a run
is bit-for-bit reproducible no matter how it is parallelized.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fixed_bounds as fb
from . import rng as _rng
from . import symmat as sm
from .errors import ConfigError, IncompatiblePair
from .generators import GeneratorSpec
from .report import McReport

__all__ = [
    "McConfig",
    "FalsifyRecord",
    "registry_names",
    "compatible_generators",
    "default_generator",
    "run_coverage",
    "default_run_specs",
    "run_default_suite",
    "falsify_conjecture",
]

# Largest data array held per block, in scalar cells; keeps peak memory
# for a (block, n, d, d) stack around one hundred megabytes.
_CELL_BUDGET = 1 << 24
_FIXED_BLOCK_CAP = 8192
_PATH_BLOCK_CAP = 1024

_STOPPING_KINDS = ("first_crossing", "fixed", "geometric")


# ---------------------------------------------------------------------------
# batched spectral helpers (tolerance semantics identical to symmat)


def _batch_not_leq(x: np.ndarray, y) -> np.ndarray:
    """Elementwise event ``x_i  is not <=  y_i`` in the semidefinite order."""
    w = np.linalg.eigvalsh(y - x)
    lam_min = w[..., 0]
    opn = np.maximum(np.abs(w[..., 0]), np.abs(w[..., -1]))
    return lam_min < -sm.TOL_PSD * np.maximum(1.0, opn)


def _eig_not_leq_scalar(w: np.ndarray, a) -> np.ndarray:
    """Event ``X not <= a I`` given the eigenvalues ``w`` of each ``X``.

    ``a`` may be a scalar or a per-trial vector.  Uses the fact that
    ``a I - X`` has eigenvalues ``a - w`` in the same basis, so the
    tolerance rule needs no second decomposition.
    """
    a = np.asarray(a, dtype=np.float64)
    diff = a[..., None] - w
    lam_min = diff.min(axis=-1)
    opn = np.abs(diff).max(axis=-1)
    return lam_min < -sm.TOL_PSD * np.maximum(1.0, opn)


def _batch_apply(fn, x: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh(x)
    fw = fn(w)
    return np.einsum("...ij,...j,...kj->...ik", q, fw, q)


def _batch_expm(x: np.ndarray) -> np.ndarray:
    return _batch_apply(np.exp, x)


def _batch_sqrt_psd(x: np.ndarray) -> np.ndarray:
    """Square root of nearly-PSD stacks; clamps roundoff-negative eigenvalues."""
    w, q = np.linalg.eigh(x)
    scale = np.maximum(1.0, np.abs(w).max(axis=-1, keepdims=True))
    if np.any(w < -sm.TOL_PSD * scale):
        worst = float((w / scale).min())
        raise ConfigError(f"matrix is not PSD within tolerance (relative eig {worst:.3e})")
    return np.einsum("...ij,...j,...kj->...ik", q, np.sqrt(np.clip(w, 0.0, None)), q)


def _batch_abs(x: np.ndarray) -> np.ndarray:
    return _batch_apply(np.abs, x)


def _log_trace_exp(w: np.ndarray) -> np.ndarray:
    """``log tr exp`` from eigenvalue rows, shifted for overflow safety."""
    top = w.max(axis=-1)
    return top + np.log(np.exp(w - top[..., None]).sum(axis=-1))


def _scalar_coeff(a: np.ndarray) -> float | None:
    """``c`` when ``a == c I`` exactly, else None (enables fast scan paths)."""
    d = a.shape[0]
    c = float(a[0, 0])
    return c if np.array_equal(a, c * np.eye(d)) else None


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class McConfig:
    """Size and execution parameters of one coverage run."""

    trials: int = 100_000
    horizon: int = 200
    workers: int = 1
    base_seed: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def seed(self) -> int:
        return self.base_seed if self.base_seed is not None else _rng.default_seed()


def _take(params: dict | None, defaults: dict) -> dict:
    merged = dict(defaults)
    if params:
        for key, val in params.items():
            if key not in defaults:
                raise ConfigError(
                    f"unknown parameter {key!r}; expected one of {sorted(defaults)}"
                )
            merged[key] = val
    return merged


def _norm_stopping(raw, horizon: int) -> dict:
    if raw is None:
        raw = {"kind": "first_crossing"}
    if isinstance(raw, str):
        raw = {"kind": raw}
    kind = raw.get("kind")
    if kind not in _STOPPING_KINDS:
        raise ConfigError(f"stopping kind must be one of {_STOPPING_KINDS}, got {kind!r}")
    out = {"kind": kind}
    if kind == "fixed":
        n = int(raw.get("n", horizon))
        if not 1 <= n <= horizon:
            raise ConfigError(f"fixed stopping time {n} outside 1..{horizon}")
        out["n"] = n
    elif kind == "geometric":
        q = float(raw.get("q", 0.02))
        if not 0.0 < q < 1.0:
            raise ConfigError(f"geometric parameter must be in (0,1), got {q}")
        out["q"] = q
    return out


def _norm_randomizer(raw, dim: int) -> tuple[str, np.ndarray | None]:
    if raw is None:
        raw = "scaled_identity"
    if isinstance(raw, str):
        kind, shift = raw, None
    else:
        kind = raw.get("kind", "scaled_identity")
        shift = raw.get("y")
    if kind not in ("identity", "scaled_identity", "shifted"):
        raise ConfigError(f"unsupported randomizer kind {kind!r}")
    if kind == "shifted":
        if shift is None:
            raise ConfigError("shifted randomizer needs the offset matrix y")
        shift = sm.symmat(shift)
        if shift.shape[0] != dim:
            raise ConfigError("randomizer offset dimension mismatch")
        if not sm.is_psd(shift):
            raise ConfigError("randomizer offset must be PSD")
    else:
        shift = None
    return kind, shift


def _draw_us(plan: dict, g_rand: np.random.Generator, size: int) -> np.ndarray:
    if plan["rand_kind"] == "identity":
        return np.ones(size)
    return 1.0 - g_rand.random(size)


def _gamma_array(scale: float, horizon: int) -> np.ndarray:
    return scale / np.sqrt(np.arange(1, horizon + 1, dtype=np.float64))


# ---------------------------------------------------------------------------
# registry

_REGISTRY: dict[str, "_Entry"] = {}


@dataclass(frozen=True)
class _Entry:
    name: str
    family: str  # "fixed" | "path"
    compatible: tuple[str, ...]
    prepare: callable = field(repr=False, compare=False, default=None)
    default_kind: str = ""
    tag: int = 0


def _register(name, family, compatible, default_kind):
    def deco(fn):
        _REGISTRY[name] = _Entry(
            name, family, tuple(compatible), fn, default_kind, len(_REGISTRY)
        )
        return fn

    return deco


def registry_names() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def compatible_generators(bound: str) -> tuple[str, ...]:
    return _entry(bound).compatible


def _entry(bound: str) -> _Entry:
    try:
        return _REGISTRY[bound]
    except KeyError:
        raise ConfigError(
            f"unknown bound {bound!r}; known bounds: {', '.join(_REGISTRY)}"
        ) from None


def _check_pair(entry: _Entry, gen: GeneratorSpec) -> None:
    if gen.kind not in entry.compatible:
        raise IncompatiblePair(
            f"{entry.name} has no exact moment recipe for {gen.kind}; "
            f"compatible kinds: {', '.join(entry.compatible)}"
        )


def _moment(gen: GeneratorSpec, method: str, *args):
    try:
        return getattr(gen, method)(*args)
    except ConfigError as exc:
        raise IncompatiblePair(f"{gen.kind}: {exc}") from exc


# --- fixed-time entries ----------------------------------------------------


@_register("UMMI", "fixed", ("ELLIPSOID_RANK1", "HEAVY_PSD", "BOUNDED_PSD"), "ELLIPSOID_RANK1")
def _prep_ummi(params, gen, mc):
    p = _take(params, {"a": None, "randomizer": None, "target": 0.5})
    mean_x = gen.mean()
    if p["a"] is not None:
        a = sm.symmat(p["a"])
    elif gen.kind == "ELLIPSOID_RANK1":
        a = gen.a.copy()  # the supporting ellipsoid: equality case
    else:
        a = (sm.trace(mean_x) / p["target"]) * np.eye(gen.dim)
    rand_kind, shift = _norm_randomizer(p["randomizer"], gen.dim)
    plan = {
        "kind": "UMMI",
        "n_per": 1,
        "rand_kind": rand_kind,
        "a": a,
        "bound": fb.ummi_bound(mean_x, a),
    }
    root = sm.mat_sqrt(a) if shift is not None else None
    plan["shift_term"] = None if shift is None else root @ shift @ root
    return plan


def _prep_cheb(params, gen, mc, n_fixed):
    p = _take(params, {"a": None, "n": n_fixed, "randomizer": None, "target": 0.2})
    n = int(p["n"])
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if n > 1 and gen.kind == "EXCHANGEABLE_MIXTURE":
        raise IncompatiblePair("variance of the running mean needs independent draws")
    v = _moment(gen, "variance")
    if p["a"] is not None:
        a = sm.symmat(p["a"])
    else:
        a = math.sqrt(sm.trace(v) / (p["target"] * n)) * np.eye(gen.dim)
    rand_kind, shift = _norm_randomizer(p["randomizer"], gen.dim)
    plan = {
        "kind": "UMCI",
        "n_per": n,
        "rand_kind": rand_kind,
        "a": a,
        "m": gen.mean(),
        "bound": fb.chebyshev_n_bound(v, a, n),
        "shift": shift,
    }
    return plan


@_register(
    "UMCI1",
    "fixed",
    (
        "GAUSSIAN_SCALED",
        "RADEMACHER_SCALED",
        "BOUNDED_PSD",
        "SYMMETRIC_HEAVY",
        "EXCHANGEABLE_MIXTURE",
        "IID_WISHART_LIKE",
    ),
    "GAUSSIAN_SCALED",
)
def _prep_umci1(params, gen, mc):
    return _prep_cheb(params, gen, mc, n_fixed=1)


@_register(
    "UMCI_N",
    "fixed",
    ("RADEMACHER_SCALED", "GAUSSIAN_SCALED", "BOUNDED_PSD", "IID_WISHART_LIKE"),
    "RADEMACHER_SCALED",
)
def _prep_umci_n(params, gen, mc):
    plan = _prep_cheb(params, gen, mc, n_fixed=50)
    if plan["n_per"] < 2:
        raise ConfigError("UMCI_N is the n-sample variant; use UMCI1 for n = 1")
    return plan


@_register(
    "PCHEB1",
    "fixed",
    ("SYMMETRIC_HEAVY", "GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD"),
    "SYMMETRIC_HEAVY",
)
def _prep_pcheb1(params, gen, mc):
    p = _take(params, {"p": 1.5, "a": None, "randomizer": None, "target": 0.1})
    pw = float(p["p"])
    if not 1.0 <= pw <= 2.0:
        raise ConfigError(f"p must lie in [1, 2], got {pw}")
    vp = _moment(gen, "pth_central", pw)
    if p["a"] is not None:
        a = sm.symmat(p["a"])
    else:
        a = (sm.trace(vp) / p["target"]) ** (1.0 / pw) * np.eye(gen.dim)
    rand_kind, shift = _norm_randomizer(p["randomizer"], gen.dim)
    return {
        "kind": "PCHEB1",
        "n_per": 1,
        "p": pw,
        "rand_kind": rand_kind,
        "a": a,
        "m": gen.mean(),
        "bound": fb.pcheb1_bound(vp, a, pw),
        "shift": shift,
    }


@_register("CHERNOFF1", "fixed", ("RADEMACHER_SCALED", "GAUSSIAN_SCALED"), "RADEMACHER_SCALED")
def _prep_chernoff1(params, gen, mc):
    p = _take(params, {"gamma": 1.0, "a": None, "randomizer": None, "target": 0.15})
    gamma = float(p["gamma"])
    if gamma <= 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    m, c = gen.m, gen.c
    if sm.spectral_norm(m @ c - c @ m) > 1e-10 * max(1.0, sm.spectral_norm(m @ c)):
        raise IncompatiblePair(
            "closed-form exponential moment needs commuting mean and scale"
        )
    # With [M, C] = 0 the tilted mean splits: E e^{2g X} = e^{2g M} E e^{2g W C}.
    two_g = 2.0 * gamma
    if gen.kind == "RADEMACHER_SCALED":
        half = sm.mat_exp(two_g * c) + sm.mat_exp(-two_g * c)
        exp_moment = sm.mat_exp(two_g * m) @ (half / 2.0)
    else:
        exp_moment = sm.mat_exp(two_g * m + (two_g**2 / 2.0) * (c @ c))
    exp_moment = sm.symmat(exp_moment, copy=False)
    if p["a"] is not None:
        a = sm.symmat(p["a"])
    else:
        a = (math.log(sm.trace(exp_moment) / p["target"]) / two_g) * np.eye(gen.dim)
    rand_kind, shift = _norm_randomizer(p["randomizer"], gen.dim)
    return {
        "kind": "CHERNOFF1",
        "n_per": 1,
        "gamma": gamma,
        "rand_kind": rand_kind,
        "a": a,
        "bound": fb.chernoff1_bound(exp_moment, a, gamma),
        "shift": shift,
    }


_CH_ROWS = {
    "RADEMACHER": ("RADEMACHER_SCALED",),
    "UNI_GAUSSIAN": ("GAUSSIAN_SCALED",),
    "BENNETT_I": ("RADEMACHER_SCALED", "BOUNDED_PSD"),
    "BENNETT_II": ("RADEMACHER_SCALED", "BOUNDED_PSD"),
    "SYM_HOEFFDING": ("RADEMACHER_SCALED", "BOUNDED_PSD"),
}


@_register(
    "CHERNOFF_HOEFFDING",
    "fixed",
    ("RADEMACHER_SCALED", "GAUSSIAN_SCALED", "BOUNDED_PSD"),
    "RADEMACHER_SCALED",
)
def _prep_ch(params, gen, mc):
    p = _take(
        params,
        {
            "mgf_kind": None,
            "n": 100,
            "gamma": None,
            "a_scalar": None,
            "randomizer": None,
            "alpha0": 0.05,
        },
    )
    n = int(p["n"])
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    mgf_kind = p["mgf_kind"] or {
        "RADEMACHER_SCALED": "RADEMACHER",
        "GAUSSIAN_SCALED": "UNI_GAUSSIAN",
        "BOUNDED_PSD": "SYM_HOEFFDING",
    }[gen.kind]
    if mgf_kind not in _CH_ROWS:
        raise ConfigError(f"unknown MGF family {mgf_kind!r}")
    if gen.kind not in _CH_ROWS[mgf_kind]:
        raise IncompatiblePair(f"{mgf_kind} assumptions do not hold for {gen.kind}")
    scale_mat = gen.c if gen.kind in ("RADEMACHER_SCALED", "GAUSSIAN_SCALED") else gen._spread
    if mgf_kind in ("RADEMACHER", "UNI_GAUSSIAN"):
        row_mat = scale_mat
        lam = sm.spectral_norm(row_mat) ** 2
    elif mgf_kind == "SYM_HOEFFDING":
        row_mat = _moment(gen, "sq_dev_bound")
        lam = sm.lambda_max(row_mat)
    else:
        if sm.spectral_norm(scale_mat) > 1.0 + sm.TOL_PSD:
            raise IncompatiblePair("one-sided Bernstein rows need deviations <= 1")
        row_mat = _moment(gen, "variance")
        if mgf_kind == "BENNETT_II":
            row_mat = row_mat + 0.05 * np.eye(gen.dim)
        lam = sm.lambda_max(row_mat)
    alpha0 = float(p["alpha0"])
    gamma = float(p["gamma"]) if p["gamma"] is not None else math.sqrt(
        2.0 * n * math.log(gen.dim / alpha0) / lam
    )
    a_scalar = (
        float(p["a_scalar"])
        if p["a_scalar"] is not None
        else 2.0 * math.log(gen.dim / alpha0) / gamma
    )
    spec = fb.MgfSpec(mgf_kind, row_mat)
    rand_kind, shift = _norm_randomizer(p["randomizer"], gen.dim)
    plan = {
        "kind": "CHERNOFF_HOEFFDING",
        "n_per": n,
        "gamma": gamma,
        "a_scalar": a_scalar,
        "rand_kind": rand_kind,
        "m": gen.mean(),
        "bound": fb.chernoff_hoeffding_bound(spec, gamma, n, a_scalar),
        "shift": shift,
        "mgf_kind": mgf_kind,
    }
    return plan


# --- sequential entries ----------------------------------------------------


def _umvi_common(params, gen, mc, builder):
    p = _take(
        params,
        {
            "alpha": 0.05,
            "gamma_scale": None,
            "randomizer": None,
            "stopping": None,
        },
    )
    alpha = float(p["alpha"])
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0,1), got {alpha}")
    horizon = mc.horizon
    d = gen.dim
    m = gen.mean()
    plan = {
        "kind": "UMVI",
        "builder": builder,
        "horizon": horizon,
        "m": m,
        "a_scalar": d / alpha,
        "bound": alpha,
        "stopping": _norm_stopping(p["stopping"], horizon),
    }
    rand_kind, shift = _norm_randomizer(p["randomizer"], d)
    plan["rand_kind"] = rand_kind
    # sqrt(A) Y sqrt(A) with A = (d/alpha) I is just (d/alpha) Y
    plan["shift_term"] = None if shift is None else (d / alpha) * shift
    if builder == "MGF":
        row_kind = {
            "RADEMACHER_SCALED": "RADEMACHER",
            "GAUSSIAN_SCALED": "UNI_GAUSSIAN",
            "BOUNDED_PSD": "SYM_HOEFFDING",
        }[gen.kind]
        row_mat = gen.c if row_kind != "SYM_HOEFFDING" else _moment(gen, "sq_dev_bound")
        scale_ref = (
            sm.spectral_norm(row_mat)
            if row_kind != "SYM_HOEFFDING"
            else math.sqrt(sm.lambda_max(row_mat))
        )
        plan["row_kind"] = row_kind
        plan["row_mat"] = row_mat
        default_scale = 0.5 / max(scale_ref, 1e-12)
    elif builder == "BETTING":
        b = _moment(gen, "betting_upper")
        hi = 1.0 / sm.lambda_max(m)
        plan["b"] = b
        default_scale = 0.4 * hi
        plan["gamma_hi"] = hi
    elif builder == "SELF_NORMALIZED":
        v = _moment(gen, "variance")
        plan["v"] = v
        default_scale = 0.5 / max(math.sqrt(sm.lambda_max(v)), 1e-12)
    else:  # SYMMETRIC_DIST
        if not gen.deviations_symmetric():
            raise IncompatiblePair("needs conditionally symmetric deviations")
        if gen.kind in ("RADEMACHER_SCALED", "GAUSSIAN_SCALED"):
            ref = gen.c
        elif gen.kind == "BOUNDED_PSD":
            ref = gen._spread
        else:
            ref = gen.d_dir
        default_scale = 0.3 / max(sm.spectral_norm(ref), 1e-12)
    scale = float(p["gamma_scale"]) if p["gamma_scale"] is not None else default_scale
    if scale <= 0.0:
        raise ConfigError(f"gamma_scale must be positive, got {scale}")
    plan["gammas"] = _gamma_array(scale, horizon)
    if builder == "BETTING" and plan["gammas"][0] >= plan["gamma_hi"]:
        raise ConfigError(
            f"gamma schedule starts at {plan['gammas'][0]:.6g}, outside the "
            f"admissible interval (0, {plan['gamma_hi']:.6g})"
        )
    return plan


@_register(
    "UMVI_MGF",
    "path",
    ("RADEMACHER_SCALED", "GAUSSIAN_SCALED", "BOUNDED_PSD"),
    "RADEMACHER_SCALED",
)
def _prep_umvi_mgf(params, gen, mc):
    return _umvi_common(params, gen, mc, "MGF")


@_register("UMVI_BETTING", "path", ("BOUNDED_PSD",), "BOUNDED_PSD")
def _prep_umvi_betting(params, gen, mc):
    return _umvi_common(params, gen, mc, "BETTING")


@_register(
    "UMVI_SELF_NORMALIZED",
    "path",
    ("GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD", "IID_WISHART_LIKE"),
    "GAUSSIAN_SCALED",
)
def _prep_umvi_sn(params, gen, mc):
    return _umvi_common(params, gen, mc, "SELF_NORMALIZED")


@_register(
    "UMVI_SYMMETRIC",
    "path",
    ("SYMMETRIC_HEAVY", "RADEMACHER_SCALED", "GAUSSIAN_SCALED", "BOUNDED_PSD"),
    "SYMMETRIC_HEAVY",
)
def _prep_umvi_sym(params, gen, mc):
    return _umvi_common(params, gen, mc, "SYMMETRIC_DIST")


@_register("MVI", "path", ("BOUNDED_PSD",), "BOUNDED_PSD")
def _prep_mvi(params, gen, mc):
    plan = _umvi_common(params, gen, mc, "BETTING")
    plan["kind"] = "MVI"
    # "exists n" scans are never randomized: the threshold would have to
    # be known before the scan starts for the crossing to define a
    # stopping time, so the plain version is the honest one.
    plan["rand_kind"] = "identity"
    plan["shift_term"] = None
    return plan


@_register(
    "DOOB",
    "path",
    ("GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD", "IID_WISHART_LIKE"),
    "GAUSSIAN_SCALED",
)
def _prep_doob(params, gen, mc):
    p = _take(params, {"a": None, "n": 100, "target": 0.1})
    n = int(p["n"])
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    v = _moment(gen, "variance")
    if p["a"] is not None:
        a = sm.symmat(p["a"])
        a_scalar = _scalar_coeff(a)
        if a_scalar is None:
            raise ConfigError("the squared-mean scan needs a scalar threshold a I")
    else:
        a_scalar = sm.trace(v) / p["target"]
    return {
        "kind": "DOOB",
        "horizon": n,
        "m": gen.mean(),
        "a_scalar": float(a_scalar),
        "bound": sm.trace(v) / float(a_scalar),
        "rand_kind": "identity",
    }


def _scan_common(params, gen, mc, kind, default_target):
    p = _take(params, {"a": None, "p": 1.5, "n_start": 10, "n_max": 300, "target": default_target})
    n_max = int(p["n_max"])
    if n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max}")
    plan = {"kind": kind, "horizon": n_max, "rand_kind": "identity"}
    if kind in ("XMCI", "XMCI2"):
        v = _moment(gen, "variance")
        tr_ref = sm.trace(v)
        plan["m"] = gen.mean()
    elif kind == "XMPCI":
        pw = float(p["p"])
        if not 1.0 <= pw <= 2.0:
            raise ConfigError(f"p must lie in [1, 2], got {pw}")
        vp = _moment(gen, "pth_raw", pw)
        plan["p"] = pw
    else:  # TRACE_PCHEB
        pw = float(p["p"])
        if pw < 1.0:
            raise ConfigError(f"p must be >= 1, got {pw}")
        vp = _moment(gen, "pth_central", pw)
        plan["p"] = pw
        plan["m"] = gen.mean()
    if kind == "XMCI":
        a_scalar = (
            float(p["a"]) if p["a"] is not None else math.sqrt(tr_ref / p["target"])
        )
        plan["a_scalar"] = a_scalar
        plan["bound"] = tr_ref / a_scalar**2
    elif kind == "XMCI2":
        n_start = int(p["n_start"])
        if not 1 <= n_start <= n_max:
            raise ConfigError(f"n_start {n_start} outside 1..{n_max}")
        a_scalar = (
            float(p["a"])
            if p["a"] is not None
            else math.sqrt(tr_ref / (p["target"] * n_start))
        )
        plan["a_scalar"] = a_scalar
        plan["n_start"] = n_start
        plan["bound"] = tr_ref / (a_scalar**2 * n_start)
    elif kind == "XMPCI":
        a_scalar = (
            float(p["a"])
            if p["a"] is not None
            else (sm.trace(vp) / p["target"]) ** (1.0 / pw)
        )
        plan["a_scalar"] = a_scalar
        plan["bound"] = sm.trace(vp) / a_scalar**pw
    else:
        tr_vp = sm.trace(vp)
        a_scalar = (
            float(p["a"]) if p["a"] is not None else (tr_vp / p["target"]) ** (1.0 / pw)
        )
        plan["a_scalar"] = a_scalar
        plan["bound"] = tr_vp / a_scalar**pw
    return plan


@_register(
    "XMCI",
    "path",
    (
        "EXCHANGEABLE_MIXTURE",
        "GAUSSIAN_SCALED",
        "RADEMACHER_SCALED",
        "BOUNDED_PSD",
        "IID_WISHART_LIKE",
    ),
    "EXCHANGEABLE_MIXTURE",
)
def _prep_xmci(params, gen, mc):
    return _scan_common(params, gen, mc, "XMCI", 0.25)


@_register(
    "XMCI2",
    "path",
    ("GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD", "IID_WISHART_LIKE"),
    "GAUSSIAN_SCALED",
)
def _prep_xmci2(params, gen, mc):
    # The sharper 1/n variant needs vanishing anticommutator cross terms;
    # i.i.d. centered increments give that, a shared latent shift does not.
    return _scan_common(params, gen, mc, "XMCI2", 0.1)


@_register("XMPCI", "path", ("HEAVY_PSD",), "HEAVY_PSD")
def _prep_xmpci(params, gen, mc):
    return _scan_common(params, gen, mc, "XMPCI", 0.1)


@_register(
    "TRACE_PCHEB",
    "path",
    ("SYMMETRIC_HEAVY", "GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD"),
    "SYMMETRIC_HEAVY",
)
def _prep_trace_pcheb(params, gen, mc):
    return _scan_common(params, gen, mc, "TRACE_PCHEB", 0.2)


@_register(
    "URSN",
    "path",
    ("GAUSSIAN_SCALED", "RADEMACHER_SCALED", "BOUNDED_PSD", "IID_WISHART_LIKE"),
    "GAUSSIAN_SCALED",
)
def _prep_ursn(params, gen, mc):
    p = _take(
        params,
        {"alpha": 0.05, "gamma_scale": None, "randomizer": None, "stopping": None},
    )
    alpha = float(p["alpha"])
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0,1), got {alpha}")
    v = _moment(gen, "variance")
    scale = (
        float(p["gamma_scale"])
        if p["gamma_scale"] is not None
        else 0.5 / max(math.sqrt(sm.lambda_max(v)), 1e-12)
    )
    if scale <= 0.0:
        raise ConfigError(f"gamma_scale must be positive, got {scale}")
    rand_kind, _ = _norm_randomizer(p["randomizer"], gen.dim)
    if rand_kind == "shifted":
        raise ConfigError("the trace-exp test uses a scalar randomizer")
    return {
        "kind": "URSN",
        "horizon": mc.horizon,
        "m": gen.mean(),
        "v": v,
        "alpha": alpha,
        "gammas": _gamma_array(scale, mc.horizon),
        "stopping": _norm_stopping(p["stopping"], mc.horizon),
        "rand_kind": rand_kind,
        "bound": alpha,
    }


@_register("USMHI", "path", ("RADEMACHER_SCALED", "BOUNDED_PSD"), "RADEMACHER_SCALED")
def _prep_usmhi(params, gen, mc):
    p = _take(
        params,
        {"alpha": 0.05, "gamma_scale": None, "randomizer": None, "stopping": None},
    )
    alpha = float(p["alpha"])
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0,1), got {alpha}")
    b = _moment(gen, "sq_dev_bound")
    lam_b = sm.lambda_max(b)
    scale = (
        float(p["gamma_scale"])
        if p["gamma_scale"] is not None
        else 0.3 / max(math.sqrt(lam_b), 1e-12)
    )
    if scale <= 0.0:
        raise ConfigError(f"gamma_scale must be positive, got {scale}")
    rand_kind, _ = _norm_randomizer(p["randomizer"], gen.dim)
    if rand_kind == "shifted":
        raise ConfigError("the stopped Hoeffding test uses a scalar randomizer")
    return {
        "kind": "USMHI",
        "horizon": mc.horizon,
        "m": gen.mean(),
        "lam_b": lam_b,
        "alpha": alpha,
        "gammas": _gamma_array(scale, mc.horizon),
        "stopping": _norm_stopping(p["stopping"], mc.horizon),
        "rand_kind": rand_kind,
        "bound": alpha,
    }


# ---------------------------------------------------------------------------
# block runners


def _block_size(n_per: int, d: int, cap: int) -> int:
    per_trial = max(1, n_per * d * d)
    return max(64, min(cap, _CELL_BUDGET // per_trial))


def _fixed_block(plan, gen, size, seed, tag, block_idx) -> int:
    g_data, g_rand = _rng.spawn_pair(seed, tag, block_idx)
    xs = gen.sample_batch(g_data, size, plan["n_per"])
    us = _draw_us(plan, g_rand, size)
    kind = plan["kind"]
    if kind == "UMMI":
        thr = us[:, None, None] * plan["a"]
        if plan["shift_term"] is not None:
            thr = thr + plan["shift_term"]
        return int(_batch_not_leq(xs[:, 0], thr).sum())
    if kind == "UMCI":
        dev = xs.mean(axis=1) - plan["m"]
        absdev = _batch_abs(dev)
        a = plan["a"]
        if plan.get("shift") is None:
            # (A u A)^{1/2} = sqrt(u) |A| when U = u I
            thr = np.sqrt(us)[:, None, None] * sm.mat_abs(a)
        else:
            inner = us[:, None, None] * (a @ a) + a @ plan["shift"] @ a
            thr = _batch_sqrt_psd(inner)
        return int(_batch_not_leq(absdev, thr).sum())
    if kind == "PCHEB1":
        pw = plan["p"]
        dev = xs[:, 0] - plan["m"]
        absdev = _batch_abs(dev)
        a = plan["a"]
        if plan.get("shift") is None:
            thr = (us ** (1.0 / pw))[:, None, None] * a
        else:
            half = sm.mat_pow(a, pw / 2.0)
            inner = us[:, None, None] * (half @ half) + half @ plan["shift"] @ half
            thr = _batch_apply(lambda w: np.clip(w, 0.0, None) ** (1.0 / pw), inner)
        return int(_batch_not_leq(absdev, thr).sum())
    if kind == "CHERNOFF1":
        gamma = plan["gamma"]
        a = plan["a"]
        x = xs[:, 0]
        if plan.get("shift") is None:
            shiftc = np.log(us) / (2.0 * gamma)
            thr = a + shiftc[:, None, None] * np.eye(gen.dim)
            return int(_batch_not_leq(x, thr).sum())
        wmat = sm.mat_exp(gamma * a)
        inner = us[:, None, None] * (wmat @ wmat) + wmat @ plan["shift"] @ wmat
        w, q = np.linalg.eigh(inner)
        singular = w[:, 0] < sm.LOG_EIG_FLOOR
        safe_w = np.where(w < sm.LOG_EIG_FLOOR, 1.0, w)
        thr = np.einsum("...ij,...j,...kj->...ik", q, np.log(safe_w), q) / (2.0 * gamma)
        events = _batch_not_leq(x, thr)
        events |= singular
        return int(events.sum())
    if kind == "CHERNOFF_HOEFFDING":
        gamma, a_scalar = plan["gamma"], plan["a_scalar"]
        dev = xs.mean(axis=1) - plan["m"]
        eye = np.eye(gen.dim)
        if plan.get("shift") is None:
            thr = (a_scalar + np.log(us) / gamma)[:, None, None] * eye
            return int(_batch_not_leq(dev, thr).sum())
        w_y, q_y = np.linalg.eigh(plan["shift"])
        inner_w = us[:, None] + w_y[None, :]
        singular = inner_w[:, 0] < sm.LOG_EIG_FLOOR
        safe = np.where(inner_w < sm.LOG_EIG_FLOOR, 1.0, inner_w)
        logu = np.einsum("ij,...j,kj->...ik", q_y, np.log(safe), q_y)
        thr = a_scalar * eye + logu / gamma
        events = _batch_not_leq(dev, thr)
        events |= singular
        return int(events.sum())
    raise AssertionError(kind)


def _sqrt_factor(builder, dev, gamma, plan):
    """Square roots of the per-step factor E for a stack of deviations."""
    if builder == "MGF":
        return _batch_expm((gamma / 2.0) * dev)
    if builder == "BETTING":
        return _batch_sqrt_psd(np.eye(dev.shape[-1]) + gamma * dev)
    if builder == "SELF_NORMALIZED":
        quad = np.matmul(dev, dev)
        return _batch_expm((gamma / 2.0) * dev - (gamma**2 / 12.0) * quad)
    if builder == "SYMMETRIC_DIST":
        quad = np.matmul(dev, dev)
        return _batch_expm((gamma / 2.0) * dev - (gamma**2 / 4.0) * quad)
    raise AssertionError(builder)


def _sqrt_shrink(builder, gamma, plan):
    """The deterministic factor ``A^{1/2}`` for one step, or None for I."""
    if builder == "MGF":
        row_mat = plan["row_mat"]
        if plan["row_kind"] in ("RADEMACHER", "UNI_GAUSSIAN"):
            expo = (gamma**2 / 2.0) * (row_mat @ row_mat)
        else:
            expo = (gamma**2 / 2.0) * row_mat
        return sm.mat_exp(-expo / 2.0)
    if builder == "SELF_NORMALIZED":
        return sm.mat_exp(-(gamma**2 / 6.0) * plan["v"])
    return None


def _path_block(plan, gen, size, seed, tag, block_idx) -> int:
    g_data, g_rand = _rng.spawn_pair(seed, tag, block_idx)
    horizon = plan["horizon"]
    xs = gen.sample_batch(g_data, size, horizon)
    kind = plan["kind"]
    d = gen.dim
    eye = np.eye(d)

    if kind in ("UMVI", "MVI"):
        builder = plan["builder"]
        m = plan["m"]
        gammas = plan["gammas"]
        a_scalar = plan["a_scalar"]
        stopping = plan.get("stopping", {"kind": "first_crossing"})
        taus = None
        if kind == "UMVI" and stopping["kind"] == "geometric":
            taus = np.minimum(g_rand.geometric(stopping["q"], size), horizon)
        elif kind == "UMVI" and stopping["kind"] == "fixed":
            taus = np.full(size, stopping["n"])
        left = np.broadcast_to(eye, (size, d, d)).copy()
        frozen = np.zeros(size, dtype=bool)
        y_tau = np.broadcast_to(eye, (size, d, d)).copy()
        y_cur = y_tau.copy()
        crossed_any = np.zeros(size, dtype=bool)
        for n in range(1, horizon + 1):
            gamma = float(gammas[n - 1])
            dev = xs[:, n - 1] - m
            sqrt_e = _sqrt_factor(builder, dev, gamma, plan)
            shrink = _sqrt_shrink(builder, gamma, plan)
            step = sqrt_e if shrink is None else np.matmul(shrink, sqrt_e)
            left = np.matmul(left, step)
            y_cur = np.matmul(left, np.transpose(left, (0, 2, 1)))
            w = np.linalg.eigvalsh(y_cur)
            cross_now = _eig_not_leq_scalar(w, a_scalar)
            crossed_any |= cross_now
            if kind == "MVI":
                if crossed_any.all():
                    break
                continue
            if taus is not None:
                newly = (~frozen) & (taus == n)
            else:
                newly = (~frozen) & cross_now
            if newly.any():
                y_tau[newly] = y_cur[newly]
                left[newly] = eye
                frozen[newly] = True
            if frozen.all():
                break
        if kind == "MVI":
            return int(crossed_any.sum())
        y_tau[~frozen] = y_cur[~frozen]
        us = _draw_us(plan, g_rand, size)
        if plan.get("shift_term") is None:
            w_tau = np.linalg.eigvalsh(y_tau)
            events = _eig_not_leq_scalar(w_tau, us * a_scalar)
        else:
            thr = (us * a_scalar)[:, None, None] * eye + plan["shift_term"]
            events = _batch_not_leq(y_tau, thr)
        return int(events.sum())

    if kind == "DOOB":
        m = plan["m"]
        a_scalar = plan["a_scalar"]
        run_sum = np.zeros((size, d, d))
        crossed = np.zeros(size, dtype=bool)
        for n in range(1, horizon + 1):
            run_sum += xs[:, n - 1]
            dev = run_sum / n - m
            w = np.linalg.eigvalsh(dev)
            crossed |= _eig_not_leq_scalar(w * w, a_scalar)
            if crossed.all():
                break
        return int(crossed.sum())

    if kind in ("XMCI", "XMCI2", "XMPCI", "TRACE_PCHEB"):
        a_scalar = plan["a_scalar"]
        n_start = plan.get("n_start", 1)
        run_sum = np.zeros((size, d, d))
        crossed = np.zeros(size, dtype=bool)
        for n in range(1, horizon + 1):
            run_sum += xs[:, n - 1]
            if n < n_start:
                continue
            xbar = run_sum / n
            if kind == "XMPCI":
                w = np.linalg.eigvalsh(xbar)
                crossed |= _eig_not_leq_scalar(w, a_scalar)
            elif kind == "TRACE_PCHEB":
                w = np.linalg.eigvalsh(xbar - plan["m"])
                crossed |= (np.abs(w) ** plan["p"]).sum(axis=-1) >= a_scalar ** plan["p"]
            else:
                w = np.linalg.eigvalsh(xbar - plan["m"])
                crossed |= _eig_not_leq_scalar(np.abs(w), a_scalar)
            if crossed.all():
                break
        return int(crossed.sum())

    if kind == "URSN":
        m, v = plan["m"], plan["v"]
        gammas = plan["gammas"]
        alpha = plan["alpha"]
        log_crossing = math.log(d / alpha)
        stopping = plan["stopping"]
        taus = None
        if stopping["kind"] == "geometric":
            taus = np.minimum(g_rand.geometric(stopping["q"], size), horizon)
        elif stopping["kind"] == "fixed":
            taus = np.full(size, stopping["n"])
        acc = np.zeros((size, d, d))
        frozen = np.zeros(size, dtype=bool)
        log_l_tau = np.zeros(size)
        log_l_cur = np.full(size, math.log(d))
        for n in range(1, horizon + 1):
            gamma = float(gammas[n - 1])
            dev = xs[:, n - 1] - m
            acc += gamma * dev - (gamma**2 / 6.0) * (np.matmul(dev, dev) + 2.0 * v)
            w = np.linalg.eigvalsh(acc)
            log_l_cur = _log_trace_exp(w)
            if taus is not None:
                newly = (~frozen) & (taus == n)
            else:
                newly = (~frozen) & (log_l_cur >= log_crossing)
            if newly.any():
                log_l_tau[newly] = log_l_cur[newly]
                frozen[newly] = True
            if frozen.all():
                break
        log_l_tau[~frozen] = log_l_cur[~frozen]
        us = _draw_us(plan, g_rand, size)
        events = log_l_tau >= log_crossing + np.log(us)
        return int(events.sum())

    if kind == "USMHI":
        m = plan["m"]
        lam_b = plan["lam_b"]
        gammas = plan["gammas"]
        alpha = plan["alpha"]
        stopping = plan["stopping"]
        taus = None
        if stopping["kind"] == "geometric":
            taus = np.minimum(g_rand.geometric(stopping["q"], size), horizon)
        elif stopping["kind"] == "fixed":
            taus = np.full(size, stopping["n"])
        gz = np.zeros((size, d, d))
        sum_g = 0.0
        sum_g2 = 0.0
        frozen = np.zeros(size, dtype=bool)
        top_tau = np.zeros(size)
        g2_tau = np.zeros(size)
        top_cur = np.zeros(size)
        log_base = math.log(d / alpha)
        for n in range(1, horizon + 1):
            gamma = float(gammas[n - 1])
            dev = xs[:, n - 1] - m
            gz += gamma * dev
            sum_g += gamma
            sum_g2 += gamma * gamma
            top_cur = np.linalg.eigvalsh(gz)[:, -1]
            if taus is not None:
                newly = (~frozen) & (taus == n)
            else:
                cross_now = top_cur >= log_base + 0.5 * sum_g2 * lam_b
                newly = (~frozen) & cross_now
            if newly.any():
                top_tau[newly] = top_cur[newly]
                g2_tau[newly] = sum_g2
                frozen[newly] = True
            if frozen.all():
                break
        top_tau[~frozen] = top_cur[~frozen]
        g2_tau[~frozen] = sum_g2
        us = _draw_us(plan, g_rand, size)
        events = top_tau >= log_base + np.log(us) + 0.5 * g2_tau * lam_b
        return int(events.sum())

    raise AssertionError(kind)


def _block_task(args) -> int:
    family, plan, gen, size, seed, tag, block_idx = args
    runner = _fixed_block if family == "fixed" else _path_block
    return runner(plan, gen, size, seed, tag, block_idx)


# ---------------------------------------------------------------------------
# public run entry points


def run_coverage(
    bound: str,
    gen: GeneratorSpec,
    mc: McConfig | None = None,
    params: dict | None = None,
) -> McReport:
    """Estimate the rejection frequency of one bound on one generator.

    All validation happens up front: unknown bounds, incompatible
    pairings, and malformed parameters raise before any sampling.
    """
    mc = mc or McConfig()
    entry = _entry(bound)
    _check_pair(entry, gen)
    plan = entry.prepare(params, gen, mc)
    seed = mc.seed()
    n_per = plan.get("n_per", plan.get("horizon", 1))
    cap = _FIXED_BLOCK_CAP if entry.family == "fixed" else _PATH_BLOCK_CAP
    block = _block_size(n_per, gen.dim, cap)
    sizes = [block] * (mc.trials // block)
    if mc.trials % block:
        sizes.append(mc.trials % block)
    tasks = [
        (entry.family, plan, gen, size, seed, entry.tag, idx)
        for idx, size in enumerate(sizes)
    ]
    if mc.workers == 1:
        counts = [_block_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            counts = list(pool.map(_block_task, tasks))
    hits = int(sum(counts))
    name = f"{bound}[{gen.kind},d={gen.dim}]"
    meta = {
        "bound": bound,
        "generator": gen.kind,
        "dim": gen.dim,
        "seed": seed,
        "randomizer": plan.get("rand_kind", "identity"),
    }
    for key in ("p", "gamma", "a_scalar", "alpha", "n_per", "horizon", "mgf_kind"):
        if key in plan and np.isscalar(plan[key]):
            meta[key] = plan[key]
    return McReport.from_counts(
        name=name,
        events=hits,
        trials=mc.trials,
        stated_bound=float(plan["bound"]),
        meta=meta,
    )


def _default_rad(d, lam_top=0.8, mean_scale=0.2):
    diag = lam_top * (0.5 + 0.5 * np.arange(1, d + 1) / d)
    return GeneratorSpec(
        "RADEMACHER_SCALED", d, c=np.diag(diag), m=mean_scale * np.eye(d)
    )


def _default_gauss(d):
    diag = 0.5 * (0.5 + 0.5 * np.arange(1, d + 1) / d)
    return GeneratorSpec("GAUSSIAN_SCALED", d, c=np.diag(diag), m=0.1 * np.eye(d))


def _default_bpsd(d):
    spread = np.linspace(0.0, 0.2, d) if d > 1 else np.zeros(1)
    m = np.eye(d) + np.diag(spread)
    return GeneratorSpec("BOUNDED_PSD", d, m=m, b=3.0 * np.eye(d))


def _default_sheavy(d, tail):
    diag = 0.2 * (0.5 + 0.5 * np.arange(1, d + 1) / d)
    return GeneratorSpec("SYMMETRIC_HEAVY", d, d_dir=np.diag(diag), tail_index=tail)


def _default_mixture(d):
    return GeneratorSpec(
        "EXCHANGEABLE_MIXTURE",
        d,
        d_dir=0.6 * np.eye(d),
        tau=0.5,
        c=0.3 * np.eye(d),
    )


def _default_wishart(d):
    return GeneratorSpec("IID_WISHART_LIKE", d, scale=0.5)


def _default_hpsd(d, tail):
    return GeneratorSpec("HEAVY_PSD", d, scale=1.0, tail_index=tail)


def _default_ellip(d):
    return GeneratorSpec("ELLIPSOID_RANK1", d, a=np.diag(np.arange(1.0, d + 1.0)))


def default_generator(bound: str, kind: str, d: int) -> GeneratorSpec:
    """A generator of the given kind sized sensibly for the given bound."""
    entry = _entry(bound)
    if kind not in entry.compatible:
        raise IncompatiblePair(f"{bound} is not verified against {kind}")
    if kind == "RADEMACHER_SCALED":
        return _default_rad(d)
    if kind == "GAUSSIAN_SCALED":
        return _default_gauss(d)
    if kind == "BOUNDED_PSD":
        return _default_bpsd(d)
    if kind == "SYMMETRIC_HEAVY":
        # keep requested p-th moments finite for the default p values
        return _default_sheavy(d, 1.75 if bound == "PCHEB1" else 2.5)
    if kind == "EXCHANGEABLE_MIXTURE":
        return _default_mixture(d)
    if kind == "IID_WISHART_LIKE":
        return _default_wishart(d)
    if kind == "HEAVY_PSD":
        return _default_hpsd(d, 1.75 if bound == "XMPCI" else 1.5)
    if kind == "ELLIPSOID_RANK1":
        return _default_ellip(d)
    raise ConfigError(f"unknown generator kind {kind!r}")


#: extra pairings (bound, generator kind, params) run on top of each
#: entry's designated default generator
_EXTRA_RUNS = (
    ("UMMI", "HEAVY_PSD", None),
    ("CHERNOFF_HOEFFDING", "GAUSSIAN_SCALED", None),
    ("CHERNOFF_HOEFFDING", "RADEMACHER_SCALED", {"mgf_kind": "BENNETT_I"}),
    ("CHERNOFF_HOEFFDING", "RADEMACHER_SCALED", {"mgf_kind": "BENNETT_II"}),
    ("CHERNOFF_HOEFFDING", "BOUNDED_PSD", {"mgf_kind": "SYM_HOEFFDING"}),
    ("TRACE_PCHEB", "SYMMETRIC_HEAVY", {"p": 1.2}),
)


def default_run_specs(dims=(1, 2, 5)) -> list[tuple[str, GeneratorSpec, dict | None]]:
    """The standard verification matrix: every bound, its default
    generator, plus a few extra moment-family pairings, at each dim."""
    out = []
    for d in dims:
        for name, entry in _REGISTRY.items():
            out.append((name, default_generator(name, entry.default_kind, d), None))
        for name, kind, params in _EXTRA_RUNS:
            if params and params.get("p") is not None:
                gen = _default_sheavy(d, 1.5)
            else:
                gen = default_generator(name, kind, d)
            out.append((name, gen, params))
    return out


def run_default_suite(
    dims=(1, 2, 5),
    trials_fixed: int = 100_000,
    trials_path: int = 10_000,
    horizon: int = 200,
    workers: int = 1,
    base_seed: int | None = None,
) -> list[McReport]:
    """Run the whole default verification matrix and return the reports."""
    reports = []
    for bound, gen, params in default_run_specs(dims):
        family = _entry(bound).family
        mc = McConfig(
            trials=trials_fixed if family == "fixed" else trials_path,
            horizon=horizon,
            workers=workers,
            base_seed=base_seed,
        )
        reports.append(run_coverage(bound, gen, mc, params))
    return reports


# ---------------------------------------------------------------------------
# conjecture search


@dataclass(frozen=True)
class FalsifyRecord:
    """Largest observed trace-moment ratio over a randomized search.

    The ratio compared is ``tr E|S_n|^p`` against ``n * tr V_p`` for
    centered sums of sign-symmetric matrix increments.  A ratio is an
    observation, never a proof; ``stderr`` quantifies the Monte Carlo
    noise of the winning estimate.
    """

    p: float
    d: int
    best_ratio: float
    stderr: float
    n: int
    mats: tuple
    instances: int
    trials_per_instance: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "best_ratio": self.best_ratio,
            "stderr": self.stderr,
            "n": self.n,
            "mats": [m.tolist() for m in self.mats],
            "instances": self.instances,
            "trials_per_instance": self.trials_per_instance,
            "seed": self.seed,
        }


def falsify_conjecture(
    p: float,
    d: int,
    instances: int = 200,
    trials_per_instance: int = 1500,
    seed: int | None = None,
) -> FalsifyRecord:
    """Search for instances pushing ``tr E|S_n|^p`` past ``n tr V_p``.

    Instances are mixtures ``X = R D_J`` of a fair sign times one of a
    few random symmetric directions, for which ``V_p`` is available in
    closed form (``mean_k |D_k|^p``).  Returns the largest observed
    ratio; at ``p = 2`` the ratio is exactly 1 in expectation, which
    doubles as a calibration check of the estimator.
    """
    if not 1.0 <= p <= 2.0:
        raise ConfigError(f"p must lie in [1, 2], got {p}")
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    if instances < 1 or trials_per_instance < 2:
        raise ConfigError("need at least 1 instance and 2 trials per instance")
    base = seed if seed is not None else _rng.default_seed()
    best = None
    for i in range(instances):
        g = _rng.substream(base, 0xF415, i)
        k = int(g.integers(2, 4))
        raw = g.standard_normal((k, d, d))
        mats = (raw + np.transpose(raw, (0, 2, 1))) / 2.0
        n = int(g.integers(2, 31))
        idx = g.integers(0, k, size=(trials_per_instance, n))
        signs = g.integers(0, 2, size=(trials_per_instance, n)) * 2.0 - 1.0
        sums = (signs[..., None, None] * mats[idx]).sum(axis=1)
        w = np.linalg.eigvalsh(sums)
        tvals = (np.abs(w) ** p).sum(axis=-1)
        tr_vp = float(
            np.mean([sm.trace(sm.mat_pow(sm.mat_abs(mk), p)) for mk in mats])
        )
        denom = n * tr_vp
        ratio = float(tvals.mean()) / denom
        err = float(tvals.std(ddof=1)) / math.sqrt(trials_per_instance) / denom
        if best is None or ratio > best[0]:
            best = (ratio, err, n, tuple(mats))
    return FalsifyRecord(
        p=float(p),
        d=d,
        best_ratio=best[0],
        stderr=best[1],
        n=best[2],
        mats=best[3],
        instances=instances,
        trials_per_instance=trials_per_instance,
        seed=base,
    )
