"""Matrix-valued test supermartingales and time-uniform threshold events.

A nonnegative matrix supermartingale is assembled from *factor pairs*
``(E_n, A_n)`` with ``E[E_n | past] <= A_n^{-1}``: the running value

    Y_n = L_n L_n^T,   L_n = sqrt(A_1) sqrt(E_1) ... sqrt(A_n) sqrt(E_n)

starts at ``Y_0 = I`` and satisfies ``E[Y_n | past] <= Y_{n-1}``.  Only
the left factor ``L_n`` is stored; ``Y_n`` is materialized on demand.

Four factor builders ship: an MGF tilt, a betting (linear) factor, a
self-normalized exponential, and a symmetric-deviations exponential.
On top of the process sit the threshold events: the stopped randomized
Ville event, the time-uniform (unrandomized) Ville event, the e-process
minimum fold, the finite-horizon Doob event for submartingales, and the
running-average events for exchangeable sequences.

The time-uniform ``exists n`` forms are never randomized: randomization
is sound only for the value at a stopping time, not for the supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import symmat as sm
from .errors import DimMismatch, DomainError, GammaOutOfRange, ParamMismatch
from .fixed_bounds import MgfSpec, markov_threshold, ummi_bound

__all__ = [
    "BUILDER_KINDS",
    "DEFAULT_N_MAX",
    "FactorStream",
    "MatSupermartingaleState",
    "RunningMean",
    "default_gamma_schedule",
    "mgf_growth_matrix",
    "betting_gamma_interval",
    "build_factors",
    "sm_step",
    "ville_event",
    "ville_bound",
    "mvi_event",
    "eprocess_min",
    "doob_event",
    "doob_bound",
    "xmci_event",
    "xmci_bound",
    "xmci2_event",
    "xmci2_bound",
    "xmpci_event",
    "xmpci_bound",
    "trace_pcheb_event",
    "trace_pcheb_bound",
    "exchangeable_conditional_mean",
]

BUILDER_KINDS = ("MGF", "BETTING", "SELF_NORMALIZED", "SYMMETRIC_DIST")

#: Truncation horizon for "exists n" event scans; the infinite-horizon
#: claims are monotone in the horizon, so truncation is conservative.
DEFAULT_N_MAX = 500


def default_gamma_schedule(scale: float = 1.0) -> Callable[[int], float]:
    """Deterministic schedule ``gamma_n = scale / sqrt(n)`` (n counted from 1)."""
    if scale <= 0.0:
        raise DomainError(f"gamma scale must be positive, got {scale}")

    def schedule(n: int) -> float:
        return scale / math.sqrt(n)

    return schedule


def mgf_growth_matrix(spec: MgfSpec, gamma: float) -> np.ndarray:
    """Matrix ``G(gamma)`` dominating ``E e^{gamma (X - M)}`` for one family."""
    mat = spec.matrix
    if spec.kind in ("RADEMACHER", "UNI_GAUSSIAN"):
        inner = (gamma**2 / 2.0) * sm.mat_pow(mat, 2.0)
    elif spec.kind == "SYM_HOEFFDING":
        inner = (gamma**2 / 2.0) * mat
    else:
        inner = (math.expm1(gamma) - gamma) * mat
    return sm.mat_exp(inner)


def betting_gamma_interval(m: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Open admissible interval for the betting factor's gamma.

    Keeps ``I + gamma (X - M)`` positive semidefinite for every
    ``0 <= X <= B``: ``(-1 / lambda_max(B - M), 1 / lambda_max(M))``,
    with infinite endpoints when the respective lambda_max is zero.
    """
    lo_den = sm.lambda_max(b - m)
    hi_den = sm.lambda_max(m)
    lo = -math.inf if lo_den <= 0.0 else -1.0 / lo_den
    hi = math.inf if hi_den <= 0.0 else 1.0 / hi_den
    return lo, hi


def build_factors(
    kind: str,
    x: np.ndarray,
    m: np.ndarray,
    gamma: float,
    *,
    mgf: MgfSpec | None = None,
    v: np.ndarray | None = None,
    b: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Factor pair ``(E_n, A_n)`` for one observation.

    Parameters
    ----------
    kind : {"MGF", "BETTING", "SELF_NORMALIZED", "SYMMETRIC_DIST"}
        Which construction to use.
    x, m : ndarray
        Observation and its (hypothesized) conditional mean.
    gamma : float
        Tuning scalar for this step.
    mgf : MgfSpec, required for MGF
        Family whose growth matrix ``G(gamma)`` caps the tilt's mean.
    v : ndarray, required for SELF_NORMALIZED
        Predictable conditional variance (bound), PSD.
    b : ndarray, required for BETTING
        Predictable upper bound with ``0 <= X <= B`` almost surely.

    Returns
    -------
    (E, A) : pair of ndarray
        ``E`` PSD, ``A`` positive definite, satisfying
        ``E[E | past] <= A^{-1}`` under the kind's assumptions.

    Raises
    ------
    GammaOutOfRange
        For BETTING, when gamma leaves the open admissible interval.
    ParamMismatch
        When the kind's parameter is missing.
    """
    x = sm.symmat(x, copy=False)
    m = sm.symmat(m, copy=False)
    if x.shape != m.shape:
        raise DimMismatch("observation and mean have different shapes")
    dev = x - m
    if kind == "MGF":
        if mgf is None:
            raise ParamMismatch("MGF builder needs an MgfSpec")
        if mgf.dim != x.shape[0]:
            raise DimMismatch("MGF parameter dimension does not match data")
        e = sm.mat_exp(gamma * dev)
        a = sm.mat_inv(mgf_growth_matrix(mgf, gamma))
        return e, a
    if kind == "BETTING":
        if b is None:
            raise ParamMismatch("BETTING builder needs the upper bound b")
        b = sm.symmat(b, copy=False)
        lo, hi = betting_gamma_interval(m, b)
        if not (lo < gamma < hi):
            raise GammaOutOfRange(
                f"gamma {gamma} outside the open interval ({lo:.6g}, {hi:.6g})"
            )
        e = np.eye(x.shape[0]) + gamma * dev
        return e, np.eye(x.shape[0])
    if kind == "SELF_NORMALIZED":
        if v is None:
            raise ParamMismatch("SELF_NORMALIZED builder needs the variance v")
        v = sm.symmat(v, copy=False)
        e = sm.mat_exp(gamma * dev - (gamma**2 / 6.0) * (dev @ dev))
        a = sm.mat_exp(-(gamma**2 / 3.0) * v)
        return e, a
    if kind == "SYMMETRIC_DIST":
        e = sm.mat_exp(gamma * dev - (gamma**2 / 2.0) * (dev @ dev))
        return e, np.eye(x.shape[0])
    raise ParamMismatch(f"unknown builder kind {kind!r}")


@dataclass
class FactorStream:
    """Factory turning a stream of observations into factor pairs.

    Parameters
    ----------
    kind : str
        Builder kind, see :func:`build_factors`.
    m : ndarray
        Hypothesized conditional mean, constant across steps.
    gamma : float, sequence of float, or callable, optional
        Constant, per-step list, or schedule ``n -> gamma_n`` (n from 1).
        Defaults to ``1/sqrt(n)``, scaled for BETTING so the bet stays
        inside its admissible interval.
    mgf, v, b :
        Kind parameters as in :func:`build_factors`.
    """

    kind: str
    m: np.ndarray
    gamma: float | Sequence[float] | Callable[[int], float] | None = None
    mgf: MgfSpec | None = None
    v: np.ndarray | None = None
    b: np.ndarray | None = None
    n: int = field(default=0, init=False)

    def __post_init__(self):
        if self.kind not in BUILDER_KINDS:
            raise ParamMismatch(f"unknown builder kind {self.kind!r}")
        self.m = sm.symmat(self.m)
        if self.v is not None:
            self.v = sm.symmat(self.v)
        if self.b is not None:
            self.b = sm.symmat(self.b)
        if self.gamma is None:
            if self.kind == "BETTING":
                if self.b is None:
                    raise ParamMismatch("BETTING builder needs the upper bound b")
                hi = betting_gamma_interval(self.m, self.b)[1]
                scale = 0.5 * hi if math.isfinite(hi) else 1.0
            else:
                scale = 1.0
            self.gamma = default_gamma_schedule(scale)

    def gamma_at(self, n: int) -> float:
        if callable(self.gamma):
            return float(self.gamma(n))
        if isinstance(self.gamma, (int, float)):
            return float(self.gamma)
        try:
            return float(self.gamma[n - 1])
        except IndexError:
            raise GammaOutOfRange(f"gamma list exhausted at step {n}") from None

    def next_factors(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Consume one observation, emit its ``(E_n, A_n)``."""
        self.n += 1
        g = self.gamma_at(self.n)
        return build_factors(
            self.kind, x, self.m, g, mgf=self.mgf, v=self.v, b=self.b
        )


@dataclass
class MatSupermartingaleState:
    """Incremental state of the factor-product supermartingale.

    Only the left factor is stored; the current value is
    ``Y_n = left @ left.T``, which is PSD by construction.
    """

    left: np.ndarray
    n: int = 0

    @classmethod
    def start(cls, dim: int) -> "MatSupermartingaleState":
        return cls(left=np.eye(dim), n=0)

    def value(self) -> np.ndarray:
        y = self.left @ self.left.T
        return (y + y.T) / 2.0

    def step(self, e: np.ndarray, a: np.ndarray) -> "MatSupermartingaleState":
        """Absorb one factor pair; returns the advanced state."""
        e = sm.symmat(e, copy=False)
        a = sm.symmat(a, copy=False)
        if e.shape != a.shape or e.shape[0] != self.left.shape[0]:
            raise DimMismatch("factor dimensions do not match the state")
        if sm.lambda_min(a) <= 0.0:
            raise DomainError("A_n must be positive definite")
        # mat_sqrt clamps eigenvalues in [-tol, 0) and rejects lower ones.
        left = self.left @ sm.mat_sqrt(a) @ sm.mat_sqrt(e)
        return MatSupermartingaleState(left=left, n=self.n + 1)


def sm_step(
    state: MatSupermartingaleState, e: np.ndarray, a: np.ndarray
) -> MatSupermartingaleState:
    """Functional alias for :meth:`MatSupermartingaleState.step`."""
    return state.step(e, a)


def ville_event(y: np.ndarray, a: np.ndarray, u_mat: np.ndarray) -> bool:
    """Randomized stopped-value event ``Y_tau not <= A^{1/2} U A^{1/2}``."""
    return not sm.loewner_leq(sm.symmat(y, copy=False), markov_threshold(a, u_mat))


def ville_bound(y0_mean: np.ndarray, a: np.ndarray) -> float:
    """Threshold-crossing bound ``tr((E Y_0) A^{-1})``."""
    return ummi_bound(y0_mean, a)


def mvi_event(history, a: np.ndarray) -> bool:
    """Time-uniform event ``exists n: Y_n not <= A`` — never randomized."""
    a = sm.symmat(a, copy=False)
    return any(not sm.loewner_leq(sm.symmat(y, copy=False), a) for y in history)


def eprocess_min(processes) -> np.ndarray:
    """Left fold of the matrix minimum over current process values.

    Accepts states or plain matrices.  The result is a common Loewner
    lower bound of all inputs, hence itself dominated by a supermartingale
    under the union of the nulls.
    """
    values = [
        p.value() if isinstance(p, MatSupermartingaleState) else sm.symmat(p, copy=False)
        for p in processes
    ]
    if not values:
        raise DomainError("need at least one process")
    out = values[0]
    for v in values[1:]:
        if v.shape != out.shape:
            raise DimMismatch("processes have different dimensions")
        out = sm.curlyvee(out, v)
    return out


def doob_event(history, a: np.ndarray) -> bool:
    """Finite-horizon event ``exists n <= N: Y_n not <= A``."""
    return mvi_event(history, a)


def doob_bound(ey_last: np.ndarray, a: np.ndarray) -> float:
    """Submartingale maximal bound ``tr((E Y_N) A^{-1})``."""
    return ummi_bound(ey_last, a)


@dataclass
class RunningMean:
    """Running average of a matrix stream."""

    running_sum: np.ndarray
    n: int = 0

    @classmethod
    def start(cls, dim: int) -> "RunningMean":
        return cls(running_sum=np.zeros((dim, dim)), n=0)

    def update(self, x: np.ndarray) -> "RunningMean":
        x = sm.symmat(x, copy=False)
        if x.shape != self.running_sum.shape:
            raise DimMismatch("observation does not match accumulator shape")
        return RunningMean(running_sum=self.running_sum + x, n=self.n + 1)

    def mean(self) -> np.ndarray:
        if self.n == 0:
            raise DomainError("no observations yet")
        return self.running_sum / self.n


def _scan_running_means(xs) -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimMismatch("expected a stack of square matrices")
    counts = np.arange(1, arr.shape[0] + 1, dtype=np.float64)
    return np.cumsum(arr, axis=0) / counts[:, None, None]


def xmci_event(xs, m, a, n_max: int = DEFAULT_N_MAX) -> bool:
    """Exchangeable Chebyshev event ``exists n: abs(Xbar_n - M) not <= A``."""
    a = _require_pd_local(a)
    m = sm.symmat(m, copy=False)
    means = _scan_running_means(xs)[:n_max]
    for xbar in means:
        if not sm.loewner_leq(sm.mat_abs(sm.symmat(xbar, copy=False) - m), a):
            return True
    return False


def xmci_bound(v, a) -> float:
    """Time-uniform Chebyshev bound ``tr(V A^{-2})``."""
    return sm.trace_product(sm.symmat(v, copy=False), sm.mat_pow(_require_pd_local(a), -2.0))


def xmci2_event(xs, m, a, n_start: int, n_max: int = DEFAULT_N_MAX) -> bool:
    """Late-start variant scanning only ``n >= n_start``."""
    if n_start < 1:
        raise DomainError(f"n_start must be >= 1, got {n_start}")
    a = _require_pd_local(a)
    m = sm.symmat(m, copy=False)
    means = _scan_running_means(xs)[n_start - 1 : n_max]
    for xbar in means:
        if not sm.loewner_leq(sm.mat_abs(sm.symmat(xbar, copy=False) - m), a):
            return True
    return False


def xmci2_bound(v, a, n_start: int) -> float:
    """Late-start bound ``tr(V A^{-2}) / N``.

    Needs the zero-anticommutator condition across distinct deviations;
    i.i.d. sampling suffices.
    """
    if n_start < 1:
        raise DomainError(f"n_start must be >= 1, got {n_start}")
    return xmci_bound(v, a) / n_start


def xmpci_event(xs, a, p: float, n_max: int = DEFAULT_N_MAX) -> bool:
    """PSD running-average event ``exists n: Xbar_n not <= A``."""
    _check_p_range(p)
    a = _require_pd_local(a)
    means = _scan_running_means(xs)[:n_max]
    for xbar in means:
        if not sm.loewner_leq(sm.symmat(xbar, copy=False), a):
            return True
    return False


def xmpci_bound(vp_raw, a, p: float) -> float:
    """Raw-moment bound ``tr(V_p A^{-p})`` for PSD exchangeable streams."""
    _check_p_range(p)
    return sm.trace_product(sm.symmat(vp_raw, copy=False), sm.mat_pow(_require_pd_local(a), -p))


def trace_pcheb_event(xs, m, a_scalar: float, p: float, n_max: int = DEFAULT_N_MAX) -> bool:
    """Trace event ``exists n: tr(abs(Xbar_n - M)^p) >= a^p``."""
    if p < 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    if a_scalar <= 0.0:
        raise DomainError(f"scalar threshold must be positive, got {a_scalar}")
    m = sm.symmat(m, copy=False)
    means = _scan_running_means(xs)[:n_max]
    ap = a_scalar**p
    for xbar in means:
        w = np.linalg.eigvalsh(sm.symmat(xbar, copy=False) - m)
        if float(np.sum(np.abs(w) ** p)) >= ap:
            return True
    return False


def trace_pcheb_bound(tr_vp: float, a_scalar: float, p: float) -> float:
    """Trace bound ``tr(V_p) / a^p``."""
    if p < 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    if a_scalar <= 0.0:
        raise DomainError(f"scalar threshold must be positive, got {a_scalar}")
    return tr_vp / a_scalar**p


def exchangeable_conditional_mean(
    xs,
    m,
    p: float,
    gen: np.random.Generator,
    n_perms: int = 200,
) -> np.ndarray:
    """Permutation estimate of ``E[(Xbar_n - M)^p | exchangeable sigma-field]``.

    Given the first ``n + 1`` observations, averages ``(Xbar_n - M)^p``
    over ``n_perms`` uniformly sampled permutations of them (each
    permutation keeps its first ``n`` entries).  Diagnostic estimator
    for property tests only — never used in bound evaluation.
    """
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] < 2:
        raise DimMismatch("need at least two stacked square matrices")
    m = sm.symmat(m, copy=False)
    k = arr.shape[0]
    acc = np.zeros_like(m)
    for _ in range(n_perms):
        idx = gen.permutation(k)[: k - 1]
        dev = sm.symmat(arr[idx].mean(axis=0), copy=False) - m
        if float(p).is_integer():
            acc += np.linalg.matrix_power(dev, int(p))
        else:
            acc += sm.mat_pow(dev, p)
    return sm.symmat(acc / n_perms, copy=False)


def _require_pd_local(a) -> np.ndarray:
    a = sm.symmat(a, copy=False)
    if sm.lambda_min(a) <= 0.0:
        raise DomainError("threshold matrix must be positive definite")
    return a


def _check_p_range(p: float) -> None:
    if not (1.0 <= p <= 2.0):
        raise DomainError(f"p must lie in [1, 2], got {p}")
