"""Dense real symmetric matrices: spectral calculus and Loewner-order predicates.

Every matrix handled by this package is a square ``numpy.ndarray`` of
float64 that is exactly symmetric.  :func:`symmat` is the only sanctioned
constructor: it validates the input and returns the symmetric part
``(M + M.T) / 2`` so that downstream code may rely on
``A[i, j] == A[j, i]`` holding bitwise.

Matrix functions (exp, log, sqrt, abs, powers) are applied through the
eigendecomposition: for ``A = Q diag(w) Q.T`` the image is
``Q diag(f(w)) Q.T``.  Order comparisons use the Loewner partial order:
``A <= B`` iff ``B - A`` is positive semidefinite, tested with a relative
eigenvalue tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimMismatch, DomainError

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "SpectralDecomp",
    "symmat",
    "load_matrix",
    "parse_matrix_json",
    "eigh_decomp",
    "apply_spectral",
    "mat_exp",
    "mat_log",
    "mat_sqrt",
    "mat_abs",
    "mat_pow",
    "mat_inv",
    "trace",
    "tr_log",
    "trace_product",
    "lambda_max",
    "lambda_min",
    "spectral_norm",
    "anticommutator",
    "loewner_leq",
    "loewner_geq",
    "is_psd",
    "curlyvee",
    "identity_like",
]

#: Relative tolerance used by all positive-semidefiniteness checks.
TOL_PSD = 1e-8

#: Eigenvalues below this floor make a matrix logarithm meaningless here.
LOG_EIG_FLOOR = 1e-30

#: Condition number ceiling for spectrally computed inverses / negative powers.
MAX_INVERSE_COND = 1e12

#: Maximum relative asymmetry accepted when *loading* a matrix from JSON.
LOAD_ASYMMETRY_TOL = 1e-6


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances for order predicates and spectral sanity checks.

    Attributes
    ----------
    tol_psd : float
        Relative slack on the smallest eigenvalue in PSD / Loewner tests.
    tol_reconstruct : float
        Allowed relative error of ``Q diag(w) Q.T`` against the input.
    tol_ortho : float
        Allowed deviation of ``Q.T Q`` from the identity.
    """

    tol_psd: float = TOL_PSD
    tol_reconstruct: float = 1e-9
    tol_ortho: float = 1e-9


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigendecomposition of a symmetric matrix.

    Attributes
    ----------
    eigenvalues : ndarray, shape (d,)
        Real eigenvalues in ascending order.
    eigenvectors : ndarray, shape (d, d)
        Orthonormal eigenvectors, column ``k`` belonging to
        ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def symmat(m, *, copy: bool = True) -> np.ndarray:
    """Validate and symmetrize a square array.

    Parameters
    ----------
    m : array_like, shape (d, d)
        Square real matrix.  Any asymmetry is averaged away.
    copy : bool, default True
        Force a copy even when the input is already a float64 array.

    Returns
    -------
    ndarray, shape (d, d)
        ``(m + m.T) / 2`` as float64.

    Raises
    ------
    DimMismatch
        If the input is not a square 2-D array.
    DomainError
        If the input contains non-finite entries.
    """
    a = np.array(m, dtype=np.float64, copy=copy)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    return (a + a.T) / 2.0


def parse_matrix_json(obj) -> np.ndarray:
    """Build a symmetric matrix from a decoded JSON array-of-arrays.

    Rows must all have the same length as the number of rows.  Asymmetry
    up to a relative ``1e-6`` is silently symmetrized; anything larger is
    rejected, since it indicates the caller serialized the wrong matrix.

    Raises
    ------
    DomainError
        On ragged rows, non-numeric entries, or asymmetry beyond tolerance.
    DimMismatch
        If the value is not a square array-of-arrays.
    """
    if not isinstance(obj, list) or not obj:
        raise DimMismatch("matrix literal must be a non-empty array of arrays")
    d = len(obj)
    for row in obj:
        if not isinstance(row, list) or len(row) != d:
            raise DimMismatch("matrix literal must be square")
    try:
        a = np.array(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"matrix entries must be numbers: {exc}") from None
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    gap = np.max(np.abs(a - a.T))
    scale = max(1.0, float(np.max(np.abs(a))))
    if gap > LOAD_ASYMMETRY_TOL * scale:
        raise DomainError(
            f"matrix is asymmetric beyond tolerance ({gap:.3e} relative to {scale:.3e})"
        )
    return symmat(a, copy=False)


def load_matrix(text: str) -> np.ndarray:
    """Parse a JSON string containing one matrix literal."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid JSON: {exc}") from None
    return parse_matrix_json(obj)


def _require_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"{name} must be square, got shape {a.shape}")


def _require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimMismatch(f"operands have different shapes {a.shape} and {b.shape}")


def eigh_decomp(a: np.ndarray) -> SpectralDecomp:
    """Eigendecompose a symmetric matrix (eigenvalues ascending)."""
    _require_square(a)
    w, q = np.linalg.eigh(symmat(a, copy=False))
    return SpectralDecomp(eigenvalues=w, eigenvectors=q)


def apply_spectral(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its spectrum.

    Parameters
    ----------
    f : callable
        Vectorized map on the eigenvalue array.
    a : ndarray, shape (d, d)
        Symmetric matrix.

    Returns
    -------
    ndarray, shape (d, d)
        ``Q diag(f(w)) Q.T``, explicitly re-symmetrized to absorb
        floating-point drift.
    """
    dec = eigh_decomp(a)
    fw = np.asarray(f(dec.eigenvalues), dtype=np.float64)
    if fw.shape != dec.eigenvalues.shape:
        raise DomainError("spectral map must return one value per eigenvalue")
    if not np.all(np.isfinite(fw)):
        raise DomainError("spectral map produced non-finite values")
    out = (dec.eigenvectors * fw) @ dec.eigenvectors.T
    return (out + out.T) / 2.0


def _eig_scale(w: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)


def mat_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix."""
    return apply_spectral(np.exp, a)


def mat_log(a: np.ndarray, *, floor: float = LOG_EIG_FLOOR) -> np.ndarray:
    """Matrix logarithm of a symmetric positive definite matrix.

    Raises
    ------
    DomainError
        If any eigenvalue is below ``floor`` (default ``1e-30``).
    """
    dec = eigh_decomp(a)
    if dec.eigenvalues[0] < floor:
        raise DomainError(
            f"matrix log needs eigenvalues >= {floor:g}, smallest is "
            f"{dec.eigenvalues[0]:.6e}"
        )
    out = (dec.eigenvectors * np.log(dec.eigenvalues)) @ dec.eigenvectors.T
    return (out + out.T) / 2.0


def _clamped_nonneg(w: np.ndarray, tol_psd: float) -> np.ndarray:
    """Clamp eigenvalues in ``[-tol, 0)`` to zero; reject anything lower."""
    slack = tol_psd * _eig_scale(w)
    if w[0] < -slack:
        raise DomainError(
            f"matrix is not positive semidefinite: smallest eigenvalue "
            f"{w[0]:.6e} below -{slack:.3e}"
        )
    return np.maximum(w, 0.0)


def mat_sqrt(a: np.ndarray, *, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix.

    Eigenvalues within ``-tol_psd * scale`` of zero are clamped to zero
    before the root is taken; more negative spectra raise ``DomainError``.
    """
    dec = eigh_decomp(a)
    w = _clamped_nonneg(dec.eigenvalues, tol_psd)
    out = (dec.eigenvectors * np.sqrt(w)) @ dec.eigenvectors.T
    return (out + out.T) / 2.0


def mat_abs(a: np.ndarray) -> np.ndarray:
    """Matrix absolute value ``(A^2)^{1/2}`` via absolute eigenvalues."""
    return apply_spectral(np.abs, a)


def mat_pow(a: np.ndarray, k: float, *, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Matrix power ``A^k`` through the spectrum.

    Integer ``k >= 0`` works for any symmetric matrix.  Non-integer
    ``k >= 0`` requires a PSD matrix (tiny negative eigenvalues are
    clamped as in :func:`mat_sqrt`).  Negative ``k`` requires a positive
    definite matrix with condition number at most ``1e12``.

    Raises
    ------
    DomainError
        On negative spectra (fractional powers) or ill-conditioned /
        singular matrices (negative powers).
    """
    dec = eigh_decomp(a)
    w = dec.eigenvalues
    if k < 0:
        if w[0] <= 0.0:
            raise DomainError(
                f"negative power needs a positive definite matrix, smallest "
                f"eigenvalue is {w[0]:.6e}"
            )
        cond = w[-1] / w[0]
        if cond > MAX_INVERSE_COND:
            raise DomainError(
                f"condition number {cond:.3e} exceeds {MAX_INVERSE_COND:g}; "
                "refusing to invert"
            )
        pw = w**k
    elif float(k).is_integer():
        pw = w ** float(k)
    else:
        pw = _clamped_nonneg(w, tol_psd) ** float(k)
    out = (dec.eigenvectors * pw) @ dec.eigenvectors.T
    return (out + out.T) / 2.0


def mat_inv(a: np.ndarray) -> np.ndarray:
    """Spectral inverse ``A^{-1}`` with the condition-number guard."""
    return mat_pow(a, -1.0)


def trace(a: np.ndarray) -> float:
    """Trace as a Python float."""
    _require_square(a)
    return float(np.trace(a))


def trace_product(a: np.ndarray, b: np.ndarray) -> float:
    """``tr(A B)`` without forming the product matrix."""
    _require_same_shape(a, b)
    return float(np.einsum("ij,ji->", a, b))


def tr_log(a: np.ndarray, *, floor: float = LOG_EIG_FLOOR) -> float:
    """``tr log A`` as the sum of log eigenvalues."""
    w = eigh_decomp(a).eigenvalues
    if w[0] < floor:
        raise DomainError(
            f"trace-log needs eigenvalues >= {floor:g}, smallest is {w[0]:.6e}"
        )
    return float(np.sum(np.log(w)))


def lambda_max(a: np.ndarray) -> float:
    """Largest eigenvalue."""
    return float(eigh_decomp(a).eigenvalues[-1])


def lambda_min(a: np.ndarray) -> float:
    """Smallest eigenvalue."""
    return float(eigh_decomp(a).eigenvalues[0])


def spectral_norm(a: np.ndarray) -> float:
    """Operator norm: largest absolute eigenvalue."""
    w = eigh_decomp(a).eigenvalues
    return float(max(abs(w[0]), abs(w[-1])))


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``AB + BA``, symmetric whenever A and B are."""
    _require_same_shape(a, b)
    out = a @ b + b @ a
    return (out + out.T) / 2.0


def is_psd(a: np.ndarray, *, tol_psd: float = TOL_PSD) -> bool:
    """Positive semidefinite up to the relative eigenvalue tolerance."""
    w = eigh_decomp(a).eigenvalues
    return bool(w[0] >= -tol_psd * _eig_scale(w))


def loewner_leq(a: np.ndarray, b: np.ndarray, *, tol_psd: float = TOL_PSD) -> bool:
    """Loewner comparison ``A <= B``.

    True iff the smallest eigenvalue of ``B - A`` is at least
    ``-tol_psd * max(1, ||B - A||)``, so exact ties and rounding noise
    count as ordered.
    """
    _require_same_shape(a, b)
    return is_psd(b - a, tol_psd=tol_psd)


def loewner_geq(a: np.ndarray, b: np.ndarray, *, tol_psd: float = TOL_PSD) -> bool:
    """Loewner comparison ``A >= B``."""
    return loewner_leq(b, a, tol_psd=tol_psd)


def curlyvee(a: np.ndarray, b: np.ndarray, *, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Matrix minimum: ``A`` when ``A <= B``, else ``A - lambda_max(A-B) I``.

    The result is always below both arguments in the Loewner order: the
    shift makes ``A - lambda_max(A - B) I <= B`` hold exactly, since the
    smallest eigenvalue of ``B - A`` equals ``-lambda_max(A - B)``.
    Within-tolerance comparisons resolve to the first branch, so a
    near-tie returns ``A`` unchanged.
    """
    _require_same_shape(a, b)
    if loewner_leq(a, b, tol_psd=tol_psd):
        return np.array(a, dtype=np.float64)
    shift = lambda_max(a - b)
    return a - shift * np.eye(a.shape[0])


def identity_like(a: np.ndarray) -> np.ndarray:
    """Identity matrix with the dimension of ``a``."""
    _require_square(a)
    return np.eye(a.shape[0])
