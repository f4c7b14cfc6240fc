"""Dense complex linear algebra used by the rest of the package.

Operators are plain ``numpy`` arrays of dtype ``complex128`` with shape
``(n, n)``.  The helpers here add the contracts the calculus relies on:
one notion of "singular" (pivot modulus below ``PIVOT_RTOL`` times the
largest entry), a reproducible norm estimate and an exponential that
refuses arguments whose norm would overflow.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import NoConvergence, Overflow, SingularMatrix

PIVOT_RTOL = 1e-14
# power iteration start vector seed; fixed so norm estimates are bit-stable
NORM_SEED = 20170544
NORM_MAX_ITER = 500
EXP_NORM_LIMIT = 700.0
COMMUTATOR_EPS = 1e-300


def as_matrix(A, name="A") -> np.ndarray:
    """Validate and convert ``A`` to a square, finite complex128 array."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def norm2(A) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(A), 2))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    radius: float

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))


class LUFactorization:
    """Partial-pivoting LU of a square matrix with the package's pivot test.

    Raises
    ------
    SingularMatrix
        If some pivot has modulus below ``PIVOT_RTOL * max|A_ij|``.
    """

    def __init__(self, A):
        A = as_matrix(A)
        scale = float(np.max(np.abs(A)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(lu))
        smallest = float(pivots.min())
        if scale == 0.0 or smallest < PIVOT_RTOL * scale:
            raise SingularMatrix(
                f"pivot {smallest:.3e} below {PIVOT_RTOL:g} * {scale:.3e}"
            )
        self.dim = A.shape[0]
        self.min_pivot_ratio = smallest / scale
        self._factors = (lu, piv)

    def solve(self, B, transpose=False) -> np.ndarray:
        """Solve ``A X = B`` (or ``A^T X = B`` when ``transpose``)."""
        B = np.asarray(B, dtype=np.complex128)
        if B.shape[0] != self.dim:
            raise ValueError(f"right-hand side has {B.shape[0]} rows, expected {self.dim}")
        return scipy.linalg.lu_solve(self._factors, B, trans=1 if transpose else 0,
                                     check_finite=False)

    def solve_right(self, B) -> np.ndarray:
        """Return ``B A^{-1}``."""
        return self.solve(np.asarray(B).T, transpose=True).T


def lu_solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` with partial pivoting."""
    A = as_matrix(A)
    B = np.asarray(B, dtype=np.complex128)
    if B.ndim == 2 and B.shape[0] == B.shape[1] and B.shape != A.shape:
        raise ValueError("A and B must have the same dimension")
    return LUFactorization(A).solve(B)


def inverse(A) -> np.ndarray:
    A = as_matrix(A)
    return LUFactorization(A).solve(identity(A.shape[0]))


def eigenvalues(A) -> Spectrum:
    """All eigenvalues of ``A`` with multiplicity.

    LAPACK ``geev`` performs the Hessenberg reduction and shifted QR sweeps.
    """
    A = as_matrix(A)
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"QR iteration failed: {exc}") from exc
    lam = np.asarray(lam, dtype=np.complex128)
    return Spectrum(eigenvalues=lam, radius=float(np.max(np.abs(lam))))


def operator_norm_estimate(A, max_iter: int = NORM_MAX_ITER, rtol: float = 1e-14) -> float:
    """Estimate the largest singular value by power iteration on ``A^H A``.

    The start vector comes from a generator seeded with ``NORM_SEED`` so the
    estimate is reproducible.  The returned value is ``||A v||`` for a unit
    vector ``v`` and therefore never exceeds the true norm beyond roundoff.
    """
    A = as_matrix(A)
    if not np.any(A):
        return 0.0
    n = A.shape[0]
    rng = np.random.default_rng(NORM_SEED)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        Av = A @ v
        new_sigma = float(np.linalg.norm(Av))
        w = A.conj().T @ Av
        wn = np.linalg.norm(w)
        if wn == 0.0:
            # v lies in the kernel of A^H A
            break
        v = w / wn
        if abs(new_sigma - sigma) <= rtol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return max(sigma, float(np.linalg.norm(A @ v)))


def matrix_exp(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Padé
    approximant.

    Raises ``Overflow`` when ``||A||_2 > 700``.
    """
    A = as_matrix(A)
    bound = np.sqrt(np.linalg.norm(A, 1) * np.linalg.norm(A, np.inf))
    if bound > EXP_NORM_LIMIT and norm2(A) > EXP_NORM_LIMIT:
        raise Overflow(f"||A|| = {norm2(A):.4g} exceeds {EXP_NORM_LIMIT:g}")
    E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise Overflow("matrix exponential overflowed")
    return E


def commutator_residual(A, B) -> float:
    """Relative size ``||AB - BA|| / (||A|| ||B|| + eps)``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError("A and B must have the same dimension")
    C = A @ B - B @ A
    return norm2(C) / (norm2(A) * norm2(B) + COMMUTATOR_EPS)


# -- matrix file format ------------------------------------------------------

def matrix_to_doc(A) -> dict:
    A = as_matrix(A)
    flat = np.empty(2 * A.size)
    flat[0::2] = A.real.ravel()
    flat[1::2] = A.imag.ravel()
    return {"dim": int(A.shape[0]), "entries": [float(x) for x in flat]}


def matrix_from_doc(doc: dict) -> np.ndarray:
    if set(doc) != {"dim", "entries"}:
        raise ValueError(f"matrix document must have exactly 'dim' and 'entries', got {sorted(doc)}")
    n = doc["dim"]
    if not isinstance(n, int) or n < 1:
        raise ValueError("dim must be a positive integer")
    flat = np.asarray(doc["entries"], dtype=np.float64)
    if flat.shape != (2 * n * n,):
        raise ValueError(f"expected {2 * n * n} entries, got {flat.size}")
    return as_matrix((flat[0::2] + 1j * flat[1::2]).reshape(n, n))


def save_matrix(path, A) -> None:
    # json writes the shortest repr of each float, which round-trips exactly
    Path(path).write_text(json.dumps(matrix_to_doc(A)) + "\n")


def load_matrix(path) -> np.ndarray:
    return matrix_from_doc(json.loads(Path(path).read_text()))
