"""Dense real symmetric matrices, their spectra, and resolvent quadratic forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearSingularResolventError, NonConvergenceError, PreconditionError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
_SYMMETRY_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """An immutable real symmetric ``n x n`` matrix.

    Inputs that are symmetric up to rounding are averaged with their transpose,
    which makes the stored entries exactly symmetric. Anything further from
    symmetric is rejected.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise PreconditionError(f"expected a non-empty square array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise PreconditionError("matrix has non-finite entries")
        scale = 1.0 + float(np.max(np.abs(a)))
        asym = float(np.max(np.abs(a - a.T)))
        if asym > _SYMMETRY_TOL * scale:
            raise PreconditionError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
        object.__setattr__(self, "entries", _readonly(0.5 * (a + a.T)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def trace(self) -> float:
        return float(np.trace(self.entries))


@dataclass(frozen=True, eq=False)
class SymmetricSpectrum:
    """Ascending eigenvalues with orthonormal eigenvectors stored column-wise."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        q = np.asarray(self.eigenvectors, dtype=float)
        if lam.ndim != 1 or q.shape != (lam.size, lam.size):
            raise PreconditionError("eigenvalue/eigenvector shapes do not match")
        object.__setattr__(self, "eigenvalues", _readonly(lam))
        object.__setattr__(self, "eigenvectors", _readonly(q))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def coefficients(self, x) -> np.ndarray:
        """Squared coordinates ``<x, psi_i>^2`` of ``x`` in the eigenbasis."""
        x = as_vec(x, self.dim)
        return (self.eigenvectors.T @ x) ** 2

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def as_vec(x, dim: int | None = None) -> np.ndarray:
    """Validate ``x`` as a finite 1-d float vector (of length ``dim`` if given)."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise PreconditionError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise PreconditionError(f"dimension mismatch: vector has {v.size} entries, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise PreconditionError("vector has non-finite entries")
    return v


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigenvalue iteration for a symmetric array.

    Sweeps over all pairs ``p < q`` in row order, annihilating each off-diagonal
    entry with a plane rotation, until the off-diagonal Frobenius norm drops to
    ``tol * ||a||_F``. Returns unsorted ``(eigenvalues, eigenvectors)``.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    fro = float(np.linalg.norm(a))
    if n == 1 or fro == 0.0:
        return np.diag(a).copy(), v
    target = tol * fro
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= target:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = float(np.linalg.norm(a - np.diag(np.diag(a))))
    if off <= target:
        return np.diag(a).copy(), v
    raise NonConvergenceError(
        f"Jacobi iteration did not converge in {max_sweeps} sweeps "
        f"(n={n}, ||A||_F={fro:.3e}, off-diagonal norm {off:.3e}, target {target:.3e})"
    )


def eigendecompose(A: SymMatrix, method: str = "lapack") -> SymmetricSpectrum:
    """Eigendecomposition with eigenvalues sorted ascending.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"`` runs the
    cyclic Jacobi solver in this module.
    """
    a = A.entries if isinstance(A, SymMatrix) else SymMatrix(A).entries
    if method == "lapack":
        try:
            lam, q = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(
                f"LAPACK eigh failed (n={a.shape[0]}, cond estimate {np.linalg.cond(a):.3e}): {exc}"
            ) from exc
    elif method == "jacobi":
        lam, q = jacobi_eigh(a)
    else:
        raise PreconditionError(f"unknown eigensolver {method!r}")
    order = np.argsort(lam, kind="stable")
    return SymmetricSpectrum(lam[order], q[:, order])


def rank_one_add(A: SymMatrix, x) -> SymMatrix:
    """Return ``A + x x^T``."""
    x = as_vec(x, A.dim)
    return SymMatrix(A.entries + np.outer(x, x))


def spectral_sum(coeffs: np.ndarray, gaps: np.ndarray, power: int = 1) -> float:
    """``sum_i coeffs_i / gaps_i**power`` for strictly positive gaps."""
    return float(np.sum(coeffs / gaps**power))


def resolvent_form(spec: SymmetricSpectrum, shiftpoint: float, power: int, x) -> float:
    """Quadratic form ``x^T (A - s I)^{-power} x`` evaluated in the eigenbasis.

    The sum is ``sum_i <x, psi_i>^2 / (lambda_i - s)^power``; for points above the
    spectrum the caller flips signs as needed.
    """
    if power not in (1, 2):
        raise PreconditionError("power must be 1 or 2")
    lam = spec.eigenvalues
    d = lam - shiftpoint
    if np.any(np.abs(d) <= 1e-12 * (1.0 + np.abs(lam))):
        raise NearSingularResolventError(
            f"near-singular resolvent: shift point {shiftpoint!r} is within rounding of an eigenvalue"
        )
    return float(np.sum(spec.coefficients(x) / d**power))
