"""Operator and superoperator algebra on a finite-dimensional Hilbert space.

Vectorization is column-stacking throughout the package: ``vec(A)[j*D + i]
= A[i, j]``.  Under this convention left multiplication by ``X`` is the
Kronecker product ``I (x) X`` and right multiplication is ``X.T (x) I``,
so any product ``X rho Y`` is the matrix ``(Y.T (x) X) vec(rho)``.

Superoperators are dense ``D^2 x D^2`` complex matrices.  Two trace
contracts occur: a *generator* ``L`` is trace-annihilating (``w^dag L = 0``
with ``w = vec(I)``) while a *map* ``V`` is trace-preserving
(``w^dag V = w^dag``).  Helpers below measure the defect of either.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY_2",
    "DensityDiagnostics",
    "vectorize",
    "devectorize",
    "left_mult",
    "right_mult",
    "liouvillian",
    "superop_exp",
    "trace_covector",
    "trace_defect_map",
    "trace_defect_generator",
    "hermiticity_preservation_defect",
    "hermiticity_defect",
    "density_diagnostics",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

#: structural tolerance for Hermiticity / trace of physical inputs
STRUCTURAL_TOL = 1e-12
#: tolerance for algebraic identities between computed superoperators
ALGEBRAIC_TOL = 1e-10


def _square(a: np.ndarray, name: str = "operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def vectorize(a: np.ndarray) -> np.ndarray:
    """Column-stack a D x D operator into a length-D^2 vector."""
    return _square(a).reshape(-1, order="F")


def devectorize(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a stacked square matrix")
    return v.reshape(dim, dim, order="F")


def left_mult(x: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> X rho``."""
    x = _square(x)
    return np.kron(np.eye(x.shape[0], dtype=complex), x)


def right_mult(x: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho X``."""
    x = _square(x)
    return np.kron(x.T, np.eye(x.shape[0], dtype=complex))


def hermiticity_defect(a: np.ndarray) -> float:
    """Entrywise max of ``|A - A^dag|``."""
    a = _square(a)
    return float(np.abs(a - a.conj().T).max())


def liouvillian(h: np.ndarray, tol: float = ALGEBRAIC_TOL) -> np.ndarray:
    """Coherent generator ``rho -> -i [H, rho]`` as a superoperator.

    Rejects non-Hermitian input beyond `tol`.
    """
    h = _square(h, "hamiltonian")
    defect = hermiticity_defect(h)
    if defect > tol:
        raise ValueError(f"hamiltonian is not Hermitian (defect {defect:.2e} > {tol:.0e})")
    return -1j * (left_mult(h) - right_mult(h))


def _is_normal(m: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.abs(m).max()))
    return float(np.abs(m @ m.conj().T - m.conj().T @ m).max()) <= tol * scale**2


def superop_exp(l: np.ndarray, t: float) -> np.ndarray:
    """Matrix exponential ``exp(L t)``.

    Normal generators (every Liouvillian of a Hermitian Hamiltonian is one)
    go through an eigendecomposition; the general case falls back to
    scaling-and-squaring.  Overflow is reported rather than propagated as
    silent infs.
    """
    l = _square(l, "superoperator")
    if not np.isfinite(l).all():
        raise OverflowError("superoperator contains non-finite entries")
    if _is_normal(l):
        # normal => unitarily diagonalizable, the spectral route is exact
        w, u = scipy.linalg.schur(l, output="complex")
        out = u @ (np.exp(np.diag(w) * t)[:, None] * u.conj().T)
    else:
        out = scipy.linalg.expm(l * t)
    if not np.isfinite(out).all():
        raise OverflowError("matrix exponential overflowed")
    return out


def trace_covector(dim: int) -> np.ndarray:
    """``vec(I)`` — the covector implementing the trace functional."""
    return vectorize(np.eye(dim, dtype=complex))


def trace_defect_map(v: np.ndarray) -> float:
    """Max defect of the map-form trace contract ``w^dag V = w^dag``."""
    v = _square(v, "superoperator")
    d = int(round(np.sqrt(v.shape[0])))
    w = trace_covector(d)
    return float(np.abs(w.conj() @ v - w.conj()).max())


def trace_defect_generator(l: np.ndarray) -> float:
    """Max defect of the generator-form trace contract ``w^dag L = 0``."""
    l = _square(l, "superoperator")
    d = int(round(np.sqrt(l.shape[0])))
    w = trace_covector(d)
    return float(np.abs(w.conj() @ l).max())


def _swap_matrix(dim: int) -> np.ndarray:
    s = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            s[i * dim + j, j * dim + i] = 1.0
    return s


def hermiticity_preservation_defect(v: np.ndarray) -> float:
    """How far a superoperator is from commuting with Hermitian conjugation.

    ``vec(rho^dag) = S conj(vec(rho))`` with ``S`` the index-swap permutation,
    so a map sends Hermitian inputs to Hermitian outputs iff
    ``V = S conj(V) S``.
    """
    v = _square(v, "superoperator")
    d = int(round(np.sqrt(v.shape[0])))
    s = _swap_matrix(d)
    return float(np.abs(v - s @ v.conj() @ s).max())


@dataclass(frozen=True)
class DensityDiagnostics:
    """Health record of a (possibly unphysical) density matrix."""

    trace: float
    hermiticity_defect: float
    min_eigenvalue: float
    purity: float


def density_diagnostics(rho: np.ndarray) -> DensityDiagnostics:
    """Trace, Hermiticity defect, smallest eigenvalue and purity of ``rho``.

    The eigenvalue is taken of the Hermitian part ``(rho + rho^dag)/2`` so the
    diagnostic stays meaningful for maps that leak out of the Hermitian cone.
    """
    rho = _square(rho, "density matrix")
    herm = 0.5 * (rho + rho.conj().T)
    return DensityDiagnostics(
        trace=float(np.real(np.trace(rho))),
        hermiticity_defect=hermiticity_defect(rho),
        min_eigenvalue=float(np.linalg.eigvalsh(herm).min()),
        purity=float(np.real(np.trace(rho @ rho))),
    )
