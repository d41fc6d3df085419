"""Dense solves for small collocation systems.

The factorizations come from LAPACK through numpy/scipy; this module adds the
rank truncation rules used by the Levin and integral-equation solvers.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import InvalidArgument, SingularMatrixError

__all__ = [
    "MACHINE_EPS",
    "svd",
    "tsvd_solve",
    "rrqr_factor",
    "rrqr_rank",
    "rrqr_apply",
    "rrqr_solve",
    "lu_solve",
]

MACHINE_EPS = np.finfo(float).eps


def _square(A, b=None):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidArgument(f"expected a nonempty square matrix, got shape {A.shape}")
    if b is None:
        return A
    b = np.asarray(b)
    if b.shape[0] != A.shape[0]:
        raise InvalidArgument("right-hand side length does not match the matrix")
    return A, b


def svd(A):
    """Singular value decomposition ``A = U diag(s) V^*``.

    Returns ``(U, s, V)`` with ``s`` in nonincreasing order.  Note that the
    third factor is V itself, not its adjoint.
    """
    A = _square(A)
    try:
        U, s, Vh = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"SVD did not converge: {exc}") from exc
    return U, s, Vh.conj().T


def tsvd_solve(A, b, threshold_multiplier=10.0, full_output=False):
    """Solve ``A x = b`` discarding singular directions below a threshold.

    Singular values ``sigma_i <= threshold_multiplier * eps * ||A||_F`` are
    dropped.  If every direction is dropped the zero vector is returned.

    With ``full_output=True`` returns ``(x, rank)``.
    """
    A, b = _square(A, b)
    U, s, V = svd(A)
    cutoff = threshold_multiplier * MACHINE_EPS * np.linalg.norm(A, "fro")
    rank = int(np.count_nonzero(s > cutoff))
    dtype = np.result_type(A, b, float)
    if rank == 0:
        x = np.zeros(A.shape[1:] + b.shape[1:], dtype=dtype)
    else:
        proj = U[:, :rank].conj().T @ b
        proj = proj / (s[:rank] if proj.ndim == 1 else s[:rank, None])
        x = V[:, :rank] @ proj
    return (x, rank) if full_output else x


@lru_cache(maxsize=None)
def _lapack(name, dtype):
    (fn,) = scipy.linalg.get_lapack_funcs((name,), dtype=np.dtype(dtype))
    return fn


def rrqr_factor(A):
    """Column-pivoted QR ``A P = Q R`` in compact LAPACK form.

    Returns ``(qr, tau, perm)``: R is the upper triangle of ``qr``, the
    Householder reflectors defining Q are stored below it with scalings
    ``tau``, and column ``j`` of ``A P`` is column ``perm[j]`` of A.
    ``|R_jj|`` is nonincreasing.
    """
    A = _square(A)
    A = np.asarray(A, dtype=np.result_type(A, float), order="F")
    qr, jpvt, tau, _, info = _lapack("geqp3", A.dtype.char)(A)
    if info != 0:
        raise SingularMatrixError(f"pivoted QR failed (info={info})")
    return qr, tau, jpvt - 1


def rrqr_rank(qr, cutoff):
    """Number of leading ``|R_jj|`` above ``cutoff``."""
    small = np.abs(np.diagonal(qr)) <= cutoff
    return int(np.argmax(small)) if small.any() else qr.shape[0]


def rrqr_apply(factor, b, rank):
    """Basic solution of ``A x = b`` from `rrqr_factor` output truncated to ``rank``."""
    qr, tau, perm = factor
    b = np.asarray(b)
    dtype = np.result_type(qr, b)
    x = np.zeros(qr.shape[1:] + b.shape[1:], dtype=dtype)
    if rank == 0:
        return x
    cplx = np.iscomplexobj(qr)
    rhs = b.reshape(b.shape[0], -1)
    if not cplx and np.iscomplexobj(rhs):
        # Q is real: apply it to the real and imaginary parts separately
        qhb = _qh(qr, tau, rhs.real) + 1j * _qh(qr, tau, rhs.imag)
    else:
        qhb = _qh(qr, tau, rhs)
    trtrs = _lapack("trtrs", np.result_type(qr, qhb).char)
    y, info = trtrs(qr[:rank, :rank], qhb[:rank])
    if info != 0:
        raise SingularMatrixError(f"triangular solve failed (info={info})")
    x[perm[:rank]] = y.reshape((rank,) + b.shape[1:])
    return x


def _qh(qr, tau, c):
    c = np.asarray(c, dtype=qr.dtype, order="F")
    cplx = np.iscomplexobj(qr)
    mqr = _lapack("unmqr" if cplx else "ormqr", qr.dtype.char)
    cq, _, info = mqr("L", "C" if cplx else "T", qr, tau, c, max(1, 64 * c.shape[1]))
    if info != 0:
        raise SingularMatrixError(f"applying Q failed (info={info})")
    return cq


def rrqr_solve(A, b, threshold_multiplier=10.0, full_output=False):
    """Solve ``A x = b`` with a column-pivoted (rank-revealing) QR.

    The numerical rank is the number of diagonal entries of R exceeding
    ``threshold_multiplier * eps * ||A||_F``; the trailing columns of the
    permuted system are set to zero (basic solution).

    With ``full_output=True`` returns ``(x, rank)``.
    """
    A, b = _square(A, b)
    factor = rrqr_factor(A)
    cutoff = threshold_multiplier * MACHINE_EPS * np.linalg.norm(A, "fro")
    rank = rrqr_rank(factor[0], cutoff)
    x = rrqr_apply(factor, b, rank)
    return (x, rank) if full_output else x


def lu_solve(A, b):
    """Solve a nonsingular system by partial-pivoting LU.

    Rows are equilibrated before factoring.  Raises `SingularMatrixError` if
    a pivot of the equilibrated matrix is zero relative to its Frobenius
    norm.
    """
    A, b = _square(A, b)
    row_scale = np.abs(A).max(axis=1)
    if not (row_scale.min() > 0 and np.isfinite(row_scale).all()):
        raise SingularMatrixError("matrix has a zero or nonfinite row")
    As = A / row_scale[:, None]
    bs = b / (row_scale if b.ndim == 1 else row_scale[:, None])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(As, check_finite=False)
    # rows have unit max norm, so ||As||_F lies in [1, sqrt(n)]
    scale = np.sqrt(np.einsum("ij,ij->", As, As))
    pivots = np.abs(np.diagonal(lu))
    if not pivots.min() > 10 * MACHINE_EPS * scale:
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), bs, check_finite=False)
