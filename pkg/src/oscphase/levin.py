"""Adaptive Levin method for running integrals of ``exp(i g(s)) f(s)``.

On each interval the ODE ``p' + i g' p = f`` is collocated at the extremal
Chebyshev nodes; any solution gives

    int_{c}^{d} exp(i g) f ds = p(d) exp(i g(d)) - p(c) exp(i g(c)).

The collocation matrix is singular when g' vanishes identically, and
nearly singular when it is small; a rank-truncating solve (pivoted QR or
truncated SVD) picks a particular solution, which is all the boundary
formula needs.  Intervals are bisected until the Chebyshev coefficients of p
pass the tail test, and the boundary terms are accumulated into prefix sums
so that the running integral costs O(log m) per point.

Where the collocation matrix is numerically singular, the truncated solve
is free to add any multiple of its near-null vectors, which approximate
``exp(-i g)`` and so leave the boundary formula unchanged.  The minimum-norm
(or basic) choice often contains an O(1) multiple of such a vector that the
grid does not resolve, and the interval is then bisected needlessly.  By
default the solution is corrected along those directions to minimize its
trailing Chebyshev coefficients, provided the collocation residual stays at
the truncation level.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg

from .chebyshev import (
    ChebyshevExpansion,
    clenshaw,
    diff_matrix,
    extremal_nodes,
    tail_ratio,
    vals_to_coeffs,
)
from .errors import DomainError, InvalidArgument, SingularMatrixError, SolverFailure
from .linalg import MACHINE_EPS, _lapack, rrqr_rank, rrqr_solve, tsvd_solve

__all__ = [
    "OscillatoryIntegrand",
    "LevinTable",
    "levin_local",
    "adaptive_levin",
    "integral_to",
]

SOLVERS = {"rrqr": rrqr_solve, "tsvd": tsvd_solve}

# singular values (or |R_ii|) below NULL_SEARCH_TOL * ||A||_F mark directions
# along which the smoothest solution is sought
NULL_SEARCH_TOL = 1e-6


@dataclass(frozen=True)
class OscillatoryIntegrand:
    """The integrand ``exp(i g(t)) f_tilde(t)``.

    All three callables are vectorized over ``t``; ``gp`` is the real
    derivative of the real phase ``g``.
    """

    g: Callable
    gp: Callable
    f_tilde: Callable


def _check_solver(name):
    if name not in SOLVERS:
        raise InvalidArgument(f"solver must be one of {sorted(SOLVERS)}, got {name!r}")
    return name


@lru_cache(maxsize=None)
def _tail_rows(k):
    # rows of the values -> coefficients map that produce the tail
    return np.ascontiguousarray(vals_to_coeffs(np.eye(k)).T[k // 2 :])


def _tsvd_batch(A, rhs):
    # truncated SVD solves of a stack; returns solutions and null-basis builders
    norms = np.linalg.norm(A, axis=(1, 2))
    try:
        U, s, Vh = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"SVD did not converge: {exc}") from exc
    keep = s > (10.0 * MACHINE_EPS * norms)[:, None]
    proj = np.einsum("mji,mj->mi", U.conj(), rhs)
    proj = np.where(keep, proj / np.where(keep, s, 1.0), 0.0)
    X = np.einsum("mij,mi->mj", Vh.conj(), proj)

    def null(i):
        return Vh[i].conj().T[:, s[i] <= NULL_SEARCH_TOL * norms[i]]

    return X, null, s[:, -1] <= NULL_SEARCH_TOL * norms


def _rrqr_batch(A, rhs):
    # pivoted QR has no batched LAPACK driver; factor one matrix at a time,
    # calling LAPACK directly since the wrappers' checks dominate at k = 16
    m, n, _ = A.shape
    norms = np.linalg.norm(A, axis=(1, 2))
    cutoffs = 10.0 * MACHINE_EPS * norms
    geqp3, unmqr, trtrs = (_lapack(name, "D") for name in ("geqp3", "unmqr", "trtrs"))
    X = np.zeros((m, n), dtype=complex)
    factors = []
    smallest = np.empty(m)
    for i in range(m):
        qr, jpvt, tau, _, info = geqp3(np.asfortranarray(A[i]))
        if info != 0:
            raise SingularMatrixError(f"pivoted QR failed (info={info})")
        perm = jpvt - 1
        factors.append((qr, tau, perm))
        smallest[i] = abs(qr[-1, -1])
        rank = rrqr_rank(qr, cutoffs[i])
        if rank == 0:
            continue
        qhb, _, info = unmqr("L", "C", qr, tau, rhs[i][:, None], 64)
        if info == 0:
            y, info = trtrs(qr[:rank, :rank], qhb[:rank])
        if info != 0:
            raise SingularMatrixError(f"triangular solve failed (info={info})")
        X[i, perm[:rank]] = y[:, 0]

    def null(i):
        qr, _, perm = factors[i]
        r = rrqr_rank(qr, NULL_SEARCH_TOL * norms[i])
        basis = np.zeros((n, n - r), dtype=qr.dtype)
        basis[perm[r:]] = np.eye(n - r)
        if 0 < r < n:
            basis[perm[:r]] = -scipy.linalg.solve_triangular(qr[:r, :r], qr[:r, r:], check_finite=False)
        return basis

    return X, null, smallest <= NULL_SEARCH_TOL * norms


_BATCH_SOLVERS = {"rrqr": _rrqr_batch, "tsvd": _tsvd_batch}


def _smoothest(A, x, null):
    if null.shape[1] == 0:
        return x
    tail = _tail_rows(A.shape[0])
    c = np.linalg.lstsq(tail @ null, -(tail @ x), rcond=None)[0]
    step = null @ c
    x_new = x + step
    size = np.linalg.norm(x_new)
    cutoff = 10.0 * MACHINE_EPS * np.linalg.norm(A, "fro")
    # keep the correction only if it is a solution at the truncation level
    # and does not merely inflate the norm
    if np.linalg.norm(A @ step) <= cutoff * size and size <= 4.0 * np.linalg.norm(x):
        return x_new
    return x


def _batch_coeffs(integrand, lo, hi, k, solver, null_correction, eps=0.0):
    """Chebyshev coefficients of p on each interval ``[lo[i], hi[i]]``.

    The integrand is evaluated once on all nodes.  The near-null correction
    is only attempted where the plain solution fails the tail test.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = lo.size
    x_ref = extremal_nodes(k)
    t = (0.5 * (hi - lo))[:, None] * x_ref + (0.5 * (hi + lo))[:, None]
    t[:, 0], t[:, -1] = lo, hi
    gp = np.asarray(integrand.gp(t.ravel()), dtype=float).reshape(m, k)
    rhs = np.asarray(integrand.f_tilde(t.ravel()), dtype=complex).reshape(m, k)
    A = diff_matrix(k)[None, :, :] * (2.0 / (hi - lo))[:, None, None] + 0j
    diag = np.arange(k)
    A[:, diag, diag] += 1j * gp
    X, null, has_null = _BATCH_SOLVERS[solver](A, rhs)
    coeffs = vals_to_coeffs(X)
    if null_correction:
        tails = np.atleast_1d(tail_ratio(coeffs))
        for i in np.flatnonzero(~(tails < eps) & has_null & np.any(X != 0, axis=1)):
            coeffs[i] = vals_to_coeffs(_smoothest(A[i], X[i], null(i)))
    return coeffs


def levin_local(integrand, interval, k=16, solver="rrqr", null_correction=True):
    """Collocation solution of ``p' + i g' p = f_tilde`` on one interval.

    Parameters
    ----------
    integrand : OscillatoryIntegrand
    interval : (float, float)
    k : int
        Number of extremal Chebyshev nodes.
    solver : {"rrqr", "tsvd"}
        Rank-truncating solve applied to the collocation matrix.
    null_correction : bool
        Correct the truncated solution along near-null directions so that
        its Chebyshev tail is minimal (see the module docstring).

    Returns
    -------
    ChebyshevExpansion
        Complex expansion of p.
    """
    if int(k) != k or k < 2:
        raise InvalidArgument(f"k must be an integer >= 2, got {k!r}")
    a0, b0 = float(interval[0]), float(interval[1])
    if not a0 < b0:
        raise InvalidArgument(f"interval must satisfy a < b, got ({a0}, {b0})")
    coeffs = _batch_coeffs(integrand, [a0], [b0], int(k), _check_solver(solver), null_correction)
    return ChebyshevExpansion((a0, b0), coeffs[0])


class LevinTable:
    """Piecewise Levin solution with cached boundary terms.

    Attributes
    ----------
    partition : ndarray, shape (m + 1,)
    coeffs : complex ndarray, shape (m, k)
        Chebyshev coefficients of p_j on ``[partition[j], partition[j+1]]``.
    start_terms : complex ndarray, shape (m,)
        ``p_j(a_j) exp(i g(a_j))`` at the left end of each piece.
    boundary_terms : complex ndarray, shape (m,)
        Integral over each piece.
    prefix_sums : complex ndarray, shape (m + 1,)
        ``prefix_sums[j]`` is the integral from ``a`` to ``partition[j]``.
    g : callable
        Phase used to evaluate ``exp(i g(t))`` at query points.
    """

    def __init__(self, partition, coeffs, start_terms, boundary_terms, g):
        self.partition = np.asarray(partition, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.start_terms = np.asarray(start_terms, dtype=complex)
        self.boundary_terms = np.asarray(boundary_terms, dtype=complex)
        self.prefix_sums = np.concatenate([[0.0], np.cumsum(self.boundary_terms)])
        self.g = g
        m = self.coeffs.shape[0]
        if self.partition.shape != (m + 1,) or self.start_terms.shape != (m,):
            raise InvalidArgument("partition, coefficients and terms have inconsistent sizes")

    @property
    def m(self):
        return self.coeffs.shape[0]

    @property
    def k(self):
        return self.coeffs.shape[1]

    @property
    def interval(self):
        return float(self.partition[0]), float(self.partition[-1])

    @property
    def n_coeffs(self):
        return self.coeffs.size

    @property
    def total(self):
        """Integral over the whole interval."""
        return complex(self.prefix_sums[-1])

    def piece(self, j):
        return ChebyshevExpansion((self.partition[j], self.partition[j + 1]), self.coeffs[j])

    def integral_to(self, t, g_values=None):
        """Running integral from ``a`` to ``t``.

        ``g_values`` may supply ``g(t)`` when the caller already has it.
        """
        return integral_to(self, t, g_values)

    def to_dict(self):
        return {
            "k": self.k,
            "partition": self.partition.tolist(),
            "coeffs": np.stack([self.coeffs.real, self.coeffs.imag], axis=-1).tolist(),
            "start_terms": [[z.real, z.imag] for z in self.start_terms],
            "boundary_terms": [[z.real, z.imag] for z in self.boundary_terms],
        }

    @classmethod
    def from_dict(cls, data, g):
        coeffs = np.asarray(data["coeffs"], dtype=float)
        start = np.asarray(data["start_terms"], dtype=float).reshape(-1, 2)
        bterms = np.asarray(data["boundary_terms"], dtype=float).reshape(-1, 2)
        return cls(
            data["partition"],
            coeffs[..., 0] + 1j * coeffs[..., 1],
            start[:, 0] + 1j * start[:, 1],
            bterms[:, 0] + 1j * bterms[:, 1],
            g,
        )

    def __repr__(self):
        return f"LevinTable(interval={self.interval}, pieces={self.m})"


def adaptive_levin(
    integrand, interval, eps=1e-13, k=16, solver="rrqr", max_intervals=4096, null_correction=True
):
    """Build a `LevinTable` for ``int_a^t exp(i g) f_tilde``.

    Parameters
    ----------
    integrand : OscillatoryIntegrand
    interval : (float, float)
    eps : float
        Tail-ratio acceptance threshold for the coefficients of p.
    k : int
    solver : {"rrqr", "tsvd"}
    max_intervals : int
        Bound on accepted plus pending intervals.
    null_correction : bool
        See `levin_local`.

    Raises
    ------
    SolverFailure
        With ``stage="levin"`` when the budget or the minimum width is hit.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgument(f"interval must satisfy a < b, got ({a}, {b})")
    if not 0 < eps < 1:
        raise InvalidArgument("eps must lie in (0, 1)")
    if int(k) != k or k < 2:
        raise InvalidArgument(f"k must be an integer >= 2, got {k!r}")
    k = int(k)
    _check_solver(solver)
    min_width = 1e-13 * (b - a)
    # one generation of the bisection tree per pass, so the integrand is
    # evaluated once per generation
    pending = [(a, b)]
    accepted = []
    while pending:
        lo = np.array([c for c, _ in pending])
        hi = np.array([d for _, d in pending])
        coeffs = _batch_coeffs(integrand, lo, hi, k, solver, null_correction, eps)
        good = np.all(np.isfinite(coeffs), axis=1) & (np.atleast_1d(tail_ratio(coeffs)) < eps)
        children = []
        for i, (c, d) in enumerate(pending):
            if good[i]:
                accepted.append((c, d, coeffs[i]))
                continue
            if d - c < 2 * min_width:
                raise SolverFailure("minimum interval width reached", stage="levin", interval=(c, d))
            if len(accepted) + len(children) + (len(pending) - i - 1) + 2 > max_intervals:
                raise SolverFailure("subdivision budget exhausted", stage="levin", interval=(c, d))
            mid = 0.5 * (c + d)
            children += [(c, mid), (mid, d)]
        pending = children
    accepted.sort(key=lambda item: item[0])
    partition = np.array([accepted[0][0]] + [item[1] for item in accepted])
    coeffs = np.array([item[2] for item in accepted])
    phase = np.exp(1j * np.asarray(integrand.g(partition), dtype=float))
    # endpoint values through Clenshaw, the same path integral_to uses
    left = clenshaw(coeffs, -np.ones(len(accepted))) * phase[:-1]
    right = clenshaw(coeffs, np.ones(len(accepted))) * phase[1:]
    return LevinTable(partition, coeffs, left, right - left, integrand.g)


def integral_to(table, t, g_values=None):
    """Evaluate ``int_a^t exp(i g) f_tilde`` from a `LevinTable`.

    ``t`` may be a scalar or an array; the result has the same shape.
    Raises `DomainError` outside ``[a, b]``.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    a, b = table.interval
    slack = 1e-12 * (b - a)
    if np.any(t_arr < a - slack) or np.any(t_arr > b + slack) or not np.all(np.isfinite(t_arr)):
        raise DomainError(f"points outside [{a}, {b}]")
    t_arr = np.clip(t_arr, a, b)
    # least j with t <= a_j, as a 0-based piece index
    j = np.clip(np.searchsorted(table.partition, t_arr, side="left"), 1, table.m) - 1
    lo = table.partition[j]
    hi = table.partition[j + 1]
    x = np.clip((2.0 * t_arr - lo - hi) / (hi - lo), -1.0, 1.0)
    x = np.where(t_arr == lo, -1.0, np.where(t_arr == hi, 1.0, x))
    p = clenshaw(table.coeffs[j], x)
    if g_values is None:
        g_values = table.g(t_arr)
    g_values = np.atleast_1d(np.asarray(g_values, dtype=float))
    out = p * np.exp(1j * g_values) - table.start_terms[j] + table.prefix_sums[j]
    return complex(out[0]) if scalar else out.reshape(np.shape(t))
