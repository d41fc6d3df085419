"""Chebyshev machinery on k-point extremal grids.

Single-interval expansions (`ChebyshevExpansion`) and piecewise expansions
(`PiecewiseChebyshevExpansion`) are the function representation used by every
solver in the package.  Grids are the extremal (Lobatto) points ordered from
left to right, and an expansion of k coefficients has degree k - 1.

The value/coefficient transforms are dense O(k^2) matrix products; at the
default k = 16 they cost less than the Python call overhead of an FFT.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InvalidArgument, SolverFailure

__all__ = [
    "EVAL_SLACK",
    "ChebyshevExpansion",
    "PiecewiseChebyshevExpansion",
    "extremal_nodes",
    "diff_matrix",
    "integration_matrix",
    "vals_to_coeffs",
    "coeffs_to_vals",
    "clenshaw",
    "eval_expansion",
    "piecewise_eval",
    "antiderivative",
    "derivative_coeffs",
    "tail_ratio",
    "adaptive_fit",
]

#: Relative distance outside an interval at which evaluation is still allowed.
EVAL_SLACK = 1e-12


def _check_interval(interval):
    a0, b0 = float(interval[0]), float(interval[1])
    if not a0 < b0:
        raise InvalidArgument(f"interval must satisfy low < high, got ({a0}, {b0})")
    return a0, b0


def _check_k(k):
    if int(k) != k or k < 2:
        raise InvalidArgument(f"k must be an integer >= 2, got {k!r}")
    return int(k)


# ---------------------------------------------------------------------------
# reference matrices on [-1, 1], cached per k
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _ref_nodes(k):
    j = np.arange(1, k + 1)
    # sin form of cos(pi (k-j)/(k-1)): exactly antisymmetric, exact endpoints
    x = np.sin(np.pi * (2 * j - k - 1) / (2.0 * (k - 1)))
    x[0], x[-1] = -1.0, 1.0
    x.setflags(write=False)
    return x


@lru_cache(maxsize=None)
def _cos_table(k):
    # T_n(x_j) = cos(n * pi * (k-j)/(k-1)); reduce the angle exactly first
    n = np.arange(k)[:, None]
    m = (k - np.arange(1, k + 1))[None, :]
    ang = (n * m) % (2 * (k - 1))
    table = np.cos(np.pi * ang / (k - 1))
    table.setflags(write=False)
    return table  # table[n, j]


@lru_cache(maxsize=None)
def _coeffs_to_vals_matrix(k):
    mat = np.ascontiguousarray(_cos_table(k).T)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _vals_to_coeffs_matrix(k):
    w = np.ones(k)
    w[0] = w[-1] = 0.5
    mat = (2.0 / (k - 1)) * _cos_table(k) * w[None, :]
    mat[0] *= 0.5
    mat[-1] *= 0.5
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _ref_diff_matrix(k):
    x = _ref_nodes(k)
    w = (-1.0) ** np.arange(k)
    w[0] *= 0.5
    w[-1] *= 0.5
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    d = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    d.setflags(write=False)
    return d


@lru_cache(maxsize=None)
def _ref_integration_matrix(k, anchor):
    # values at nodes -> values of the antiderivative vanishing at the anchor
    eye = np.eye(k)
    coeffs = _vals_to_coeffs_matrix(k) @ eye
    big = np.zeros((k + 1, k))
    for col in range(k):
        big[:, col] = _antiderivative_coeffs(coeffs[:, col])
    x = _ref_nodes(k)
    tk = np.cos(np.outer(np.arccos(np.clip(x, -1, 1)), np.arange(k + 1)))
    s = tk @ big
    row = 0 if anchor == "left" else k - 1
    s = s - s[row][None, :]
    s[row] = 0.0
    s.setflags(write=False)
    return s


@lru_cache(maxsize=None)
def _ref_integration_matrix_dropped(k, anchor):
    # as above, but the integrand is interpolated at the k - 1 nodes other
    # than the anchor; the anchor column is identically zero
    x = _ref_nodes(k)
    row = 0 if anchor == "left" else k - 1
    keep = np.delete(np.arange(k), row)
    vander = np.cos(np.outer(np.arccos(np.clip(x[keep], -1, 1)), np.arange(k - 1)))
    coeffs = np.linalg.inv(vander)
    big = _antiderivative_coeffs(coeffs.T).T  # (k, k - 1)
    tk = np.cos(np.outer(np.arccos(np.clip(x, -1, 1)), np.arange(k)))
    s = tk @ big
    s = s - s[row][None, :]
    s[row] = 0.0
    out = np.zeros((k, k))
    out[:, keep] = s
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# grid operations
# ---------------------------------------------------------------------------

def extremal_nodes(k, interval=(-1.0, 1.0)):
    """Return the k-point extremal Chebyshev grid on ``interval``.

    The nodes are ``(b-a)/2 cos(pi (k-j)/(k-1)) + (b+a)/2`` for j = 1..k,
    in increasing order, with the endpoints reproduced exactly.
    """
    k = _check_k(k)
    a0, b0 = _check_interval(interval)
    x = 0.5 * (b0 - a0) * _ref_nodes(k) + 0.5 * (b0 + a0)
    x[0], x[-1] = a0, b0
    return x


def diff_matrix(k, interval=(-1.0, 1.0)):
    """Spectral differentiation matrix on the extremal grid.

    Maps values of a polynomial of degree <= k - 1 at the nodes to the
    values of its derivative at the same nodes.
    """
    k = _check_k(k)
    a0, b0 = _check_interval(interval)
    return _ref_diff_matrix(k) * (2.0 / (b0 - a0))


def integration_matrix(k, interval=(-1.0, 1.0), anchor="left", drop_anchor=False):
    """Spectral integration matrix on the extremal grid.

    Maps node values of h to node values of the antiderivative of the
    interpolant of h which vanishes at the left (``anchor="left"``) or the
    right (``anchor="right"``) endpoint.

    With ``drop_anchor=True`` the interpolant has degree k - 2 and passes
    through the k - 1 nodes other than the anchor, so the value of h at the
    anchor is ignored.  Collocation with this matrix is stiffly accurate: it
    damps rapidly oscillating or decaying modes instead of carrying them over
    from the anchor value.
    """
    k = _check_k(k)
    a0, b0 = _check_interval(interval)
    if anchor not in ("left", "right"):
        raise InvalidArgument(f"anchor must be 'left' or 'right', got {anchor!r}")
    ref = _ref_integration_matrix_dropped(k, anchor) if drop_anchor else _ref_integration_matrix(k, anchor)
    return ref * (0.5 * (b0 - a0))


def vals_to_coeffs(values):
    """Chebyshev coefficients of the interpolant through extremal-node values.

    ``values`` may carry extra leading axes; the transform acts on the last.
    """
    values = np.asarray(values)
    k = values.shape[-1]
    _check_k(k)
    return values @ _vals_to_coeffs_matrix(k).T


def coeffs_to_vals(coeffs):
    """Values at the extremal nodes of the expansion with ``coeffs``."""
    coeffs = np.asarray(coeffs)
    k = coeffs.shape[-1]
    _check_k(k)
    return coeffs @ _coeffs_to_vals_matrix(k).T


def clenshaw(coeffs, x):
    """Evaluate sum_j coeffs[..., j] T_j(x) by Clenshaw's recurrence.

    ``coeffs`` is either one coefficient vector, broadcast against ``x``, or
    an array of shape ``x.shape + (n,)`` holding per-point coefficients.
    """
    coeffs = np.asarray(coeffs)
    x = np.asarray(x, dtype=float)
    n = coeffs.shape[-1]
    if n == 1:
        return coeffs[..., 0] + 0.0 * x
    b1 = 0.0
    b2 = 0.0
    two_x = 2.0 * x
    for j in range(n - 1, 0, -1):
        b1, b2 = coeffs[..., j] + two_x * b1 - b2, b1
    # c_0 enters in one rounding, so shifting it anchors values exactly
    return coeffs[..., 0] + (x * b1 - b2)


def _antiderivative_coeffs(c):
    # integral of T_n = (T_{n+1}/(n+1) - T_{n-1}/(n-1)) / 2 for n >= 2
    c = np.asarray(c)
    n = c.shape[-1]
    out = np.zeros(c.shape[:-1] + (n + 1,), dtype=np.result_type(c, float))
    padded = np.concatenate([c, np.zeros(c.shape[:-1] + (2,), dtype=c.dtype)], axis=-1)
    out[..., 1] = padded[..., 0] - 0.5 * padded[..., 2]
    j = np.arange(2, n + 1)
    out[..., 2:] = (padded[..., j - 1] - padded[..., j + 1]) / (2.0 * j)
    return out


def derivative_coeffs(c):
    """Coefficients on [-1, 1] of the derivative of sum c_j T_j (length n - 1)."""
    c = np.asarray(c)
    n = c.shape[-1]
    if n == 1:
        return np.zeros(c.shape[:-1] + (1,), dtype=c.dtype)
    d = np.zeros(c.shape[:-1] + (n + 1,), dtype=np.result_type(c, float))
    for j in range(n - 1, 0, -1):
        d[..., j - 1] = d[..., j + 1] + 2.0 * j * c[..., j]
    d[..., 0] *= 0.5
    return d[..., : n - 1]


def tail_ratio(coeffs, split_index=None):
    """Relative size of the trailing coefficients.

    Returns ``sqrt(sum_{j >= split} |c_j|^2 / sum_j |c_j|^2)``; the split
    defaults to ``len(coeffs) // 2``.  An all-zero vector gives 0 and a
    vector with nonfinite entries gives nan.
    """
    c = np.asarray(coeffs)
    if split_index is None:
        split_index = c.shape[-1] // 2
    if c.ndim == 1:
        total = np.vdot(c, c).real
        if total == 0:
            return 0.0
        # nonfinite input propagates as nan, which fails any "< eps" test
        return float(np.sqrt(np.vdot(c[split_index:], c[split_index:]).real / total))
    c = np.abs(c)
    total = np.sum(c * c, axis=-1)
    tail = np.sum(c[..., split_index:] ** 2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sqrt(tail / np.where(total == 0, 1.0, total))
    return float(ratio) if np.ndim(ratio) == 0 else ratio


# ---------------------------------------------------------------------------
# expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChebyshevExpansion:
    """A finite Chebyshev series on one interval.

    Parameters
    ----------
    interval : (float, float)
        Endpoints ``(low, high)`` with ``low < high``.
    coeffs : array_like
        Coefficients c_0..c_{k-1} of T_j composed with the affine map of the
        interval onto [-1, 1].  Real or complex.
    """

    interval: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        a0, b0 = _check_interval(self.interval)
        c = np.array(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise InvalidArgument("coeffs must be a nonempty 1-d sequence")
        if not np.issubdtype(c.dtype, np.complexfloating):
            c = c.astype(float)
        c.setflags(write=False)
        object.__setattr__(self, "interval", (a0, b0))
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, values, interval):
        """Interpolate values given at the extremal nodes of ``interval``."""
        return cls(interval, vals_to_coeffs(values))

    @classmethod
    def interpolate(cls, func, interval, k=16):
        """Interpolate the vectorized callable ``func`` on a k-point grid."""
        return cls.from_values(func(extremal_nodes(k, interval)), interval)

    @property
    def k(self):
        return self.coeffs.size

    def _local(self, t):
        a0, b0 = self.interval
        t = np.asarray(t, dtype=float)
        slack = EVAL_SLACK * (b0 - a0)
        if np.any(t < a0 - slack) or np.any(t > b0 + slack):
            raise DomainError(f"point outside [{a0}, {b0}]")
        return (2.0 * t - (a0 + b0)) / (b0 - a0)

    def __call__(self, t):
        return clenshaw(self.coeffs, self._local(t))

    def values(self):
        """Values at the extremal nodes of the expansion's own grid."""
        return coeffs_to_vals(self.coeffs)

    def nodes(self):
        return extremal_nodes(self.k, self.interval)

    def derivative(self):
        a0, b0 = self.interval
        return ChebyshevExpansion(self.interval, derivative_coeffs(self.coeffs) * (2.0 / (b0 - a0)))

    def antiderivative(self, anchor_t=None, anchor_value=0.0):
        return antiderivative(self, anchor_t, anchor_value)


def eval_expansion(expansion, t):
    """Evaluate a `ChebyshevExpansion` at ``t`` (scalar or array)."""
    return expansion(t)


def antiderivative(expansion, anchor_t=None, anchor_value=0.0):
    """Antiderivative F of ``expansion`` with ``F(anchor_t) = anchor_value``.

    The result has one more coefficient than the input; ``anchor_t``
    defaults to the left endpoint.
    """
    a0, b0 = expansion.interval
    if anchor_t is None:
        anchor_t = a0
    coeffs = _antiderivative_coeffs(expansion.coeffs) * (0.5 * (b0 - a0))
    x = (2.0 * anchor_t - (a0 + b0)) / (b0 - a0)
    if anchor_t == a0:
        x = -1.0
    elif anchor_t == b0:
        x = 1.0
    coeffs[0] = 0.0
    coeffs[0] = anchor_value - clenshaw(coeffs, x)
    return ChebyshevExpansion(expansion.interval, coeffs)


class PiecewiseChebyshevExpansion:
    """Chebyshev expansions on the pieces of a partition x_0 < ... < x_m.

    Piece i lives on ``[x_i, x_{i+1}]`` (zero-based).  Evaluation follows the
    half-open convention: an interior breakpoint belongs to the piece on its
    right, and ``x_m`` belongs to the last piece.

    Parameters
    ----------
    breakpoints : array_like, shape (m + 1,)
    coeffs : array_like, shape (m, k)
    """

    def __init__(self, breakpoints, coeffs):
        x = np.array(breakpoints, dtype=float)
        c = np.array(coeffs)
        if c.ndim != 2:
            raise InvalidArgument("coeffs must be a 2-d array (pieces x k)")
        if not np.issubdtype(c.dtype, np.complexfloating):
            c = c.astype(float)
        if x.ndim != 1 or x.size != c.shape[0] + 1 or c.shape[1] < 1:
            raise InvalidArgument("need m + 1 breakpoints for m pieces")
        if np.any(np.diff(x) <= 0):
            raise InvalidArgument("breakpoints must be strictly increasing")
        x.setflags(write=False)
        c.setflags(write=False)
        self.breakpoints = x
        self.coeffs = c

    @classmethod
    def from_pieces(cls, pieces):
        pieces = list(pieces)
        if not pieces:
            raise InvalidArgument("need at least one piece")
        k = max(p.k for p in pieces)
        dtype = np.result_type(*[p.coeffs for p in pieces])
        coeffs = np.zeros((len(pieces), k), dtype=dtype)
        for i, p in enumerate(pieces):
            coeffs[i, : p.k] = p.coeffs
        breaks = [pieces[0].interval[0]]
        for prev, nxt in zip(pieces[:-1], pieces[1:]):
            if prev.interval[1] != nxt.interval[0]:
                raise InvalidArgument("pieces do not tile a single interval")
        breaks += [p.interval[1] for p in pieces]
        return cls(breaks, coeffs)

    @property
    def k(self):
        return self.coeffs.shape[1]

    @property
    def m(self):
        return self.coeffs.shape[0]

    @property
    def interval(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def n_coeffs(self):
        return self.coeffs.size

    @property
    def pieces(self):
        return [
            ChebyshevExpansion((self.breakpoints[i], self.breakpoints[i + 1]), self.coeffs[i])
            for i in range(self.m)
        ]

    def locate(self, t):
        """Index of the piece holding each point (half-open convention)."""
        t = np.asarray(t, dtype=float)
        a, b = self.interval
        slack = EVAL_SLACK * (b - a)
        if np.any(t < a - slack) or np.any(t > b + slack) or np.any(np.isnan(t)):
            raise DomainError(f"point outside [{a}, {b}]")
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.m - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = self.locate(t)
        lo = self.breakpoints[idx]
        hi = self.breakpoints[idx + 1]
        x = (2.0 * t - (lo + hi)) / (hi - lo)
        # breakpoints map to exactly -1 and 1
        x = np.where(t == lo, -1.0, np.where(t == hi, 1.0, x))
        return clenshaw(self.coeffs[idx], x)

    def derivative(self):
        h = np.diff(self.breakpoints)
        d = derivative_coeffs(self.coeffs) * (2.0 / h)[:, None]
        return PiecewiseChebyshevExpansion(self.breakpoints, d)

    def antiderivative(self, anchor_value=0.0):
        """Continuous antiderivative equal to ``anchor_value`` at x_0."""
        pieces = []
        value = anchor_value
        for piece in self.pieces:
            F = antiderivative(piece, piece.interval[0], value)
            pieces.append(F)
            value = F(piece.interval[1])
        return PiecewiseChebyshevExpansion.from_pieces(pieces)

    def continuity_jumps(self):
        """|left limit - right value| at each interior breakpoint."""
        if self.m == 1:
            return np.zeros(0)
        left = clenshaw(self.coeffs[:-1], np.ones(self.m - 1))
        right = clenshaw(self.coeffs[1:], -np.ones(self.m - 1))
        return np.abs(left - right)

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        if np.iscomplexobj(self.coeffs):
            rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.coeffs]
        else:
            rows = [[float(z) for z in row] for row in self.coeffs]
        return {"k": int(self.k), "breakpoints": [float(x) for x in self.breakpoints], "coeffs": rows}

    @classmethod
    def from_dict(cls, data):
        rows = data["coeffs"]
        k = int(data["k"])
        if any(len(r) != k for r in rows):
            raise InvalidArgument("coefficient rows must all have length k")
        flat = [z for r in rows for z in r]
        if flat and isinstance(flat[0], (list, tuple)):
            coeffs = np.array([[complex(z[0], z[1]) for z in r] for r in rows], dtype=complex)
        else:
            coeffs = np.array(rows, dtype=float)
        return cls(data["breakpoints"], coeffs)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        a, b = self.interval
        return f"PiecewiseChebyshevExpansion(m={self.m}, k={self.k}, interval=({a!r}, {b!r}))"


def piecewise_eval(expansion, t):
    """Evaluate a `PiecewiseChebyshevExpansion` at ``t``."""
    return expansion(t)


def adaptive_fit(func, interval, k=16, eps=1e-13, max_intervals=4096):
    """Piecewise interpolant of ``func`` accepted by the tail test.

    Intervals are bisected until every piece has ``tail_ratio < eps``.
    ``func`` must accept arrays.
    """
    a, b = _check_interval(interval)
    min_width = 1e-13 * (b - a)
    stack = [(a, b)]
    accepted = []
    while stack:
        c, d = stack.pop()
        coeffs = vals_to_coeffs(func(extremal_nodes(k, (c, d))))
        if tail_ratio(coeffs) < eps:
            accepted.append(ChebyshevExpansion((c, d), coeffs))
            continue
        if d - c < 2 * min_width or len(accepted) + len(stack) + 2 > max_intervals:
            raise SolverFailure("function could not be resolved", stage="fit", interval=(c, d))
        mid = 0.5 * (c + d)
        stack.append((mid, d))
        stack.append((c, mid))
    return PiecewiseChebyshevExpansion.from_pieces(accepted)
