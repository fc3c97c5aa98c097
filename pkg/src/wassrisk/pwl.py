"""Convex piecewise-linear functions and their quadratic-cost sup-transform.

A convex piecewise-linear function is stored as a finite max of affine
pieces, f(x) = max_i {<m_i, x> + c_i}.  The central operation here is

    f_lam(x) = sup_y { f(y) - (lam/2) * ||x - y||^2 },

which for a max-of-affine f is again max-of-affine with the same slopes
and every intercept raised by ||m_i||^2 / (2 lam).  Two independent
routes to the same quantity (dense grid maximization, and a detour
through the Legendre conjugate of a quadratic) are provided for
cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog

from .errors import DimensionMismatch, ValidationError

__all__ = [
    "AffinePiece",
    "PwlConvex",
    "QuadraticAffine",
    "make_call",
    "make_put",
    "make_straddle",
    "scale",
    "prune",
    "lambda_c_transform",
    "brute_force_lc",
    "legendre_quadratic_affine",
    "lc_via_legendre",
]


@dataclass(frozen=True)
class AffinePiece:
    """One affine function x -> <slope, x> + intercept on R^d."""

    slope: NDArray[np.float64]
    intercept: float

    def __post_init__(self) -> None:
        slope = np.atleast_1d(np.asarray(self.slope, dtype=np.float64)).copy()
        if slope.ndim != 1 or slope.size < 1:
            raise ValidationError("slope must be a vector of length >= 1")
        if not np.all(np.isfinite(slope)) or not np.isfinite(self.intercept):
            raise ValidationError("piece coefficients must be finite")
        slope.setflags(write=False)
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def dim(self) -> int:
        return self.slope.size

    def __call__(self, x: NDArray[np.float64]) -> float:
        return float(np.dot(self.slope, x) + self.intercept)


class PwlConvex:
    """Convex piecewise-linear function, a finite max of affine pieces.

    Immutable after construction.  ``slope_matrix`` stacks the piece
    slopes as rows (shape ``(n, d)``) and ``intercepts`` holds the
    matching constants, so batch evaluation is a single matmul.
    """

    __slots__ = ("pieces", "slope_matrix", "intercepts")

    def __init__(self, pieces: Sequence[AffinePiece]):
        pieces = tuple(pieces)
        if not pieces:
            raise ValidationError("a piecewise-linear max needs at least one piece")
        d = pieces[0].dim
        if any(p.dim != d for p in pieces):
            raise DimensionMismatch("pieces have mixed dimensions")
        self.pieces = pieces
        M = np.vstack([p.slope for p in pieces])
        c = np.array([p.intercept for p in pieces])
        M.setflags(write=False)
        c.setflags(write=False)
        self.slope_matrix = M
        self.intercepts = c

    @property
    def dim(self) -> int:
        return self.slope_matrix.shape[1]

    @property
    def npieces(self) -> int:
        return len(self.pieces)

    @property
    def lipschitz(self) -> float:
        """Largest piece-slope norm; a Lipschitz constant for the max."""
        return float(np.sqrt((self.slope_matrix**2).sum(axis=1)).max())

    def __repr__(self) -> str:
        return f"PwlConvex(dim={self.dim}, npieces={self.npieces})"

    def _point(self, x) -> NDArray[np.float64]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DimensionMismatch(
                f"expected a point in R^{self.dim}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("evaluation point must be finite")
        return x

    def evaluate(self, x) -> float:
        """Value of the max at a single point ``x``."""
        x = self._point(x)
        return float((self.slope_matrix @ x + self.intercepts).max())

    def evaluate_indexed(self, x) -> tuple[float, int]:
        """Value and the index of an attaining piece (lowest on ties)."""
        x = self._point(x)
        vals = self.slope_matrix @ x + self.intercepts
        i = int(np.argmax(vals))
        return float(vals[i]), i

    def __call__(self, x):
        """Vectorized evaluation.

        Accepts a scalar (d=1 only), a single point of shape ``(d,)``,
        or a batch of shape ``(N, d)``.  For d=1 a 1-D array is read as
        a batch of points.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return self.evaluate(x.reshape(1))
        if x.ndim == 1:
            if self.dim == 1:
                vals = x[:, None] * self.slope_matrix[:, 0] + self.intercepts
                return vals.max(axis=1)
            return self.evaluate(x)
        if x.ndim == 2:
            if x.shape[1] != self.dim:
                raise DimensionMismatch(
                    f"batch has points in R^{x.shape[1]}, function lives on R^{self.dim}"
                )
            return (x @ self.slope_matrix.T + self.intercepts).max(axis=1)
        raise ValidationError("x must be a scalar, a point, or a batch of points")

    def __add__(self, other):
        if isinstance(other, PwlConvex):
            if other.dim != self.dim:
                raise DimensionMismatch("cannot add functions on different spaces")
            pieces = [
                AffinePiece(p.slope + q.slope, p.intercept + q.intercept)
                for p in self.pieces
                for q in other.pieces
            ]
            return PwlConvex(pieces)
        if isinstance(other, (int, float)):
            return PwlConvex(
                [AffinePiece(p.slope, p.intercept + float(other)) for p in self.pieces]
            )
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-float(other))
        return NotImplemented

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "pieces": [
                {"m": p.slope.tolist(), "c": p.intercept} for p in self.pieces
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PwlConvex":
        try:
            dim = int(data["dim"])
            raw = data["pieces"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed payoff spec: {exc}") from exc
        if not isinstance(raw, list) or not raw:
            raise ValidationError("payoff spec needs a nonempty 'pieces' list")
        pieces = []
        for entry in raw:
            try:
                m = np.asarray(entry["m"], dtype=float)
                c = float(entry["c"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"malformed piece: {exc}") from exc
            if m.shape != (dim,):
                raise ValidationError(
                    f"piece slope has shape {m.shape}, expected ({dim},)"
                )
            pieces.append(AffinePiece(m, c))
        return cls(pieces)


@dataclass(frozen=True)
class QuadraticAffine:
    """The function x -> ||x||^2 / 2 + <a, x> + b."""

    a: NDArray[np.float64]
    b: float

    def __post_init__(self) -> None:
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64)).copy()
        if not np.all(np.isfinite(a)) or not np.isfinite(self.b):
            raise ValidationError("coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(0.5 * np.dot(x, x) + np.dot(self.a, x) + self.b)


def make_call(strike: float) -> PwlConvex:
    """Long call payoff max(x - strike, 0) on the line."""
    return PwlConvex([AffinePiece([1.0], -float(strike)), AffinePiece([0.0], 0.0)])


def make_put(strike: float) -> PwlConvex:
    """Long put payoff max(strike - x, 0) on the line."""
    return PwlConvex([AffinePiece([-1.0], float(strike)), AffinePiece([0.0], 0.0)])


def make_straddle(strike: float) -> PwlConvex:
    """Straddle payoff max(x - K, K - x, 0) on the line."""
    k = float(strike)
    return PwlConvex(
        [AffinePiece([1.0], -k), AffinePiece([-1.0], k), AffinePiece([0.0], 0.0)]
    )


def scale(f: PwlConvex, a: float) -> PwlConvex:
    """Positive scaling a*f; a >= 0 keeps the max-of-affine form valid."""
    a = float(a)
    if a < 0:
        raise ValidationError("scaling factor must be nonnegative")
    return PwlConvex(
        [AffinePiece(a * p.slope, a * p.intercept) for p in f.pieces]
    )


def _drop_parallel_duplicates(pieces: Sequence[AffinePiece]) -> list[AffinePiece]:
    best: dict[bytes, AffinePiece] = {}
    order: list[bytes] = []
    for p in pieces:
        key = p.slope.tobytes()
        if key not in best:
            best[key] = p
            order.append(key)
        elif p.intercept > best[key].intercept:
            best[key] = p
    return [best[k] for k in order]


def _lp_needed(i: int, M: NDArray, c: NDArray, alive: list[int]) -> bool:
    """Whether piece i reaches the envelope of the other live pieces.

    Solves min t subject to <m_j - m_i, x> + (c_j - c_i) <= t over
    (x, t); the optimum is the smallest gap between the rival envelope
    and piece i.  The piece attains the max somewhere iff the optimum is
    <= 0; a piece that merely ties (straddle's zero piece at the kink)
    still counts as attaining and is kept.
    """
    others = [j for j in alive if j != i]
    if not others:
        return True
    d = M.shape[1]
    A = np.hstack([M[others] - M[i], -np.ones((len(others), 1))])
    b = c[i] - c[others]
    cost = np.zeros(d + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A, b_ub=b, bounds=[(None, None)] * (d + 1), method="highs")
    if res.status == 3:  # unbounded below: the piece wins along some ray
        return True
    if res.status != 0:
        return True  # keep on any solver hiccup; keeping never changes values
    return res.fun <= 1e-12


def prune(
    f: PwlConvex,
    probe_box: tuple[float, float] = (-10.0, 10.0),
    seed: int = 0,
) -> PwlConvex:
    """Drop pieces that never attain the max; pointwise values are kept.

    Exact intercept comparison removes duplicated slopes first.  Random
    probe points inside ``probe_box`` then certify clearly needed pieces
    cheaply, and the remaining candidates get the exact LP test from
    ``_lp_needed``.
    """
    pieces = _drop_parallel_duplicates(f.pieces)
    if len(pieces) == 1:
        return PwlConvex(pieces)
    M = np.vstack([p.slope for p in pieces])
    c = np.array([p.intercept for p in pieces])
    n, d = M.shape

    rng = np.random.default_rng(seed)
    nprobe = (2**d) * n * n
    lo, hi = probe_box
    probes = rng.uniform(lo, hi, size=(nprobe, d))
    vals = probes @ M.T + c
    top = np.argsort(vals, axis=1)[:, -2:]
    margin = vals[np.arange(nprobe), top[:, 1]] - vals[np.arange(nprobe), top[:, 0]]
    certified = set(top[margin > 1e-10, 1].tolist())

    alive = list(range(n))
    for i in range(n):
        if i in certified:
            continue
        if _lp_needed(i, M, c, alive):
            continue
        alive.remove(i)
    return PwlConvex([pieces[i] for i in alive])


def lambda_c_transform(f: PwlConvex, lam: float) -> PwlConvex:
    """Sup-transform under quadratic cost: same slopes, raised intercepts.

    Returns x -> sup_y { f(y) - (lam/2)||x - y||^2 }, which equals
    max_i { <m_i, x> + c_i + ||m_i||^2 / (2 lam) }.  The supremum is
    infinite at lam = 0 for any nonconstant f, so lam must be positive.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValidationError("the transform requires lam > 0")
    bump = (f.slope_matrix**2).sum(axis=1) / (2.0 * lam)
    return PwlConvex(
        [
            AffinePiece(p.slope, p.intercept + bump[i])
            for i, p in enumerate(f.pieces)
        ]
    )


def _default_box(f: PwlConvex, lam: float, x: NDArray) -> list[tuple[float, float]]:
    # The sup's first-order condition puts the maximizer within
    # max_i ||m_i|| / lam of x; pad by one unit for safety.
    radius = f.lipschitz / lam + 1.0
    return [(float(xi - radius), float(xi + radius)) for xi in x]


def _normalize_box(box, dim: int) -> list[tuple[float, float]]:
    """Accept one (lo, hi) pair for every dimension or a pair per dimension."""
    seq = list(box)
    if len(seq) == 2 and np.isscalar(seq[0]):
        return [(float(seq[0]), float(seq[1]))] * dim
    if len(seq) != dim:
        raise ValidationError("search box must list one interval per dimension")
    return [(float(lo), float(hi)) for lo, hi in seq]


def _tensor_points(box: Sequence[tuple[float, float]], grid_n: int) -> NDArray:
    axes = []
    for lo, hi in box:
        if not lo < hi:
            raise ValidationError(f"degenerate search box [{lo}, {hi}]")
        axes.append(np.linspace(lo, hi, grid_n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def brute_force_lc(
    f: PwlConvex,
    lam: float,
    x,
    search_box: Sequence[tuple[float, float]] | None = None,
    grid_n: int = 101,
) -> float:
    """Grid maximization of y -> f(y) - (lam/2)||x - y||^2.

    Test oracle for ``lambda_c_transform``; the grid value lies below
    the true supremum by at most lam*h^2/2 + Lip(f)*h for spacing h.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValidationError("the transform requires lam > 0")
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != f.dim:
        raise DimensionMismatch("x must match the payoff dimension")
    box = _normalize_box(search_box, f.dim) if search_box is not None else _default_box(f, lam, x)
    Y = _tensor_points(box, grid_n)
    vals = f(Y) - 0.5 * lam * ((Y - x) ** 2).sum(axis=1)
    return float(vals.max())


def legendre_quadratic_affine(q: QuadraticAffine) -> QuadraticAffine:
    """Convex conjugate of ||.||^2/2 + <a,.> + b, again quadratic-affine.

    sup_y { <x, y> - q(y) } is attained at y = x - a with value
    ||x - a||^2 / 2 - b.
    """
    return QuadraticAffine(-q.a, 0.5 * float(np.dot(q.a, q.a)) - q.b)


def lc_via_legendre(
    f: PwlConvex,
    lam: float,
    x,
    search_box: Sequence[tuple[float, float]] | None = None,
    grid_n: int = 101,
) -> float:
    """Second oracle: route the sup-transform through a Legendre conjugate.

    With psi(y) = ||y||^2/2 - f(y)/lam one has
    f_lam(x) = lam * psi*(x) - (lam/2)||x||^2, where psi* is the convex
    conjugate, evaluated here by grid supremum.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValidationError("the transform requires lam > 0")
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != f.dim:
        raise DimensionMismatch("x must match the payoff dimension")
    box = _normalize_box(search_box, f.dim) if search_box is not None else _default_box(f, lam, x)
    Y = _tensor_points(box, grid_n)
    psi = 0.5 * (Y**2).sum(axis=1) - f(Y) / lam
    psi_star = float((Y @ x - psi).max())
    return lam * psi_star - 0.5 * lam * float(np.dot(x, x))
