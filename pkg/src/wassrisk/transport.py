"""Discrete optimal transport under quadratic cost.

``dc_discrete`` solves the classical transportation linear program
exactly (Vogel start, then u-v pivoting on the basis tree) and verifies
the result by complementary slackness.  ``primal_robust_ev_oracle``
maximizes an expectation over all reweightings of mass onto a candidate
support subject to a transport budget; it exists to cross-check the
dual solver on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ComputeError, DimensionMismatch, ValidationError
from .measures import DiscreteMeasure
from .pwl import PwlConvex

__all__ = ["Coupling", "quadratic_cost", "cost_matrix", "dc_discrete",
           "primal_robust_ev_oracle"]


def quadratic_cost(x, y) -> float:
    """Half squared euclidean distance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimensionMismatch("points live in different dimensions")
    d = x - y
    return 0.5 * float(np.dot(d, d))


def cost_matrix(X: NDArray, Y: NDArray) -> NDArray:
    """Pairwise half squared distances, shape (len(X), len(Y))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch("point sets live in different dimensions")
    sq = (X**2).sum(axis=1)[:, None] + (Y**2).sum(axis=1)[None, :] - 2.0 * (X @ Y.T)
    return 0.5 * np.maximum(sq, 0.0)


@dataclass(frozen=True)
class Coupling:
    """Transport plan with marginals fixed to two discrete measures."""

    row_measure: DiscreteMeasure
    col_measure: DiscreteMeasure
    plan: NDArray[np.float64]

    def __post_init__(self) -> None:
        plan = np.asarray(self.plan, dtype=np.float64).copy()
        n, m = self.row_measure.size, self.col_measure.size
        if plan.shape != (n, m):
            raise ValidationError(f"plan must have shape ({n}, {m})")
        if plan.min() < -1e-12:
            raise ValidationError("plan entries must be nonnegative")
        np.clip(plan, 0.0, None, out=plan)
        if np.abs(plan.sum(axis=1) - self.row_measure.weights).max() > 1e-10:
            raise ValidationError("row marginals do not match")
        if np.abs(plan.sum(axis=0) - self.col_measure.weights).max() > 1e-10:
            raise ValidationError("column marginals do not match")
        plan.setflags(write=False)
        object.__setattr__(self, "plan", plan)

    def cost(self) -> float:
        C = cost_matrix(self.row_measure.atoms, self.col_measure.atoms)
        return float((self.plan * C).sum())


def _vogel_plan(C: NDArray, a: NDArray, b: NDArray):
    """Initial basic feasible plan by Vogel's penalty heuristic.

    Returns the plan and the allocation cells (an acyclic set: following
    any would-be cycle from its latest cell forces strictly earlier
    cells forever, which is impossible).
    """
    n, m = C.shape
    supply = a.copy()
    demand = b.copy()
    rows = np.ones(n, dtype=bool)
    cols = np.ones(m, dtype=bool)
    plan = np.zeros((n, m))
    cells: list[tuple[int, int]] = []
    work = C.copy()
    while rows.any() and cols.any():
        ri = np.where(rows)[0]
        ci = np.where(cols)[0]
        sub = work[np.ix_(ri, ci)]
        if len(ci) >= 2:
            part = np.partition(sub, 1, axis=1)
            row_pen = part[:, 1] - part[:, 0]
        else:
            row_pen = np.zeros(len(ri))
        if len(ri) >= 2:
            part = np.partition(sub, 1, axis=0)
            col_pen = part[1, :] - part[0, :]
        else:
            col_pen = np.zeros(len(ci))
        if len(row_pen) and (not len(col_pen) or row_pen.max() >= col_pen.max()):
            i = ri[int(np.argmax(row_pen))]
            j = ci[int(np.argmin(work[i, ci]))]
        else:
            j = ci[int(np.argmax(col_pen))]
            i = ri[int(np.argmin(work[ri, j]))]
        q = min(supply[i], demand[j])
        plan[i, j] += q
        cells.append((i, j))
        supply[i] -= q
        demand[j] -= q
        if supply[i] <= 1e-15:
            rows[i] = False
        if demand[j] <= 1e-15:
            cols[j] = False
    return plan, cells


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[rx] = ry
        return True


def _complete_basis(cells, n: int, m: int, C: NDArray) -> list[tuple[int, int]]:
    """Extend an acyclic cell set to a spanning tree with zero cells."""
    uf = _UnionFind(n + m)
    basis = []
    for i, j in cells:
        if uf.union(i, n + j):
            basis.append((i, j))
        # a duplicate allocation cell re-links the same nodes; skip it
    if len(basis) < n + m - 1:
        order = np.argsort(C, axis=None)
        for flat in order:
            i, j = divmod(int(flat), m)
            if uf.union(i, n + j):
                basis.append((i, j))
                if len(basis) == n + m - 1:
                    break
    return basis


def _tree_potentials(basis, n: int, m: int, C: NDArray):
    """Dual variables (u, v) with u_i + v_j = C_ij on every basic cell."""
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n + m)]
    for i, j in basis:
        adj[i].append((n + j, C[i, j]))
        adj[n + j].append((i, C[i, j]))
    pot = np.zeros(n + m)
    seen = np.zeros(n + m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        node = stack.pop()
        for other, cost in adj[node]:
            if not seen[other]:
                pot[other] = cost - pot[node]
                seen[other] = True
                stack.append(other)
    if not seen.all():
        raise ComputeError("transport basis is not a spanning tree")
    return pot[:n], pot[n:]


def _tree_path(basis, n: int, m: int, start: int, goal: int):
    """Node path between two vertices of the basis tree."""
    adj: list[list[int]] = [[] for _ in range(n + m)]
    for i, j in basis:
        adj[i].append(n + j)
        adj[n + j].append(i)
    prev = {start: start}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for other in adj[node]:
            if other not in prev:
                prev[other] = node
                stack.append(other)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def dc_discrete(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cell_cap: int = 1_000_000,
) -> tuple[float, Coupling]:
    """Exact optimal-transport cost between two discrete measures.

    Solves the transportation linear program for the quadratic cost and
    returns the optimal value with an optimal plan.  Optimality is
    certified by a complementary-slackness check on the final duals.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch("measures live in different dimensions")
    n, m = mu.size, nu.size
    if n * m > cell_cap:
        raise ValidationError(f"instance has {n * m} cells, cap is {cell_cap}")
    C = cost_matrix(mu.atoms, nu.atoms)
    a, b = mu.weights, nu.weights

    plan, cells = _vogel_plan(C, a, b)
    basis = _complete_basis(cells, n, m, C)

    max_pivots = max(1000, 20 * (n + m))
    for _ in range(max_pivots):
        u, v = _tree_potentials(basis, n, m, C)
        red = C - u[:, None] - v[None, :]
        i0, j0 = np.unravel_index(int(np.argmin(red)), red.shape)
        if red[i0, j0] >= -1e-11:
            break
        nodes = _tree_path(basis, n, m, i0, n + j0)
        # entering cell gets +delta; path edges alternate -,+,-,...
        edges = []
        for k in range(len(nodes) - 1):
            x, y = nodes[k], nodes[k + 1]
            i, j = (x, y - n) if x < n else (y, x - n)
            edges.append((i, j))
        minus = edges[0::2]
        deltas = [plan[i, j] for i, j in minus]
        delta = min(deltas)
        leave = minus[deltas.index(delta)]
        plan[i0, j0] += delta
        for k, (i, j) in enumerate(edges):
            plan[i, j] += -delta if k % 2 == 0 else delta
        basis.remove(leave)
        basis.append((i0, j0))
    else:
        raise ComputeError("pivot cap exceeded in transportation simplex")

    u, v = _tree_potentials(basis, n, m, C)
    red = C - u[:, None] - v[None, :]
    if red.min() < -1e-9:
        raise ComputeError("optimality check failed: negative reduced cost")
    if np.abs(red[plan > 1e-14]).max(initial=0.0) > 1e-9:
        raise ComputeError("complementary slackness violated on the plan")
    np.clip(plan, 0.0, None, out=plan)
    value = float((plan * C).sum())
    return value, Coupling(mu, nu, plan)


def _default_support(
    f: PwlConvex, nu0: DiscreteMeasure, theta: float, lam_ref: float
) -> NDArray:
    pad = np.sqrt(2.0 * theta) + 2.0 * f.lipschitz / lam_ref
    axes = []
    for k in range(nu0.dim):
        lo = nu0.atoms[:, k].min() - pad
        hi = nu0.atoms[:, k].max() + pad
        axes.append(np.linspace(lo, hi, 200))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def primal_robust_ev_oracle(
    f: PwlConvex,
    nu0: DiscreteMeasure,
    theta: float,
    candidate_support: NDArray | None = None,
    lam_ref: float = 1.0,
    bisect_iters: int = 200,
) -> float:
    """Largest expectation of f over transports of nu0 within budget theta.

    Maximizes sum_ij pi_ij f(y_j) over plans pi with row marginals nu0,
    columns restricted to a candidate support, and transport cost at
    most theta.  For a multiplier lam >= 0 each source atom moves to its
    best target argmax_j { f(y_j) - lam * cost }; bisection on lam
    matches the budget and the two bracketing plans are mixed to hit it
    exactly, which is an optimal basic solution of the linear program.
    """
    if theta < 0:
        raise ValidationError("theta must be nonnegative")
    if f.dim != nu0.dim:
        raise DimensionMismatch("payoff and measure dimensions differ")
    X, mu = nu0.atoms, nu0.weights
    if theta == 0.0:
        return float(mu @ f(X))
    if candidate_support is None:
        Y = _default_support(f, nu0, theta, lam_ref)
    else:
        Y = np.atleast_2d(np.asarray(candidate_support, dtype=float))
    Y = np.vstack([X, Y])
    fY = f(Y)
    C = cost_matrix(X, Y)

    def assign(lam: float):
        best = np.argmax(fY[None, :] - lam * C, axis=1)
        rows = np.arange(X.shape[0])
        return float(mu @ C[rows, best]), float(mu @ fY[best])

    lam_lo, lam_hi = 1e-8, 1e8
    budget_lo, value_lo = assign(lam_lo)
    if budget_lo <= theta:
        # budget not binding even with (nearly) free transport
        return value_lo
    budget_hi, value_hi = assign(lam_hi)
    for _ in range(bisect_iters):
        mid = 0.5 * (lam_lo + lam_hi)
        budget_mid, value_mid = assign(mid)
        if budget_mid > theta:
            lam_lo, budget_lo, value_lo = mid, budget_mid, value_mid
        else:
            lam_hi, budget_hi, value_hi = mid, budget_mid, value_mid
    if budget_lo == budget_hi:
        return max(value_lo, value_hi)
    mix = (theta - budget_hi) / (budget_lo - budget_hi)
    return mix * value_lo + (1.0 - mix) * value_hi
