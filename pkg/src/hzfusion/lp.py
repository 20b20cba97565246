"""Linear programs over factor variables.

Two interchangeable backends solve

    min  c @ x   s.t.   A_eq @ x = b_eq,   A_ub @ x <= b_ub,   lb <= x <= ub

``"simplex"`` is a dense bounded-variable primal simplex written here;
``"highs"`` forwards to :func:`scipy.optimize.linprog`. The two are checked
against each other in the test-suite. HiGHS is the default because the
constraint matrices produced by repeated intersections get large.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .config import TOL

DEFAULT_BACKEND = os.environ.get("HZFUSION_LP_BACKEND", "highs")


class LpError(RuntimeError):
    """The LP backend failed for a reason other than infeasibility."""


@dataclass(frozen=True)
class LpResult:
    feasible: bool
    x: np.ndarray | None = None
    value: float = np.nan


def solve_lp(
    c,
    A_eq=None,
    b_eq=None,
    A_ub=None,
    b_ub=None,
    lb=-1.0,
    ub=1.0,
    backend: str | None = None,
) -> LpResult:
    """Minimize ``c @ x``. Bounds default to the unit box ``[-1, 1]``."""
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    A_eq, b_eq = _rows(A_eq, b_eq, n)
    A_ub, b_ub = _rows(A_ub, b_ub, n)
    lb = np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy()
    ub = np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy()
    if np.any(lb > ub):
        return LpResult(False)
    backend = backend or DEFAULT_BACKEND
    if backend == "highs":
        return _solve_highs(c, A_eq, b_eq, A_ub, b_ub, lb, ub)
    if backend == "simplex":
        return _solve_simplex(c, A_eq, b_eq, A_ub, b_ub, lb, ub)
    raise ValueError(f"unknown LP backend {backend!r}")


def _rows(A, b, n):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[0] != b.size:
        raise ValueError("constraint matrix and right-hand side disagree in length")
    return A, b


def _solve_highs(c, A_eq, b_eq, A_ub, b_ub, lb, ub) -> LpResult:
    ub = np.where(np.isinf(ub), None, ub)
    lb = np.where(np.isinf(lb), None, lb)
    res = linprog(
        c,
        A_ub=sparse.csr_matrix(A_ub) if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=sparse.csr_matrix(A_eq) if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=list(zip(lb, ub)),
        method="highs",
        options={
            "primal_feasibility_tolerance": TOL.lp_feasibility,
            "dual_feasibility_tolerance": TOL.lp_feasibility,
            "presolve": True,
        },
    )
    if res.status == 0:
        return LpResult(True, res.x, float(res.fun))
    if res.status == 2:
        return LpResult(False)
    raise LpError(f"HiGHS returned status {res.status}: {res.message}")


# -- dense bounded-variable simplex ---------------------------------------

_PIVOT_EPS = 1e-11
_MAX_ITER = 50_000


def _solve_simplex(c, A_eq, b_eq, A_ub, b_ub, lb, ub) -> LpResult:
    n = c.size
    m_ub = A_ub.shape[0]
    if np.any(np.isinf(lb)):
        raise ValueError("simplex backend needs finite lower bounds")
    # inequality rows get slacks in [0, inf)
    A = np.vstack(
        [
            np.hstack([A_eq, np.zeros((A_eq.shape[0], m_ub))]),
            np.hstack([A_ub, np.eye(m_ub)]),
        ]
    )
    b = np.concatenate([b_eq, b_ub])
    cost = np.concatenate([c, np.zeros(m_ub)])
    lo = np.concatenate([lb, np.zeros(m_ub)])
    up = np.concatenate([ub, np.full(m_ub, np.inf)])
    # shift to y = x - lo, y in [0, up - lo]
    cap = up - lo
    rhs = b - A @ lo
    y = _bounded_simplex(cost, A, rhs, cap)
    if y is None:
        return LpResult(False)
    x = y[:n] + lb
    return LpResult(True, x, float(c @ x))


def _bounded_simplex(cost, A, rhs, cap):
    """Two-phase primal simplex for ``min cost@y, A y = rhs, 0 <= y <= cap``."""
    state = _phase1(A, rhs, cap)
    if state is None:
        return None
    return state.minimize(cost)


class _SimplexState:
    """Primal-feasible basis kept between objective changes."""

    def __init__(self, A, rhs, T, basis, xB, at_upper, ucap):
        self.A, self.rhs = A, rhs
        self.T, self.basis, self.xB = T, basis, xB
        self.at_upper, self.ucap = at_upper, ucap

    def minimize(self, cost):
        n = self.T.shape[1]
        self.T, self.basis, self.xB, self.at_upper = _iterate(
            self.T, self.basis, self.xB, self.at_upper, self.ucap, cost, n
        )
        y = np.where(self.at_upper, self.ucap, 0.0)
        y[self.basis] = self.xB
        return np.clip(y, 0.0, self.ucap)


def _phase1(A, rhs, cap):
    m, n = A.shape
    flip = rhs < 0
    A = np.where(flip[:, None], -A, A)
    rhs = np.where(flip, -rhs, rhs)
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))

    # tableau columns: structural then artificial
    T = np.hstack([A, np.eye(m)])
    ucap = np.concatenate([cap, np.full(m, np.inf)])
    basis = np.arange(n, n + m)
    at_upper = np.zeros(n + m, dtype=bool)
    xB = rhs.astype(float).copy()

    phase1 = np.concatenate([np.zeros(n), np.ones(m)])
    T, basis, xB, at_upper = _iterate(T, basis, xB, at_upper, ucap, phase1, n + m)
    infeas = float(phase1[basis] @ xB)
    if infeas > TOL.lp_feasibility * scale * max(1, m):
        return None

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] < n:
            continue
        row = T[r, :n]
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size == 0:
            keep[r] = False
            continue
        j = cand[np.argmax(np.abs(row[cand]))]
        xj = ucap[j] if at_upper[j] else 0.0
        T, xB = _pivot(T, xB, r, j)
        xB[r] = xj
        at_upper[j] = False
        basis[r] = j
    return _SimplexState(
        A[keep], rhs[keep], T[keep][:, :n], basis[keep], xB[keep], at_upper[:n], ucap[:n]
    )


class BoxLpWorkspace:
    """Repeated LPs ``min c@x, A x = b, -1 <= x <= 1`` sharing one feasible region.

    Phase 1 runs once on construction; every :meth:`minimize` call starts
    phase 2 from the previous optimal basis. Not safe to share between threads.
    """

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        self.n = A.shape[1]
        self._state = _phase1(A, b + A.sum(axis=1), np.full(self.n, 2.0))

    @property
    def feasible(self) -> bool:
        return self._state is not None

    def minimize(self, c) -> LpResult:
        if self._state is None:
            return LpResult(False)
        c = np.asarray(c, dtype=float).reshape(-1)
        x = self._state.minimize(c) - 1.0
        return LpResult(True, x, float(c @ x))


def _pivot(T, xB, r, j):
    piv = T[r, j]
    T[r] /= piv
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    return T, xB


def _iterate(T, basis, xB, at_upper, ucap, cost, ncols):
    m = T.shape[0]
    degenerate_run = 0
    for _ in range(_MAX_ITER):
        cB = cost[basis]
        d = cost[:ncols] - cB @ T[:, :ncols]
        nonbasic = np.ones(ncols, dtype=bool)
        nonbasic[basis] = False
        improve_up = nonbasic & ~at_upper[:ncols] & (d < -1e-10)
        improve_dn = nonbasic & at_upper[:ncols] & (d > 1e-10)
        cand = np.flatnonzero(improve_up | improve_dn)
        if cand.size == 0:
            return T, basis, xB, at_upper
        if degenerate_run > 20:
            j = int(cand[0])  # Bland
        else:
            j = int(cand[np.argmax(np.abs(d[cand]))])
        direction = 1.0 if improve_up[j] else -1.0

        alpha = direction * T[:, j]
        theta = ucap[j]
        leave, leave_to_upper = -1, False
        with np.errstate(divide="ignore", invalid="ignore"):
            dec = alpha > _PIVOT_EPS
            inc = alpha < -_PIVOT_EPS
            lim = np.full(m, np.inf)
            lim[dec] = np.maximum(xB[dec], 0.0) / alpha[dec]
            ucapB = ucap[basis]
            lim[inc] = np.maximum(ucapB[inc] - xB[inc], 0.0) / -alpha[inc]
        if m:
            best = lim.min()
            if best < theta:
                ties = np.flatnonzero(lim <= best + 1e-12)
                r = int(ties[np.argmin(basis[ties])]) if degenerate_run > 20 else int(
                    ties[np.argmax(np.abs(alpha[ties]))]
                )
                theta, leave, leave_to_upper = lim[r], r, bool(inc[r])
        if np.isinf(theta):
            raise LpError("unbounded LP over a bounded domain")
        degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0

        start = ucap[j] if at_upper[j] else 0.0
        xB = xB - theta * alpha
        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue
        old = basis[leave]
        T, xB = _pivot(T, xB, leave, j)
        xB[leave] = start + direction * theta
        basis[leave] = j
        at_upper[j] = False
        at_upper[old] = leave_to_upper
    raise LpError("simplex iteration limit reached")
