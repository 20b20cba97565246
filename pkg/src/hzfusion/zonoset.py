"""Interval, constrained zonotope and hybrid zonotope value types.

A constrained zonotope ``<h, G, A, b>`` is the set

    { h + G @ beta  |  A @ beta = b,  beta in [-1, 1]^e }

and a hybrid zonotope ``<h, Gc, Gb, Ac, Ab, b>`` additionally carries binary
factors ``beta_b in {-1, 1}^p`` entering through ``Gb`` and ``Ab``.

All sets are immutable. Every operation returns a new object and the arrays
held by a set are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import block_diag


def _vec(x, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _mat(x, rows: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.size == 0:
        cols = arr.shape[1] if arr.ndim == 2 and arr.shape[0] == rows else 0
        arr = np.zeros((rows, cols))
    if arr.ndim == 1 and rows == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _fix_cols(arr: np.ndarray, cols: int) -> np.ndarray:
    # empty row-blocks come in as (0, 0); give them the right column count
    if arr.shape[0] == 0 and arr.shape[1] != cols:
        arr = np.zeros((0, cols))
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Interval:
    """Axis-aligned box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _vec(self.lower, "lower")
        hi = _vec(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError(f"interval bounds differ in dimension: {lo.size} vs {hi.size}")
        if np.any(lo > hi):
            raise ValueError("interval lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def to_zonotope(self) -> "ConstrainedZonotope":
        return make_interval(self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class ConstrainedZonotope:
    center: np.ndarray
    generators: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        h = _vec(self.center, "center")
        G = _mat(self.generators, h.size, "generators")
        b = _vec(self.b, "b")
        A = _fix_cols(_mat(self.A, b.size, "A"), G.shape[1])
        if A.shape[1] != G.shape[1]:
            raise ValueError(f"A has {A.shape[1]} columns but G has {G.shape[1]}")
        object.__setattr__(self, "center", h)
        object.__setattr__(self, "generators", G)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def n_gens(self) -> int:
        return self.generators.shape[1]

    @property
    def n_cons(self) -> int:
        return self.b.size

    def __repr__(self):
        return f"ConstrainedZonotope(dim={self.dim}, e={self.n_gens}, n_cons={self.n_cons})"

    def to_hybrid(self) -> "HybridZonotope":
        return lift_to_hybrid(self)


@dataclass(frozen=True, eq=False)
class HybridZonotope:
    center: np.ndarray
    Gc: np.ndarray
    Gb: np.ndarray
    Ac: np.ndarray
    Ab: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        h = _vec(self.center, "center")
        Gc = _mat(self.Gc, h.size, "Gc")
        Gb = _mat(self.Gb, h.size, "Gb")
        b = _vec(self.b, "b")
        Ac = _fix_cols(_mat(self.Ac, b.size, "Ac"), Gc.shape[1])
        Ab = _fix_cols(_mat(self.Ab, b.size, "Ab"), Gb.shape[1])
        if Ac.shape[1] != Gc.shape[1]:
            raise ValueError(f"Ac has {Ac.shape[1]} columns but Gc has {Gc.shape[1]}")
        if Ab.shape[1] != Gb.shape[1]:
            raise ValueError(f"Ab has {Ab.shape[1]} columns but Gb has {Gb.shape[1]}")
        for name, val in (("center", h), ("Gc", Gc), ("Gb", Gb), ("Ac", Ac), ("Ab", Ab), ("b", b)):
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def n_gens(self) -> int:
        """Number of continuous generators."""
        return self.Gc.shape[1]

    @property
    def n_bin(self) -> int:
        return self.Gb.shape[1]

    @property
    def n_cons(self) -> int:
        return self.b.size

    def __repr__(self):
        return (
            f"HybridZonotope(dim={self.dim}, e={self.n_gens}, p={self.n_bin}, "
            f"n_cons={self.n_cons})"
        )

    def leaf(self, binaries) -> ConstrainedZonotope:
        """Constrained zonotope obtained by fixing the binary factors."""
        xb = np.asarray(binaries, dtype=float).reshape(-1)
        return ConstrainedZonotope(self.center + self.Gb @ xb, self.Gc, self.Ac, self.b - self.Ab @ xb)


ZonoSet = Union[ConstrainedZonotope, HybridZonotope]


def make_interval(lower, upper) -> ConstrainedZonotope:
    """Box ``{x | lower <= x <= upper}`` with diagonal half-width generators."""
    box = Interval(lower, upper)
    half = (box.upper - box.lower) / 2.0
    return ConstrainedZonotope(
        (box.upper + box.lower) / 2.0, np.diag(half), np.zeros((0, box.dim)), np.zeros(0)
    )


def make_point(x) -> ConstrainedZonotope:
    x = _vec(x, "x")
    return ConstrainedZonotope(x, np.zeros((x.size, 0)), np.zeros((0, 0)), np.zeros(0))


def lift_to_hybrid(Z: ConstrainedZonotope) -> HybridZonotope:
    if isinstance(Z, HybridZonotope):
        return Z
    return HybridZonotope(
        Z.center,
        Z.generators,
        np.zeros((Z.dim, 0)),
        Z.A,
        np.zeros((Z.n_cons, 0)),
        Z.b,
    )


def _hybrid(X: ZonoSet) -> HybridZonotope:
    if isinstance(X, HybridZonotope):
        return X
    if isinstance(X, ConstrainedZonotope):
        return lift_to_hybrid(X)
    raise TypeError(f"expected a zonotopic set, got {type(X).__name__}")


def _narrow(H: HybridZonotope, *operands: ZonoSet) -> ZonoSet:
    # results of purely constrained-zonotope operands stay constrained zonotopes
    if all(isinstance(X, ConstrainedZonotope) for X in operands):
        return ConstrainedZonotope(H.center, H.Gc, H.Ac, H.b)
    return H


def affine_map(R, s, X: ZonoSet) -> ZonoSet:
    """Image ``R X + s``. Constraint data is passed through untouched."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[1] != X.dim:
        raise ValueError(f"map has {R.shape[1]} columns but set has dimension {X.dim}")
    s = np.zeros(R.shape[0]) if s is None else np.asarray(s, dtype=float).reshape(-1)
    if s.size != R.shape[0]:
        raise ValueError(f"offset has length {s.size}, map has {R.shape[0]} rows")
    if isinstance(X, HybridZonotope):
        return HybridZonotope(R @ X.center + s, R @ X.Gc, R @ X.Gb, X.Ac, X.Ab, X.b)
    return ConstrainedZonotope(R @ X.center + s, R @ X.generators, X.A, X.b)


def minkowski_sum(X1: ZonoSet, X2: ZonoSet) -> ZonoSet:
    if X1.dim != X2.dim:
        raise ValueError(f"Minkowski sum of sets in R^{X1.dim} and R^{X2.dim}")
    H1, H2 = _hybrid(X1), _hybrid(X2)
    out = HybridZonotope(
        H1.center + H2.center,
        np.hstack([H1.Gc, H2.Gc]),
        np.hstack([H1.Gb, H2.Gb]),
        block_diag(H1.Ac, H2.Ac),
        block_diag(H1.Ab, H2.Ab),
        np.concatenate([H1.b, H2.b]),
    )
    return _narrow(out, X1, X2)


def cartesian_product(X1: ZonoSet, X2: ZonoSet) -> ZonoSet:
    H1, H2 = _hybrid(X1), _hybrid(X2)
    out = HybridZonotope(
        np.concatenate([H1.center, H2.center]),
        block_diag(H1.Gc, H2.Gc),
        block_diag(H1.Gb, H2.Gb),
        block_diag(H1.Ac, H2.Ac),
        block_diag(H1.Ab, H2.Ab),
        np.concatenate([H1.b, H2.b]),
    )
    return _narrow(out, X1, X2)


def generalized_intersection(X1: ZonoSet, X2: ZonoSet, R=None) -> ZonoSet:
    """``{x in X1 | R x in X2}``; plain intersection when ``R`` is omitted."""
    R = np.eye(X1.dim) if R is None else np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape != (X2.dim, X1.dim):
        raise ValueError(f"map must be {X2.dim}x{X1.dim}, got {R.shape[0]}x{R.shape[1]}")
    H1, H2 = _hybrid(X1), _hybrid(X2)
    e2, p2 = H2.n_gens, H2.n_bin
    out = HybridZonotope(
        H1.center,
        np.hstack([H1.Gc, np.zeros((H1.dim, e2))]),
        np.hstack([H1.Gb, np.zeros((H1.dim, p2))]),
        np.vstack([block_diag(H1.Ac, H2.Ac), np.hstack([R @ H1.Gc, -H2.Gc])]),
        np.vstack([block_diag(H1.Ab, H2.Ab), np.hstack([R @ H1.Gb, -H2.Gb])]),
        np.concatenate([H1.b, H2.b, H2.center - R @ H1.center]),
    )
    return _narrow(out, X1, X2)


def union_hybrid(H1: ZonoSet, H2: ZonoSet) -> HybridZonotope:
    """Exact union of two hybrid zonotopes.

    Each operand gets a selector binary ``lam_k``; ``lam_1 + lam_2 = 0`` makes
    exactly one of them active. For an operand with ``m`` factors the row

        sum(beta_k) - m * s_k + m * lam_k = m,     s_k in [-1, 1]

    leaves ``beta_k`` free when ``lam_k = 1`` and pins every factor (and the
    slack) to a vertex when ``lam_k = -1``: the left side can only reach ``2m``
    with ``beta_k = 1, s_k = -1``. The pinned factors contribute a constant
    that the center and selector generators cancel, and the operand's own
    constraints are shifted to remain consistent at that vertex.

    Cost: ``e1 + e2 + 2`` continuous generators, ``p1 + p2 + 2`` binary
    generators and ``nc1 + nc2 + 3`` constraints.
    """
    if H1.dim != H2.dim:
        raise ValueError(f"union of sets in R^{H1.dim} and R^{H2.dim}")
    H1, H2 = _hybrid(H1), _hybrid(H2)
    gamma = H1.dim

    center = np.zeros(gamma)
    sel_gens = []
    blocks = []  # (Ac rows, Ab rows, lam column, rhs) per operand
    for H in (H1, H2):
        ones_c, ones_b = np.ones(H.n_gens), np.ones(H.n_bin)
        pinned = H.Gc @ ones_c + H.Gb @ ones_b
        center += (H.center - pinned) / 2.0
        sel_gens.append((H.center + pinned) / 2.0)
        a_pinned = H.Ac @ ones_c + H.Ab @ ones_b
        blocks.append((H, -(H.b - a_pinned) / 2.0, (H.b + a_pinned) / 2.0))

    e1, e2, p1, p2 = H1.n_gens, H2.n_gens, H1.n_bin, H2.n_bin
    e, p = e1 + e2 + 2, p1 + p2 + 2
    nc1, nc2 = H1.n_cons, H2.n_cons
    Ac = np.zeros((nc1 + nc2 + 3, e))
    Ab = np.zeros((nc1 + nc2 + 3, p))
    b = np.zeros(nc1 + nc2 + 3)

    # operand constraint blocks
    Ac[:nc1, :e1] = H1.Ac
    Ab[:nc1, :p1] = H1.Ab
    Ab[:nc1, p1 + p2] = blocks[0][1]
    b[:nc1] = blocks[0][2]
    Ac[nc1 : nc1 + nc2, e1 : e1 + e2] = H2.Ac
    Ab[nc1 : nc1 + nc2, p1 : p1 + p2] = H2.Ab
    Ab[nc1 : nc1 + nc2, p1 + p2 + 1] = blocks[1][1]
    b[nc1 : nc1 + nc2] = blocks[1][2]

    # vertex-pinning rows
    r = nc1 + nc2
    for k, (c0, nck, b0, nbk) in enumerate(((0, e1, 0, p1), (e1, e2, p1, p2))):
        m = nck + nbk
        Ac[r + k, c0 : c0 + nck] = 1.0
        Ab[r + k, b0 : b0 + nbk] = 1.0
        Ac[r + k, e1 + e2 + k] = -m
        Ab[r + k, p1 + p2 + k] = m
        b[r + k] = m

    # exactly one selector active
    Ab[r + 2, p1 + p2] = 1.0
    Ab[r + 2, p1 + p2 + 1] = 1.0

    Gc = np.hstack([H1.Gc, H2.Gc, np.zeros((gamma, 2))])
    Gb = np.hstack([H1.Gb, H2.Gb, sel_gens[0][:, None], sel_gens[1][:, None]])
    return HybridZonotope(center, Gc, Gb, Ac, Ab, b)


# -- serialization ---------------------------------------------------------


def to_record(X: ZonoSet) -> dict:
    """Plain-JSON record ``{h, Gc, Gb, Ac, Ab, b}`` with row-major nested lists.

    Constrained zonotopes are written with empty binary blocks. Floats are
    emitted as Python floats, so ``json`` round-trips them exactly.
    """
    H = _hybrid(X)
    rec = {
        "kind": "hybrid" if isinstance(X, HybridZonotope) else "constrained",
        "dim": H.dim,
        "h": H.center.tolist(),
        "Gc": H.Gc.tolist(),
        "Gb": H.Gb.tolist(),
        "Ac": H.Ac.tolist(),
        "Ab": H.Ab.tolist(),
        "b": H.b.tolist(),
        "n_gens": H.n_gens,
        "n_bin": H.n_bin,
        "n_cons": H.n_cons,
    }
    return rec


def from_record(rec: dict) -> ZonoSet:
    gamma = len(rec["h"])
    nc = len(rec["b"])
    e, p = rec.get("n_gens"), rec.get("n_bin")

    def mat(key, rows, cols):
        arr = np.array(rec[key], dtype=float)
        return arr.reshape(rows, cols if cols is not None else (arr.size // rows if rows else 0))

    Gc = mat("Gc", gamma, e)
    Gb = mat("Gb", gamma, p)
    H = HybridZonotope(
        rec["h"], Gc, Gb, mat("Ac", nc, Gc.shape[1]), mat("Ab", nc, Gb.shape[1]), rec["b"]
    )
    if rec.get("kind") == "constrained":
        return ConstrainedZonotope(H.center, H.Gc, H.Ac, H.b)
    return H
