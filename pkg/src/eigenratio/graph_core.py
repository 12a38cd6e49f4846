"""Measured weighted graphs and the primitive functionals defined on them.

A :class:`MeasuredGraph` is the discrete stand-in for a weighted manifold:
a probability measure on the vertices, energy weights ``w`` that quadrature
the Dirichlet form, perimeter weights ``p`` that quadrature the boundary
measure, and optional geometric edge lengths ``ell``.

Sums over edges run over undirected edges once, so the Dirichlet energy is
``sum_e w_e (f_i - f_j)**2`` with no factor one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    EmptySet,
    GraphError,
    MeasureNormalizationError,
    NegativeWeight,
    NonpositiveMeasure,
    ZeroFunction,
)

MEASURE_EXACT_TOL = 1e-12
MEASURE_RENORM_TOL = 1e-9


@dataclass(frozen=True)
class ModelInfo:
    """Geometry of a flat model space (circle or torus) behind a grid graph.

    ``sides`` are the side lengths of the fundamental domain, ``counts`` the
    grid points per dimension.  Vertex ``v`` sits at multi-index
    ``np.unravel_index(v, counts)``.
    """

    kind: str
    dim: int
    a: float
    sides: tuple
    counts: tuple

    @property
    def spacing(self) -> tuple:
        return tuple(s / c for s, c in zip(self.sides, self.counts))

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def geometric_diameter(self) -> float:
        # flat torus: half the diagonal of the fundamental box
        return 0.5 * math.sqrt(sum(s * s for s in self.sides))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "a": self.a,
            "sides": list(self.sides),
            "counts": list(self.counts),
        }


@dataclass(frozen=True, eq=False)
class MeasuredGraph:
    """Immutable measured graph.  Build it with :func:`build_graph`."""

    mu: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    w: np.ndarray
    p: np.ndarray
    ell: Optional[np.ndarray] = None
    model: Optional[ModelInfo] = field(default=None)

    @property
    def vertex_count(self) -> int:
        return int(self.mu.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.src.shape[0])

    @property
    def has_lengths(self) -> bool:
        return self.ell is not None and bool(np.all(np.isfinite(self.ell)))

    @property
    def edges(self) -> list:
        ell = self.ell if self.ell is not None else np.full(self.edge_count, np.nan)
        return [
            (int(i), int(j), float(w), float(p), None if np.isnan(l) else float(l))
            for i, j, w, p, l in zip(self.src, self.dst, self.w, self.p, ell)
        ]

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Energy Laplacian ``L`` with ``f @ L @ f == dirichlet_energy(f)``."""
        return _weighted_laplacian(self.vertex_count, self.src, self.dst, self.w)

    @cached_property
    def perimeter_adjacency(self) -> sp.csr_matrix:
        n = self.vertex_count
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.p, self.p])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def hop_adjacency(self) -> sp.csr_matrix:
        n = self.vertex_count
        ones = np.ones(self.edge_count)
        a = sp.csr_matrix((ones, (self.src, self.dst)), shape=(n, n))
        return (a + a.T).tocsr()

    def relabel(self, perm: Sequence[int]) -> "MeasuredGraph":
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        n = self.vertex_count
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError("perm must be a permutation of range(n)")
        mu = np.empty(n)
        mu[perm] = self.mu
        edges = []
        for i, j, w, p, l in self.edges:
            edges.append((int(perm[i]), int(perm[j]), w, p, l))
        return build_graph(n, mu, edges)


def _weighted_laplacian(n, src, dst, weights) -> sp.csr_matrix:
    rows = np.concatenate([src, dst, src, dst])
    cols = np.concatenate([dst, src, src, dst])
    vals = np.concatenate([-weights, -weights, weights, weights])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _frozen(arr) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def build_graph(vertex_count: int, mu_list, edge_list: Iterable, model: ModelInfo = None) -> MeasuredGraph:
    """Validate inputs and construct a :class:`MeasuredGraph`.

    Each entry of ``edge_list`` is ``(i, j, w)``, ``(i, j, w, p)`` or
    ``(i, j, w, p, ell)``.  A missing perimeter weight defaults to ``w``
    (pure graph mode); a missing or ``None`` length means no geometry.

    ``mu_list`` must sum to one.  A sum within 1e-12 is kept bit-for-bit, a
    sum within 1e-9 is renormalized, anything else raises
    :class:`MeasureNormalizationError`.
    """
    n = int(vertex_count)
    if n != vertex_count or n <= 0:
        raise GraphError(f"vertex_count must be a positive integer, got {vertex_count!r}")
    mu = np.array(mu_list, dtype=np.float64).ravel()
    if mu.shape[0] != n:
        raise GraphError(f"expected {n} vertex masses, got {mu.shape[0]}")
    if not np.all(np.isfinite(mu)):
        raise NonpositiveMeasure("vertex masses must be finite")
    if np.any(mu <= 0):
        raise NonpositiveMeasure("vertex masses must be strictly positive")
    total = math.fsum(mu.tolist())
    if abs(total - 1.0) > MEASURE_RENORM_TOL:
        raise MeasureNormalizationError(f"vertex masses sum to {total!r}, not 1")
    if abs(total - 1.0) > MEASURE_EXACT_TOL:
        mu = mu / total

    src, dst, ws, ps, ells = [], [], [], [], []
    seen = set()
    for edge in edge_list:
        edge = tuple(edge)
        if len(edge) not in (3, 4, 5):
            raise GraphError(f"edge must have 3 to 5 fields, got {edge!r}")
        i, j, w = edge[0], edge[1], edge[2]
        p = edge[3] if len(edge) >= 4 else w
        l = edge[4] if len(edge) == 5 else None
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) has an endpoint out of range")
        if i == j:
            raise GraphError(f"self-loop at vertex {i}")
        if i > j:
            i, j = j, i
        if (i, j) in seen:
            raise DuplicateEdge(f"duplicate edge ({i}, {j})")
        seen.add((i, j))
        w, p = float(w), float(p)
        if not (math.isfinite(w) and math.isfinite(p)):
            raise NegativeWeight(f"non-finite weight on edge ({i}, {j})")
        if w < 0 or p < 0:
            raise NegativeWeight(f"negative weight on edge ({i}, {j})")
        if l is not None:
            l = float(l)
            if not (math.isfinite(l) and l > 0):
                raise GraphError(f"edge length must be positive and finite on ({i}, {j})")
        src.append(i)
        dst.append(j)
        ws.append(w)
        ps.append(p)
        ells.append(np.nan if l is None else l)

    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    w = np.array(ws, dtype=np.float64)
    p = np.array(ps, dtype=np.float64)
    ell = np.array(ells, dtype=np.float64)
    if not np.any(np.isfinite(ell)):
        ell = None

    if n > 1:
        active = w > 0
        adj = sp.csr_matrix(
            (np.ones(int(active.sum())), (src[active], dst[active])), shape=(n, n)
        )
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DisconnectedGraph(f"graph has {ncomp} connected components")

    return MeasuredGraph(
        mu=_frozen(mu),
        src=_frozen(src),
        dst=_frozen(dst),
        w=_frozen(w),
        p=_frozen(p),
        ell=None if ell is None else _frozen(ell),
        model=model,
    )


def as_function(G: MeasuredGraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (G.vertex_count,):
        raise ValueError(f"function has shape {f.shape}, expected ({G.vertex_count},)")
    if not np.all(np.isfinite(f)):
        raise ValueError("function values must be finite")
    return f


def as_subset(G: MeasuredGraph, A) -> np.ndarray:
    """Boolean membership mask from a mask or an iterable of vertex indices."""
    arr = np.asarray(A)
    if arr.dtype == bool:
        if arr.shape != (G.vertex_count,):
            raise ValueError("subset mask has the wrong length")
        return arr
    mask = np.zeros(G.vertex_count, dtype=bool)
    idx = np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= G.vertex_count):
        raise ValueError("subset contains an out-of-range vertex")
    mask[idx] = True
    return mask


def dirichlet_energy(G: MeasuredGraph, f) -> float:
    f = as_function(G, f)
    d = f[G.src] - f[G.dst]
    return float(np.dot(G.w, d * d))


def l1_norm(G: MeasuredGraph, f) -> float:
    f = as_function(G, f)
    return float(np.dot(G.mu, np.abs(f)))


def l2_norm_sq(G: MeasuredGraph, f) -> float:
    f = as_function(G, f)
    return float(np.dot(G.mu, f * f))


def rayleigh_quotient(G: MeasuredGraph, f) -> float:
    denom = l2_norm_sq(G, f)
    if denom == 0.0:
        raise ZeroFunction("Rayleigh quotient of the zero function")
    return dirichlet_energy(G, f) / denom


def total_variation(G: MeasuredGraph, f) -> float:
    f = as_function(G, f)
    return float(np.dot(G.p, np.abs(f[G.src] - f[G.dst])))


def measure(G: MeasuredGraph, A) -> float:
    return float(G.mu[as_subset(G, A)].sum())


def boundary_measure(G: MeasuredGraph, A) -> float:
    mask = as_subset(G, A)
    crossing = mask[G.src] != mask[G.dst]
    return float(G.p[crossing].sum())


def conductance(G: MeasuredGraph, A) -> float:
    mask = as_subset(G, A)
    mass = float(G.mu[mask].sum())
    if mass <= 0.0:
        raise EmptySet("conductance of a set of zero measure")
    return boundary_measure(G, mask) / mass


def superlevel_set(f, t: float) -> np.ndarray:
    """Strict superlevel set ``{f > t}`` as a boolean mask."""
    return np.asarray(f) > t


@dataclass(frozen=True)
class LevelProfile:
    """Masses and boundaries of the nested sets ``{f >= levels[j]}``.

    ``levels`` are the distinct values of ``f`` in decreasing order, so set
    ``j`` grows with ``j`` and the last set is the whole vertex set.
    """

    levels: np.ndarray
    masses: np.ndarray
    boundaries: np.ndarray
    group: np.ndarray  # rank of each vertex's value in ``levels``

    def members(self, j: int) -> np.ndarray:
        return self.group <= j


def level_profile(G: MeasuredGraph, f) -> LevelProfile:
    f = as_function(G, f)
    levels, inverse = np.unique(-f, return_inverse=True)
    levels = -levels
    group = inverse.ravel()
    count = levels.shape[0]
    masses = np.cumsum(np.bincount(group, weights=G.mu, minlength=count))
    # edge (u, v) separates set j iff min(g_u, g_v) <= j < max(g_u, g_v)
    gu, gv = group[G.src], group[G.dst]
    lo, hi = np.minimum(gu, gv), np.maximum(gu, gv)
    diff = np.zeros(count + 1, dtype=np.longdouble)
    np.add.at(diff, lo, G.p)
    np.add.at(diff, hi, -G.p)
    crossing = np.zeros(count + 1, dtype=np.int64)
    np.add.at(crossing, lo, 1)
    np.add.at(crossing, hi, -1)
    # running sums cancel inexactly; levels with no crossing edge are exactly 0
    active = np.cumsum(crossing[:count]) > 0
    boundaries = np.where(active, np.maximum(np.cumsum(diff[:count]), 0), 0).astype(np.float64)
    return LevelProfile(levels=levels, masses=masses, boundaries=boundaries, group=group)


def _level_widths(levels: np.ndarray) -> np.ndarray:
    # width of the t-interval on which {f > t} equals {f >= levels[j]}, t >= 0
    lower = np.append(levels[1:], 0.0)
    lower = np.maximum(lower, 0.0)
    return np.where(levels > 0, levels - lower, 0.0)


def _require_nonnegative(f):
    if np.any(f < 0):
        raise ValueError("function must be nonnegative")


def coarea_integral(G: MeasuredGraph, f) -> float:
    """``int_0^inf mu+({f > t}) dt`` as an exact finite sum over level gaps."""
    f = as_function(G, f)
    _require_nonnegative(f)
    prof = level_profile(G, f)
    return float(np.dot(_level_widths(prof.levels), prof.boundaries))


def layer_cake_integral(G: MeasuredGraph, f) -> float:
    f = as_function(G, f)
    _require_nonnegative(f)
    prof = level_profile(G, f)
    return float(np.dot(_level_widths(prof.levels), prof.masses))


def write_graph(G: MeasuredGraph, path) -> None:
    """Write the textual graph format: ``n m``, then masses, then edges."""
    lines = [f"{G.vertex_count} {G.edge_count}"]
    lines.extend(repr(float(m)) for m in G.mu)
    for i, j, w, p, l in G.edges:
        lines.append(f"{i} {j} {w!r} {p!r} {'-' if l is None else repr(l)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> MeasuredGraph:
    tokens = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not tokens or len(tokens[0]) != 2:
        raise GraphError("graph file must start with a header line 'n m'")
    n, m = int(tokens[0][0]), int(tokens[0][1])
    if len(tokens) != 1 + n + m:
        raise GraphError(f"expected {1 + n + m} non-empty lines, found {len(tokens)}")
    mu = [float(t[0]) for t in tokens[1 : 1 + n]]
    edges = []
    for t in tokens[1 + n :]:
        if len(t) != 5:
            raise GraphError(f"edge line must have 5 fields: {' '.join(t)}")
        ell = None if t[4] == "-" else float(t[4])
        edges.append((int(t[0]), int(t[1]), float(t[2]), float(t[3]), ell))
    return build_graph(n, mu, edges)


@dataclass(frozen=True)
class CutCertificate:
    """A vertex set with its measure, boundary measure and conductance."""

    threshold: float
    inside: tuple
    mass: float
    boundary: float
    phi: float

    @classmethod
    def from_mask(cls, G: MeasuredGraph, mask, threshold: float = float("nan")) -> "CutCertificate":
        mask = as_subset(G, mask)
        mass = float(G.mu[mask].sum())
        if mass <= 0.0:
            raise EmptySet("certificate for a set of zero measure")
        boundary = boundary_measure(G, mask)
        return cls(
            threshold=float(threshold),
            inside=tuple(int(v) for v in np.flatnonzero(mask)),
            mass=mass,
            boundary=boundary,
            phi=boundary / mass,
        )

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "inside": list(self.inside),
            "mass": self.mass,
            "boundary": self.boundary,
            "phi": self.phi,
        }
