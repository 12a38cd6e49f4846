"""Observable diameter lower bounds and diameter-eigenvalue checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import BadKappa, NoEdgeLengths
from .graph_core import MeasuredGraph, as_function
from .isoperimetry import _model_name
from .reports import CHENG_DIMENSION_FREE, asserted

MAX_SOURCES = 64
LIPSCHITZ_RTOL = 1e-12


@dataclass
class ObsDiamEstimate:
    kappa: float
    value: float
    witness: np.ndarray
    witness_name: str
    candidate_count: int

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "value": self.value,
            "witness_name": self.witness_name,
            "candidate_count": self.candidate_count,
        }


def _check_kappa(kappa):
    if not 0 < kappa < 1:
        raise BadKappa(f"kappa must lie in (0, 1), got {kappa!r}")


def partial_diameter(G: MeasuredGraph, f, kappa: float) -> float:
    """Shortest interval length holding at least ``1 - kappa`` of ``f_* mu``."""
    _check_kappa(kappa)
    f = as_function(G, f)
    vals, inv = np.unique(f, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=G.mu, minlength=vals.shape[0])
    need = (1.0 - kappa) * (1.0 - 1e-12)
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    # window [i, j] holds cum[j + 1] - cum[i]; take the smallest feasible j per i
    end = np.searchsorted(cum, cum[:-1] + need, side="left")
    ok = end < cum.shape[0]
    i = np.flatnonzero(ok)
    j = np.maximum(end[ok] - 1, i)
    return float(np.min(vals[j] - vals[i]))


def _length_matrix(G: MeasuredGraph) -> csr_matrix:
    n = G.vertex_count
    return csr_matrix((G.ell, (G.src, G.dst)), shape=(n, n))


class _DistanceCache:
    def __init__(self, G: MeasuredGraph):
        self.graph = _length_matrix(G)
        self._rows = {}

    def __call__(self, source: int) -> np.ndarray:
        if source not in self._rows:
            self._rows[source] = dijkstra(self.graph, directed=False, indices=source)
        return self._rows[source]


def is_one_lipschitz(G: MeasuredGraph, f) -> bool:
    """Edge-by-edge check ``|f_i - f_j| <= ell_ij`` (float rounding slack 1e-12)."""
    d = np.abs(f[G.src] - f[G.dst])
    return bool(np.all(d <= G.ell * (1.0 + LIPSCHITZ_RTOL)))


def _coordinate_candidates(G: MeasuredGraph):
    m = G.model
    if m is None:
        return []
    out = []
    grid = np.indices(m.counts).reshape(m.dim, -1)
    for i, (side, count) in enumerate(zip(m.sides, m.counts)):
        x = grid[i] * (side / count)
        # periodic coordinates are not Lipschitz; fold to distance from a hyperplane
        out.append((f"folded_coordinate_{i}", np.minimum(x, side - x)))
    return out


def obs_diameter_lower(G: MeasuredGraph, kappa: float, max_sources: int = MAX_SOURCES) -> ObsDiamEstimate:
    """Certified lower bound on the observable diameter.

    Candidates are graph-distance functions from up to ``max_sources``
    farthest-point-sampled vertices and, on model grids, folded coordinate
    functions.  Each candidate is verified 1-Lipschitz before it counts.
    """
    _check_kappa(kappa)
    if not G.has_lengths:
        raise NoEdgeLengths("observable diameter needs edge lengths on every edge")
    dist = _DistanceCache(G)
    candidates = []
    sources = [0]
    nearest = dist(0).copy()
    while len(sources) < min(max_sources, G.vertex_count):
        nxt = int(np.argmax(nearest))
        if nearest[nxt] == 0:
            break
        sources.append(nxt)
        nearest = np.minimum(nearest, dist(nxt))
    for s in sources:
        candidates.append((f"distance_from_{s}", dist(s)))
    candidates.extend(_coordinate_candidates(G))
    best = None
    count = 0
    for name, f in candidates:
        if not is_one_lipschitz(G, f):
            continue
        count += 1
        val = partial_diameter(G, f, kappa)
        if best is None or val > best[0]:
            best = (val, name, f)
    return ObsDiamEstimate(kappa=kappa, value=best[0], witness=best[2], witness_name=best[1],
                           candidate_count=count)


def cheng_dimension_free_check(G: MeasuredGraph, spectrum, k: int, kappa: float, estimate=None):
    """``ObsDiam(-kappa) <= 152 k log(2/kappa) / sqrt(lambda_k)``.

    The left side is a lower bound on the observable diameter, so a pass is
    evidence of a necessary condition only.
    """
    if estimate is None:
        estimate = obs_diameter_lower(G, kappa)
    lamk = float(spectrum.eigenvalues[k])
    rhs = CHENG_DIMENSION_FREE * k * math.log(2.0 / kappa) / math.sqrt(lamk)
    return asserted(
        "cheng_dimension_free",
        estimate.value,
        rhs,
        constants={"152": CHENG_DIMENSION_FREE},
        note="lhs is a certified lower bound on ObsDiam (necessary-condition check)",
        model=_model_name(G),
        k=k,
        extra={"kappa": kappa, "lambda_k": lamk, "estimate": estimate.to_dict()},
    )


def cheng_classical_check(G: MeasuredGraph, spectrum, k: int):
    """``diam <= sqrt(2n(n+4)) k / sqrt(lambda_k)`` with the model's geometric diameter."""
    if G.model is None:
        raise ValueError("classical diameter check needs a model graph with known dimension")
    n = G.model.dim
    diam = G.model.geometric_diameter
    lamk = float(spectrum.eigenvalues[k])
    rhs = math.sqrt(2 * n * (n + 4)) * k / math.sqrt(lamk)
    return asserted(
        "cheng_classical",
        diam,
        rhs,
        constants={"sqrt(2n(n+4))": math.sqrt(2 * n * (n + 4))},
        note="lhs = geometric diameter of the flat model",
        model=_model_name(G),
        k=k,
        extra={"dimension": n, "lambda_k": lamk},
    )
