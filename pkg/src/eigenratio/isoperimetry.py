"""Sweep cuts, Cheeger constants and multi-way isoperimetric constants.

``h_k`` is the smallest achievable value of ``max_i phi(A_i)`` over ``k + 1``
pairwise disjoint sets of positive measure.  It is computed exactly on tiny
graphs and bounded from above by a spectral clustering heuristic otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .errors import EmptySet, H1NotExact, TooLargeForExact, ZeroFunction
from .graph_core import (
    CutCertificate,
    MeasuredGraph,
    as_function,
    as_subset,
    conductance,
    level_profile,
)
from .reports import (
    BUSER_LEDOUX,
    HIGHER_BUSER_LEDOUX,
    asserted,
    reported,
)

H1_EXACT_CAP = 16
HK_EXACT_CAP = 12
H1_VERIFY_CAP = 10
LLOYD_MAX_ITER = 100


@dataclass(frozen=True)
class Partition:
    sets: tuple
    conductances: tuple
    value: float

    @property
    def k(self) -> int:
        return len(self.sets) - 1

    def to_dict(self) -> dict:
        return {
            "sets": [list(s) for s in self.sets],
            "conductances": list(self.conductances),
            "value": self.value,
        }


def make_partition(G: MeasuredGraph, sets) -> Partition:
    """Validate disjoint nonempty sets and evaluate their conductances."""
    masks = [as_subset(G, s) for s in sets]
    seen = np.zeros(G.vertex_count, dtype=bool)
    for m in masks:
        if not m.any():
            raise EmptySet("partition contains an empty set")
        if np.any(seen & m):
            raise ValueError("partition sets overlap")
        seen |= m
    phis = tuple(conductance(G, m) for m in masks)
    # canonical order: by smallest member
    order = sorted(range(len(masks)), key=lambda i: int(np.flatnonzero(masks[i])[0]))
    return Partition(
        sets=tuple(tuple(int(v) for v in np.flatnonzero(masks[i])) for i in order),
        conductances=tuple(phis[i] for i in order),
        value=max(phis),
    )


def sweep_phi(G: MeasuredGraph, f):
    """``phi(f) = min_t phi({f > t})`` over ``t >= 0`` with a nonempty level set.

    Returns ``(certificate, phi)`` for the minimizing superlevel set.
    """
    f = as_function(G, f)
    if np.any(f < 0):
        raise ValueError("sweep_phi needs a nonnegative function")
    if not np.any(f > 0):
        raise ZeroFunction("sweep over the zero function")
    prof = level_profile(G, f)
    cand = np.flatnonzero(prof.levels > 0)
    phis = prof.boundaries[cand] / prof.masses[cand]
    best = int(cand[int(np.argmin(phis))])
    nxt = prof.levels[best + 1] if best + 1 < prof.levels.shape[0] else 0.0
    cert = CutCertificate.from_mask(G, prof.members(best), threshold=max(float(nxt), 0.0))
    return cert, cert.phi


def _subset_table(G: MeasuredGraph, count: int):
    """Membership bits, masses and boundaries of the subsets encoded by ``0..count-1``."""
    n = G.vertex_count
    codes = np.arange(count, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    masses = bits @ G.mu
    cross = bits[:, G.src] ^ bits[:, G.dst]
    boundaries = cross @ G.p
    return bits, masses, boundaries


def h1_exact(G: MeasuredGraph):
    """Exact Cheeger constant by enumerating the ``2^(n-1)`` bipartitions.

    On graphs with at most 10 vertices the result is cross-checked against
    the unrestricted enumeration over disjoint, not necessarily
    complementary, pairs.
    """
    n = G.vertex_count
    if n > H1_EXACT_CAP:
        raise TooLargeForExact(f"{n} vertices exceeds the exact cap of {H1_EXACT_CAP}")
    if n < 2:
        raise ValueError("h1 needs at least two vertices")
    # vertex n-1 always lies in the complement
    bits, masses, boundaries = _subset_table(G, 1 << (n - 1))
    bits, masses, boundaries = bits[1:], masses[1:], boundaries[1:]
    comp = (~bits) @ G.mu
    values = np.maximum(boundaries / masses, boundaries / comp)
    best = int(np.argmin(values))
    part = make_partition(G, [bits[best], ~bits[best]])
    if n <= H1_VERIFY_CAP:
        other, _ = hk_bruteforce(G, 1)
        if abs(other.value - part.value) > 1e-12 * max(1.0, part.value):
            raise RuntimeError(
                f"bipartition optimum {part.value!r} disagrees with pair enumeration {other.value!r}"
            )
    return part, part.value


def _max_packing(by_min, n, need):
    """Largest number (capped at ``need``) of pairwise disjoint family members.

    ``by_min[v]`` lists the family bitmasks whose lowest vertex is ``v``.
    Returns ``(count, chosen_masks)``.
    """
    memo = {}

    def best(v, used):
        if v == n:
            return 0, ()
        key = (v, used >> v)
        if key in memo:
            return memo[key]
        result = best(v + 1, used)
        if result[0] < need:
            for S in by_min[v]:
                if S & used:
                    continue
                cnt, chosen = best(v + 1, used | S)
                if cnt + 1 > result[0]:
                    result = (cnt + 1, (S,) + chosen)
                    if result[0] >= need:
                        break
        memo[key] = result
        return result

    return best(0, 0)


def _minimal_members(fam: np.ndarray, n: int) -> np.ndarray:
    # contains[m]: m contains some family member (superset closure)
    contains = fam.copy()
    codes = np.arange(fam.shape[0])
    for b in range(n):
        has = (codes >> b) & 1 == 1
        contains[has] |= contains[codes[has] ^ (1 << b)]
    proper = np.zeros_like(fam)
    for b in range(n):
        has = (codes >> b) & 1 == 1
        proper[has] |= contains[codes[has] ^ (1 << b)]
    return fam & ~proper


def hk_bruteforce(G: MeasuredGraph, k: int):
    """Exact ``h_k`` on graphs with at most 12 vertices.

    Every nonempty vertex subset is scored by its conductance.  ``h_k`` is
    the smallest level ``theta`` at which the sets with conductance at most
    ``theta`` contain ``k + 1`` pairwise disjoint members; the packing test
    is an exact dynamic program over vertices, restricted to
    inclusion-minimal sets.
    """
    n = G.vertex_count
    if n > HK_EXACT_CAP:
        raise TooLargeForExact(f"{n} vertices exceeds the exact cap of {HK_EXACT_CAP}")
    if k < 0 or k + 1 > n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")
    count = 1 << n
    _, masses, boundaries = _subset_table(G, count)
    phi = np.full(count, np.inf)
    phi[1:] = boundaries[1:] / masses[1:]
    levels = np.unique(phi[1:])
    lowbit = np.zeros(count, dtype=np.int64)
    codes = np.arange(count)
    for v in reversed(range(n)):
        lowbit[(codes >> v) & 1 == 1] = v

    def packing(theta):
        fam = phi <= theta
        fam[0] = False
        fam = _minimal_members(fam, n)
        by_min = [[] for _ in range(n)]
        for code in np.flatnonzero(fam):
            by_min[lowbit[code]].append(int(code))
        return _max_packing(by_min, n, k + 1)

    lo, hi = 0, levels.shape[0] - 1
    best = packing(levels[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        res = packing(levels[mid])
        if res[0] >= k + 1:
            hi, best = mid, res
        else:
            lo = mid + 1
    chosen = best[1][: k + 1]
    sets = [[v for v in range(n) if (S >> v) & 1] for S in chosen]
    part = make_partition(G, sets)
    return part, part.value


def _plateau_functions(G: MeasuredGraph, masks):
    out = []
    for m in masks:
        comp = np.flatnonzero(~m)
        f = np.zeros(G.vertex_count)
        if comp.size == 0:
            f[:] = 1.0
        else:
            d = dijkstra(G.hop_adjacency, directed=False, indices=comp, unweighted=True, min_only=True)
            f[m] = d[m]
            f /= f[m].max()
        out.append(f)
    return out


def disjoint_functions_from_partition(G: MeasuredGraph, partition: Partition):
    """One nonnegative function per set: hop distance to the complement, scaled to max 1."""
    masks = [as_subset(G, s) for s in partition.sets]
    return _plateau_functions(G, masks)


def hk_spectral_heuristic(G: MeasuredGraph, k: int, spectrum):
    """Upper bound on ``h_k`` from clustering the spectral embedding.

    Vertices are embedded by eigenfunctions ``1..k`` and split into ``k + 1``
    clusters by Lloyd iterations from farthest-point seeds (first seed
    vertex 0, ties to the lowest index).  Each cluster is then shrunk to its
    best sweep set under its plateau function, which keeps the sets disjoint
    and can only lower each conductance.
    """
    n = G.vertex_count
    if k < 1 or k + 1 > n:
        raise ValueError(f"need 1 <= k < n, got k={k}")
    if spectrum.eigenfunctions.shape[1] < k + 1:
        raise ValueError(f"spectrum has only {spectrum.eigenfunctions.shape[1]} eigenpairs")
    X = np.asarray(spectrum.eigenfunctions[:, 1 : k + 1], dtype=float)
    seeds = [0]
    dist = ((X - X[0]) ** 2).sum(axis=1)
    for _ in range(k):
        nxt = int(np.argmax(dist))
        seeds.append(nxt)
        dist = np.minimum(dist, ((X - X[nxt]) ** 2).sum(axis=1))
    centers = X[seeds].copy()
    labels = None
    for _ in range(LLOYD_MAX_ITER):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k + 1):
            members = labels == c
            if members.any():
                wts = G.mu[members]
                centers[c] = (wts[:, None] * X[members]).sum(axis=0) / wts.sum()
    labels = labels.copy()
    for c in range(k + 1):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k + 1)
        donor = int(np.argmax(sizes))
        members = np.flatnonzero(labels == donor)
        far = ((X[members] - centers[donor]) ** 2).sum(axis=1)
        labels[members[int(np.argmax(far))]] = c
    masks = [labels == c for c in range(k + 1)]
    refined = []
    for m, g in zip(masks, _plateau_functions(G, masks)):
        cert, _ = sweep_phi(G, g)
        refined.append(np.array(cert.inside, dtype=np.int64))
    part = make_partition(G, refined)
    return part, part.value


def h1_sweep_upper(G: MeasuredGraph, spectrum):
    """Best two-sided threshold cut of the first nontrivial eigenfunction.

    Returns ``(partition, value)`` with value ``max(phi(S), phi(S^c))``,
    an upper bound on ``h_1``.
    """
    f = np.asarray(spectrum.eigenfunctions[:, 1])
    prof = level_profile(G, f)
    m = prof.masses[:-1]
    b = prof.boundaries[:-1]
    comp = 1.0 - m
    vals = np.maximum(b / m, b / comp)
    j = int(np.argmin(vals))
    mask = prof.members(j)
    part = make_partition(G, [mask, ~mask])
    return part, part.value


def exact_h1(G: MeasuredGraph):
    """``(h1, provenance)`` for a flat model graph; raises :class:`H1NotExact` otherwise."""
    if G.model is None:
        raise H1NotExact("graph carries no model-space tag; curvature assumption unavailable")
    if G.vertex_count <= H1_EXACT_CAP:
        _, val = h1_exact(G)
        return val, "enumerated"
    if G.model.kind == "circle":
        return 4.0 / G.model.a, "closed form 4/a (half arcs)"
    raise H1NotExact(f"no exact h1 for a {G.model.kind} graph with {G.vertex_count} vertices")


def _model_name(G) -> str:
    if G.model is None:
        return "graph"
    m = G.model
    return f"{m.kind}(n={m.dim},a={m.a:g},N={'x'.join(str(c) for c in m.counts)})"


def buser_ledoux_check(G: MeasuredGraph, spectrum, h1: float = None):
    """``h_1 >= (e-1)/(sqrt(2) e) sqrt(lambda_1)`` on a flat model graph."""
    if h1 is None:
        h1, prov = exact_h1(G)
    else:
        if G.model is None:
            raise H1NotExact("lower-bound check needs a nonnegative-curvature model graph")
        prov = "supplied"
    lam1 = float(spectrum.eigenvalues[1])
    return asserted(
        "buser_ledoux",
        BUSER_LEDOUX * math.sqrt(lam1),
        h1,
        constants={"(e-1)/(sqrt(2)e)": BUSER_LEDOUX},
        note=f"lhs = c*sqrt(lambda_1), rhs = h1 ({prov})",
        model=_model_name(G),
        k=1,
        extra={"h1": h1, "lambda_1": lam1},
    )


def higher_buser_ledoux_check(G: MeasuredGraph, spectrum, k: int, h1: float = None):
    """``h_k >= h_1 >= (e-1)^2/(16 sqrt(2) e^2) sqrt(lambda_k)/k``."""
    if h1 is None:
        h1, prov = exact_h1(G)
    else:
        if G.model is None:
            raise H1NotExact("lower-bound check needs a nonnegative-curvature model graph")
        prov = "supplied"
    lamk = float(spectrum.eigenvalues[k])
    return asserted(
        "higher_buser_ledoux",
        HIGHER_BUSER_LEDOUX * math.sqrt(lamk) / k,
        h1,
        constants={"(e-1)^2/(16sqrt(2)e^2)": HIGHER_BUSER_LEDOUX},
        note=f"lhs = c*sqrt(lambda_k)/k, rhs = h1 ({prov}) <= h_k",
        model=_model_name(G),
        k=k,
        extra={"h1": h1, "lambda_k": lamk},
    )


def hk_ratio_check(G: MeasuredGraph, k: int, h1: float, hk_upper: float):
    """Empirical constant in ``h_k <= C k sqrt(log(1+k)) h_1``; reported, never asserted."""
    scale = k * math.sqrt(math.log(1.0 + k)) * h1
    return reported(
        "hk_ratio",
        hk_upper,
        scale,
        note="lhs = h_k upper bound, rhs = k sqrt(log(1+k)) h1; constant unspecified",
        model=_model_name(G),
        k=k,
        extra={"empirical_C": hk_upper / scale},
    )


def shifted_cheeger_report(G: MeasuredGraph, spectrum, k: int, hk_upper: float):
    lam2k = float(spectrum.eigenvalues[2 * k])
    scale = math.sqrt(lam2k * math.log(1.0 + k))
    return reported(
        "shifted_higher_cheeger",
        hk_upper,
        scale,
        note="lhs = h_k upper bound, rhs = sqrt(lambda_2k log(1+k)); constant unspecified",
        model=_model_name(G),
        k=k,
        extra={"empirical_C1": hk_upper / scale},
    )
