"""Flat model spaces: circles and thin tori, discretized and exact.

The thin torus of dimension ``n >= 2`` and parameter ``a`` in (0, 1) has
sides ``(a, ..., a, a**-(n-1))`` and volume one.  Its Laplace spectrum is
``4 pi^2 |g|^2`` over the dual lattice ``(Z/a)^(n-1) x a^(n-1) Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BadResolution, EnumerationOverflow, TooLarge
from .graph_core import MeasuredGraph, ModelInfo, build_graph

DEFAULT_VERTEX_CAP = 200_000
DEFAULT_BOX_CAP = 5_000_000
MIN_POINTS_PER_DIM = 8


@dataclass(frozen=True)
class TorusSpec:
    """Thin torus parameters.

    ``resolution`` is either points per unit length (a float; each dimension
    then gets ``max(8, round(resolution * side))`` points) or an explicit
    tuple of per-dimension counts.
    """

    n: int
    a: float
    resolution: Union[float, Sequence[int]] = 32.0

    @property
    def sides(self) -> tuple:
        return torus_sides(self.n, self.a)

    @property
    def counts(self) -> tuple:
        if isinstance(self.resolution, (int, float)) and not isinstance(self.resolution, bool):
            return tuple(max(MIN_POINTS_PER_DIM, int(round(self.resolution * s))) for s in self.sides)
        counts = tuple(int(c) for c in self.resolution)
        if len(counts) != self.n:
            raise BadResolution(f"need {self.n} per-dimension counts, got {len(counts)}")
        return counts


@dataclass(frozen=True)
class ExactSpectrum:
    """Closed-form eigenvalues with multiplicity; optional lattice provenance."""

    eigenvalues: np.ndarray
    lattice_points: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return int(self.eigenvalues.shape[0]) - 1


def torus_sides(n: int, a: float) -> tuple:
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if a <= 0:
        raise ValueError("a must be positive")
    if n == 1:
        return (float(a),)
    return tuple([float(a)] * (n - 1) + [float(a) ** (-(n - 1))])


def _grid_graph(kind: str, a: float, sides: tuple, counts: tuple, cap: int) -> MeasuredGraph:
    if any(c < 3 for c in counts):
        raise BadResolution(f"every dimension needs at least 3 points, got {counts}")
    total = int(np.prod(counts))
    if total > cap:
        raise TooLarge(f"{total} vertices exceeds the cap of {cap}")
    dim = len(counts)
    h = [s / c for s, c in zip(sides, counts)]
    mu_val = 1.0 / total
    density = 1.0 / float(np.prod(sides))
    idx = np.arange(total).reshape(counts)
    src_all, dst_all, w_all, p_all, l_all = [], [], [], [], []
    for i in range(dim):
        nbr = np.roll(idx, -1, axis=i)
        src = idx.ravel()
        dst = nbr.ravel()
        m = src.shape[0]
        w = mu_val / h[i] ** 2
        p = density * float(np.prod([h[j] for j in range(dim) if j != i]))
        src_all.append(src)
        dst_all.append(dst)
        w_all.append(np.full(m, w))
        p_all.append(np.full(m, p))
        l_all.append(np.full(m, h[i]))
    src = np.concatenate(src_all)
    dst = np.concatenate(dst_all)
    edges = zip(src.tolist(), dst.tolist(), np.concatenate(w_all).tolist(),
                np.concatenate(p_all).tolist(), np.concatenate(l_all).tolist())
    model = ModelInfo(kind=kind, dim=dim, a=float(a), sides=tuple(sides), counts=tuple(counts))
    return build_graph(total, np.full(total, mu_val), edges, model=model)


def circle_graph(a: float, N: int) -> MeasuredGraph:
    """N-cycle discretizing the circle of length ``a``.

    Masses ``1/N``, energy weight ``N/a^2``, perimeter weight ``1/a``,
    edge length ``a/N``.
    """
    if a <= 0:
        raise ValueError("circle length must be positive")
    if N < 3:
        raise BadResolution(f"circle needs at least 3 points, got {N}")
    return _grid_graph("circle", a, (float(a),), (int(N),), DEFAULT_VERTEX_CAP)


def torus_graph(spec: TorusSpec, cap: int = DEFAULT_VERTEX_CAP) -> MeasuredGraph:
    counts = spec.counts
    if spec.n == 1:
        return circle_graph(spec.a, counts[0])
    if not 0 < spec.a <= 1:
        raise ValueError("thin torus parameter a must lie in (0, 1]")
    return _grid_graph("torus", spec.a, spec.sides, counts, cap)


def grid_exact_spectrum(model: ModelInfo, K: int) -> np.ndarray:
    """Exact spectrum of a grid graph: Kronecker sum of cycle spectra."""
    total = None
    for side, count in zip(model.sides, model.counts):
        h = side / count
        j = np.arange(count)
        vals = 4.0 / h**2 * np.sin(np.pi * j / count) ** 2
        total = vals if total is None else np.add.outer(total, vals).ravel()
    total = np.sort(total)
    if K + 1 > total.shape[0]:
        raise ValueError("K exceeds the number of grid eigenvalues")
    return total[: K + 1]


def circle_exact_spectrum(a: float, K: int) -> ExactSpectrum:
    if a <= 0:
        raise ValueError("circle length must be positive")
    j = np.arange(K + 1)
    m = (j + 1) // 2
    sign = np.where(j % 2 == 1, 1, -1) * (m > 0)
    vals = 4.0 * np.pi**2 * m.astype(float) ** 2 / a**2
    return ExactSpectrum(eigenvalues=vals, lattice_points=(sign * m)[:, None])


def _dual_weights(n: int, a: float) -> np.ndarray:
    return np.array([1.0 / a**2] * (n - 1) + [a ** (2 * (n - 1))])


def torus_exact_spectrum(n: int, a: float, K: int, box_cap: int = DEFAULT_BOX_CAP) -> ExactSpectrum:
    """The ``K + 1`` smallest eigenvalues of the thin torus, with multiplicity.

    All dual lattice points with ``|g|^2 <= R^2`` are enumerated (the ball
    is covered by the box ``|m_i| <= R / sqrt(c_i)``), and ``R^2`` is
    quadrupled until the ball holds at least ``K + 1`` points.  Every point
    outside the ball has a strictly larger value, so the ``K + 1`` smallest
    are exact.
    """
    if n < 2:
        raise ValueError("use circle_exact_spectrum for n = 1")
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    c = _dual_weights(n, a)
    r2 = float(c.min()) * max(K, 1)
    while True:
        bounds = np.floor(np.sqrt(r2 / c)).astype(np.int64)
        box = int(np.prod(2 * bounds + 1))
        if box > box_cap:
            raise EnumerationOverflow(f"enumeration box of {box} points exceeds {box_cap}")
        axes = [np.arange(-b, b + 1) for b in bounds]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        q = (pts.astype(float) ** 2) @ c
        inside = q <= r2
        if int(inside.sum()) >= K + 1:
            pts, q = pts[inside], q[inside]
            order = np.lexsort(tuple(pts[:, i] for i in reversed(range(n))) + (q,))
            order = order[: K + 1]
            vals = 4.0 * np.pi**2 * q[order]
            return ExactSpectrum(eigenvalues=vals, lattice_points=pts[order])
        r2 *= 4.0


def _stable_floor(x: float) -> int:
    # 1/0.1**2 evaluates to 99.99999999999999; snap near-integers first
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def ratio_witness(n: int, a: float):
    """Index ``k = 2 floor(a^-n) + 1`` with ``lambda_k / lambda_1 = a^(-2n) >= k^2 / 9``."""
    if n < 2 or not 0 < a < 1:
        raise ValueError("need n >= 2 and 0 < a < 1")
    k = 2 * _stable_floor(a ** (-n)) + 1
    ratio = a ** (-2 * n)
    lower = k * k / 9.0
    assert ratio >= lower, (n, a, ratio, lower)
    return k, ratio, lower
