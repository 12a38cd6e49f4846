"""Step-function approximation and the improved Cheeger certificate.

Given a nonnegative function ``f`` and an index ``k``, thresholds
``0 = t_0 <= ... <= t_2k = max f`` are chosen greedily so that each segment
``(t_{i-1}, t_i]`` carries quantization mass about ``C0 = E(f) / (k lambda_k)``.
Quantizing ``f`` to the nearest threshold gives ``g_k`` with
``||f - g_k||^2 <= 2 E(f) / lambda_k``, and then

    phi(f) <= 8 k sqrt(R(f)) ||f - g_k|| / ||f|| <= 8 sqrt(2) k R(f) / sqrt(lambda_k).

On a graph the segment masses jump at vertex values, so the barrier is
overshot by a recorded amount instead of being hit exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateFunction, NegativeInput, NotDisjoint, ZeroFunction
from .graph_core import (
    CutCertificate,
    MeasuredGraph,
    as_function,
    dirichlet_energy,
    l2_norm_sq,
    level_profile,
    rayleigh_quotient,
)
from .isoperimetry import _model_name, sweep_phi
from .reports import IMPROVED_CHEEGER, asserted, reported, within


def _thresholds(thresholds) -> np.ndarray:
    t = np.asarray(thresholds, dtype=np.float64).ravel()
    if t.size == 0:
        raise ValueError("need at least one threshold")
    if np.any(np.diff(t) < 0):
        raise ValueError("thresholds must be sorted")
    return t


def quantize(thresholds, x):
    """Nearest threshold to ``x``; an exact tie goes to the smaller one."""
    t = _thresholds(thresholds)
    xa = np.asarray(x, dtype=np.float64)
    idx = np.searchsorted(t, xa, side="left")
    lo = t[np.clip(idx - 1, 0, t.size - 1)]
    hi = t[np.clip(idx, 0, t.size - 1)]
    out = np.where(hi - xa < xa - lo, hi, lo)
    out = np.where(idx == 0, t[0], out)
    out = np.where(idx >= t.size, t[-1], out)
    return float(out) if out.ndim == 0 else out


def eta(thresholds, x):
    """Distance from ``x`` to the nearest threshold."""
    return np.abs(np.asarray(x, dtype=np.float64) - quantize(thresholds, x)) if np.ndim(x) else abs(
        float(x) - quantize(thresholds, x))


def h_transform(thresholds, v):
    """``int_0^v eta(t) dt`` in closed form.

    ``eta`` is a tent of height ``d/2`` on each segment of length ``d`` and
    grows linearly past the last threshold, so the integral is a sum of
    ``d^2/4`` over full segments plus a quadratic piece.
    """
    t = _thresholds(thresholds)
    if t[0] != 0.0:
        raise ValueError("thresholds must start at 0")
    va = np.asarray(v, dtype=np.float64)
    if np.any(va < 0):
        raise NegativeInput("h_transform is defined for v >= 0")
    d = np.diff(t)
    full = np.concatenate([[0.0], np.cumsum(d * d / 4.0)])
    i = np.searchsorted(t, va, side="right") - 1
    u = va - t[i]
    inner = i < t.size - 1
    di = np.where(inner, d[np.minimum(i, d.size - 1)] if d.size else 0.0, 0.0)
    partial = np.where(
        inner,
        np.where(u <= di / 2, u * u / 2, di * di / 4 - (di - u) ** 2 / 2),
        u * u / 2,
    )
    out = full[i] + partial
    return float(out) if out.ndim == 0 else out


@dataclass
class StepApproximation:
    thresholds: np.ndarray
    gk: np.ndarray
    segment_masses: np.ndarray
    C0: float
    overshoot: float
    k: int
    lambda_k: float
    energy: float
    truncated: bool = False

    @property
    def error_sq(self) -> float:
        return float(np.sum(self.segment_masses))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda_k": self.lambda_k,
            "energy": self.energy,
            "C0": self.C0,
            "thresholds": self.thresholds.tolist(),
            "segment_masses": self.segment_masses.tolist(),
            "overshoot": self.overshoot,
            "truncated": self.truncated,
        }


def segment_mass(f, mu, lo: float, hi: float) -> float:
    """``sum mu |f - psi_{lo,hi}(f)|^2`` over vertices with ``lo < f <= hi``."""
    sel = (f > lo) & (f <= hi)
    x = f[sel]
    # tie at the midpoint goes to lo; both distances agree there
    dist = np.where(hi - x < x - lo, hi - x, x - lo)
    return float(np.dot(mu[sel], dist * dist))


def segment_mass_curve(f, mu, lo: float, candidates) -> np.ndarray:
    """Segment masses for every upper end in ``candidates`` from running sums.

    Vertices are sorted once; with prefix sums of ``mu``, ``mu f`` and
    ``mu f^2`` each candidate costs two binary searches.
    """
    order = np.argsort(f, kind="stable")
    fs = f[order] - lo
    ms = mu[order]
    P0 = np.concatenate([[0.0], np.cumsum(ms)])
    P1 = np.concatenate([[0.0], np.cumsum(ms * fs)])
    P2 = np.concatenate([[0.0], np.cumsum(ms * fs * fs)])
    c = np.asarray(candidates, dtype=float) - lo
    start = np.searchsorted(fs, 0.0, side="right")
    mid = np.searchsorted(fs, c / 2, side="right")
    end = np.searchsorted(fs, c, side="right")
    lower = P2[mid] - P2[start]
    s0, s1, s2 = P0[end] - P0[mid], P1[end] - P1[mid], P2[end] - P2[mid]
    upper = c * c * s0 - 2 * c * s1 + s2
    return lower + np.maximum(upper, 0.0)


def build_thresholds(G: MeasuredGraph, f, k: int, lambda_k: float) -> StepApproximation:
    """Greedy barrier construction of ``t_0 .. t_2k``.

    ``t_i`` is the smallest value of ``f`` above ``t_{i-1}`` whose segment
    mass reaches ``C0``, or ``max f`` if none does.  When ``f`` takes at most
    ``2k + 1`` values (counting 0) those values are the thresholds and
    ``g_k = f``.  The last threshold is
    always ``max f``; if the barrier was already reached earlier in that
    final segment the approximation is flagged ``truncated`` and the excess
    shows up in ``overshoot``.
    """
    f = as_function(G, f)
    if np.any(f < 0):
        raise NegativeInput("build_thresholds needs a nonnegative function")
    if k < 1:
        raise ValueError("k must be at least 1")
    if not lambda_k > 0:
        raise ValueError("lambda_k must be positive")
    if np.ptp(f) == 0:
        raise DegenerateFunction("f is constant")
    mu = np.asarray(G.mu)
    E = dirichlet_energy(G, f)
    C0 = E / (k * lambda_k)
    T = float(f.max())
    values = np.unique(f)
    levels = np.union1d(values, [0.0])
    if levels.size <= 2 * k + 1:
        # enough thresholds for every value: exact, and every segment mass is 0
        t = np.concatenate([levels, np.full(2 * k + 1 - levels.size, T)])
        return StepApproximation(
            thresholds=t,
            gk=f.copy(),
            segment_masses=np.zeros(2 * k),
            C0=C0,
            overshoot=0.0,
            k=k,
            lambda_k=float(lambda_k),
            energy=E,
        )
    t = [0.0]
    masses = []
    truncated = False
    for i in range(1, 2 * k + 1):
        a = t[-1]
        cand = values[values > a]
        if cand.size == 0:
            t.append(T)
            masses.append(0.0)
            continue
        curve = segment_mass_curve(f, mu, a, cand)
        hit = np.flatnonzero(curve >= C0)
        j = int(hit[0]) if hit.size else None
        # settle borderline decisions with direct sums
        if j is not None and segment_mass(f, mu, a, cand[j]) < C0:
            j = j + 1 if j + 1 < cand.size else None
        if j is not None and j > 0 and segment_mass(f, mu, a, cand[j - 1]) >= C0:
            j -= 1
        if i == 2 * k:
            truncated = j is not None and cand[j] < T
            nxt = T
        else:
            nxt = float(cand[j]) if j is not None else T
        t.append(nxt)
        masses.append(segment_mass(f, mu, a, nxt))
    thresholds = np.array(t)
    masses = np.array(masses)
    gk = quantize(thresholds, f)
    overshoot = max(0.0, float(masses.max()) - C0)
    return StepApproximation(
        thresholds=thresholds,
        gk=np.asarray(gk, dtype=float),
        segment_masses=masses,
        C0=C0,
        overshoot=overshoot,
        k=k,
        lambda_k=float(lambda_k),
        energy=E,
        truncated=truncated,
    )


def step_error_bound_check(G: MeasuredGraph, f, approx: StepApproximation, lambda_k: float):
    """``||f - g_k||^2 <= 2 E(f)/lambda_k``, plus the discrete slack ``2k * overshoot``."""
    f = as_function(G, f)
    err = l2_norm_sq(G, f - approx.gk)
    E = dirichlet_energy(G, f)
    base = 2.0 * E / lambda_k
    slack = 2 * approx.k * approx.overshoot
    return asserted(
        "step_approximation",
        err,
        base + slack,
        note="rhs = 2E(f)/lambda_k + 2k*overshoot",
        k=approx.k,
        model=_model_name(G),
        extra={
            "continuum_rhs": base,
            "discrete_slack": slack,
            "overshoot": approx.overshoot,
            "strict_pass": within(err, base),
            "truncated": approx.truncated,
        },
    )


@dataclass
class ImprovedCheegerCertificate:
    k: int
    phi_f: float
    rayleigh: float
    lambda_k: float
    rhs: float
    witness: CutCertificate
    approx: Optional[StepApproximation]
    step_error: float
    approx_rhs: float
    h_values: np.ndarray = field(repr=False, default=None)
    h_phi: float = float("nan")

    @property
    def passed(self) -> bool:
        return within(self.phi_f, self.rhs)

    @property
    def approx_passed(self) -> bool:
        return within(self.phi_f, self.approx_rhs)

    def report(self, model: str = ""):
        return asserted(
            "improved_cheeger",
            self.phi_f,
            self.rhs,
            constants={"8*sqrt(2)": IMPROVED_CHEEGER},
            note="phi(f) <= 8 sqrt(2) k R(f) / sqrt(lambda_k)",
            model=model,
            k=self.k,
            extra={"certificate": self.to_dict()},
        )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "phi_f": self.phi_f,
            "rayleigh": self.rayleigh,
            "lambda_k": self.lambda_k,
            "rhs": self.rhs,
            "passed": self.passed,
            "witness": self.witness.to_dict(),
            "step_error": self.step_error,
            "approx_rhs": self.approx_rhs,
            "approx_passed": self.approx_passed,
            "h_phi": self.h_phi,
            "approximation": None if self.approx is None else self.approx.to_dict(),
        }


def _lambda(spectrum, k: int) -> float:
    if isinstance(spectrum, (int, float)):
        return float(spectrum)
    return float(spectrum.eigenvalues[k])


def functional_certificate(G: MeasuredGraph, f, k: int, spectrum) -> ImprovedCheegerCertificate:
    """Certify ``phi(f) <= 8 sqrt(2) k R(f) / sqrt(lambda_k)`` for one function.

    ``spectrum`` may be a spectrum object (``lambda_k`` is read from it) or
    the number ``lambda_k`` itself.
    """
    f = as_function(G, f)
    if np.any(f < 0):
        raise NegativeInput("certificate needs a nonnegative function")
    if not np.any(f > 0):
        raise ZeroFunction("certificate for the zero function")
    lam = _lambda(spectrum, k)
    if not lam > 0:
        raise ValueError(f"lambda_{k} must be positive")
    witness, phi = sweep_phi(G, f)
    R = rayleigh_quotient(G, f)
    rhs = IMPROVED_CHEEGER * k * R / math.sqrt(lam)
    norm = math.sqrt(l2_norm_sq(G, f))
    if np.ptp(f) == 0:
        approx, err, h_vals, h_phi = None, 0.0, None, phi
    else:
        approx = build_thresholds(G, f, k, lam)
        err = math.sqrt(l2_norm_sq(G, f - approx.gk))
        h_vals = h_transform(approx.thresholds, f)
        if np.any(h_vals > 0):
            _, h_phi = sweep_phi(G, h_vals)
        else:
            h_phi = float("nan")
    approx_rhs = 8.0 * k * math.sqrt(R) * err / norm
    return ImprovedCheegerCertificate(
        k=k,
        phi_f=phi,
        rayleigh=R,
        lambda_k=lam,
        rhs=rhs,
        witness=witness,
        approx=approx,
        step_error=err,
        approx_rhs=approx_rhs,
        h_values=h_vals,
        h_phi=h_phi,
    )


def same_sweep_family(G: MeasuredGraph, f, g) -> bool:
    """True when ``f`` and ``g`` induce identical superlevel set families."""
    pf, pg = level_profile(G, f), level_profile(G, g)
    return np.array_equal(pf.group, pg.group)


def higher_order_certificate(G: MeasuredGraph, k: int, l: int, functions, spectrum):
    """Upper bound ``h_k <= max_i phi(f_i)`` from disjointly supported functions.

    Each ``f_i`` is certified with index ``l``.  The result is compared with
    ``l k^6 lambda_k / sqrt(lambda_l)``; the multiplicative constant is not
    known, so the ratio is reported as an empirical constant.
    """
    fs = [as_function(G, f) for f in functions]
    if len(fs) != k + 1:
        raise ValueError(f"need {k + 1} functions, got {len(fs)}")
    support = np.zeros(G.vertex_count, dtype=bool)
    for f in fs:
        s = f != 0
        if np.any(support & s):
            raise NotDisjoint("functions have overlapping supports")
        support |= s
    certs = [functional_certificate(G, f, l, spectrum) for f in fs]
    hk_upper = max(c.phi_f for c in certs)
    lamk = _lambda(spectrum, k)
    laml = _lambda(spectrum, l)
    scale = l * k**6 * lamk / math.sqrt(laml)
    return reported(
        "improved_higher_order_cheeger",
        hk_upper,
        scale,
        note="lhs = max_i phi(f_i) >= h_k, rhs = l k^6 lambda_k / sqrt(lambda_l); constant unspecified",
        model=_model_name(G),
        k=k,
        extra={
            "l": l,
            "empirical_C": hk_upper / scale,
            "certificates_pass": [c.passed for c in certs],
            "phis": [c.phi_f for c in certs],
            "witness_sets": [list(c.witness.inside) for c in certs],
        },
    )
