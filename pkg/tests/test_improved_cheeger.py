import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from conftest import cycle4, random_connected_graph
from eigenratio.errors import DegenerateFunction, NegativeInput, NotDisjoint
from eigenratio.graph_core import dirichlet_energy, l2_norm_sq
from eigenratio.improved_cheeger import (
    build_thresholds,
    eta,
    functional_certificate,
    h_transform,
    higher_order_certificate,
    quantize,
    same_sweep_family,
    segment_mass,
    segment_mass_curve,
    step_error_bound_check,
)
from eigenratio.isoperimetry import sweep_phi
from eigenratio.model_spaces import TorusSpec, circle_graph, torus_graph
from eigenratio.reports import PASS
from eigenratio.spectra import canonical_eigenfunction, compute_spectrum, eigenfunction_split


def positive_eigenpart(G, K):
    S = compute_spectrum(G, K, "dense")
    f = canonical_eigenfunction(G, S, 1)
    return S, eigenfunction_split(G, f, S.eigenvalues[1])[0]


def test_quantize_examples():
    assert quantize((0, 1, 2), 0.4) == 0
    assert quantize((0, 1), 0.5) == 0
    assert quantize((0, 1, 2), 1.7) == 2
    assert quantize((0, 1, 2), 5.0) == 2
    assert np.array_equal(quantize((0, 1, 2), np.array([0.4, 1.5, 1.51])), [0, 1, 2])


def test_eta_examples():
    assert eta((0, 2), 1) == 1
    assert eta((0, 2), 0.5) == 0.5
    assert eta((0, 2), 2) == 0 and eta((0, 2), 0) == 0


def test_h_transform_examples():
    assert h_transform((0, 3.0), 3.0) == 9.0 / 4
    assert h_transform((0, 2), 0) == 0
    assert h_transform((0, 2), 1) == 0.5
    with pytest.raises(NegativeInput):
        h_transform((0, 2), -0.1)


def _sorted_thresholds(draw_vals, T):
    inner = sorted(draw_vals)
    return np.array([0.0] + [x * T for x in inner] + [T])


threshold_cases = st.integers(1, 6).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.lists(st.floats(0, 1), min_size=2 * k - 1, max_size=2 * k - 1),
        st.floats(0.01, 50),
        st.floats(0, 1),
    )
)


@settings(max_examples=1000, deadline=None)
@given(threshold_cases)
def test_h_lower_bound(case):
    k, inner, T, frac = case
    t = _sorted_thresholds(inner, T)
    v = frac * T
    assert h_transform(t, v) >= v * v / (8 * k) * (1 - 1e-12)


def _h_quadrature(t, v, m=20001):
    x = np.linspace(0, v, m)
    return trapezoid(eta(t, x), x)


@settings(max_examples=200, deadline=None)
@given(threshold_cases)
def test_h_closed_form_against_quadrature(case):
    k, inner, T, frac = case
    t = _sorted_thresholds(inner, T)
    v = frac * T * 1.3
    assert math.isclose(h_transform(t, v), _h_quadrature(t, v), rel_tol=1e-6, abs_tol=1e-9 * T * T)


@settings(max_examples=300, deadline=None)
@given(threshold_cases)
def test_quantizer_idempotent_and_h_monotone(case):
    k, inner, T, frac = case
    t = _sorted_thresholds(inner, T)
    assert np.array_equal(quantize(t, t), t)
    assert np.all(eta(t, t) == 0)
    xs = np.sort(np.random.default_rng(int(frac * 1e6)).random(50) * T * 1.2)
    assert np.all(np.diff(h_transform(t, xs)) >= 0)


@settings(max_examples=500, deadline=None)
@given(threshold_cases)
def test_cauchy_schwarz_pointwise(case):
    k, inner, T, frac = case
    t = _sorted_thresholds(inner, T)
    v = frac * T
    i = int(np.searchsorted(t, v, side="right") - 1)
    steps = np.diff(t[: i + 1])
    rhs = 2 * k * np.sum(steps**2) + 2 * k * (v - t[i]) ** 2
    assert v * v <= rhs * (1 + 1e-12) + 1e-300


def test_build_thresholds_cycle4(c4):
    f = np.array([1.0, 1, 0, 0])
    approx = build_thresholds(c4, f, 1, 8.0)
    assert approx.C0 == 0.25
    assert approx.thresholds.tolist() == [0, 1, 1]
    assert np.array_equal(approx.gk, f)
    assert approx.error_sq == 0.0
    rep = step_error_bound_check(c4, f, approx, 8.0)
    assert rep.status == PASS and rep.lhs == 0 and rep.rhs == 0.5


def test_build_thresholds_errors(c4):
    with pytest.raises(DegenerateFunction):
        build_thresholds(c4, [1, 1, 1, 1], 1, 8.0)
    with pytest.raises(NegativeInput):
        build_thresholds(c4, [1, -1, 0, 0], 1, 8.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_few_values_are_reproduced_exactly(seed, k):
    r = np.random.default_rng(seed)
    G = random_connected_graph(r, 15)
    vals = np.concatenate([[0.0], np.sort(r.random(2 * k))])
    f = r.choice(vals, 15)
    if np.ptp(f) == 0:
        return
    approx = build_thresholds(G, f, k, float(r.uniform(0.1, 10)))
    assert np.array_equal(approx.gk, f)
    assert approx.error_sq == 0.0


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_step_approximation_invariants(seed, k):
    r = np.random.default_rng(seed)
    G = random_connected_graph(r, int(r.integers(5, 40)))
    f = r.random(G.vertex_count) * (r.random(G.vertex_count) < 0.8)
    if np.ptp(f) == 0:
        return
    approx = build_thresholds(G, f, k, float(r.uniform(0.05, 20)))
    t = approx.thresholds
    assert t[0] == 0 and t[-1] == f.max() and len(t) == 2 * k + 1
    assert np.all(np.diff(t) >= 0)
    assert np.all(np.isin(approx.gk, t))
    assert approx.overshoot >= 0
    assert np.all(approx.segment_masses <= approx.C0 + approx.overshoot + 1e-15)
    assert math.isclose(l2_norm_sq(G, f - approx.gk), approx.error_sq, rel_tol=1e-12, abs_tol=1e-15)
    for lo, hi, m in zip(t, t[1:], approx.segment_masses):
        assert math.isclose(segment_mass(f, G.mu, lo, hi), m, rel_tol=1e-12, abs_tol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_segment_mass_curve_matches_direct(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 60))
    f = np.round(r.random(n) * 10, int(r.integers(0, 3)))
    mu = r.random(n) + 0.1
    mu /= mu.sum()
    lo = float(r.choice(np.concatenate([[0.0], f])))
    cand = np.unique(f[f > lo])
    curve = segment_mass_curve(f, mu, lo, cand)
    direct = np.array([segment_mass(f, mu, lo, c) for c in cand])
    assert np.allclose(curve, direct, rtol=1e-12, atol=1e-12)


def test_certificate_cycle4(c4):
    cert = functional_certificate(c4, [1, 1, 0, 0], 1, 8.0)
    assert cert.phi_f == 4.0
    assert math.isclose(cert.rhs, 16.0, rel_tol=1e-15)
    assert cert.passed
    assert cert.witness.inside == (0, 1)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_sweep_family_preserved_by_h(seed, k):
    r = np.random.default_rng(seed)
    G = random_connected_graph(r, int(r.integers(4, 30)))
    f = np.round(r.random(G.vertex_count) * 5, 1)
    if np.ptp(f) == 0 or not np.any(f > 0):
        return
    approx = build_thresholds(G, f, k, 1.0)
    h = h_transform(approx.thresholds, f)
    if not np.any(h > 0):
        return
    assert same_sweep_family(G, f, h) == same_sweep_family(G, h, f)
    # h is strictly increasing on [0, inf) so the families coincide
    assert same_sweep_family(G, f, h)
    assert sweep_phi(G, h)[1] == sweep_phi(G, f)[1]


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_torus_eigenfunction_certificates(k):
    G = torus_graph(TorusSpec(2, 0.5, (16, 64)))
    S, f0 = positive_eigenpart(G, 8)
    cert = functional_certificate(G, f0, k, S)
    assert cert.passed
    assert cert.report().status == PASS


def test_circle_step_bound_k2():
    G = circle_graph(2 * math.pi, 256)
    S, f0 = positive_eigenpart(G, 4)
    approx = build_thresholds(G, f0, 2, S.eigenvalues[2])
    lhs = l2_norm_sq(G, f0 - approx.gk)
    assert lhs <= 2 * dirichlet_energy(G, f0) / S.eigenvalues[2] + 4 * approx.overshoot
    assert step_error_bound_check(G, f0, approx, S.eigenvalues[2]).status == PASS


@pytest.mark.parametrize("kind", ["circle", "torus"])
def test_random_functions_on_model_graphs(kind):
    r = np.random.default_rng(99)
    G = circle_graph(1.0, 24) if kind == "circle" else torus_graph(TorusSpec(2, 0.6, (4, 8)))
    S = compute_spectrum(G, 8, "dense")
    for _ in range(100):
        f = r.random(G.vertex_count) ** 3 * (r.random(G.vertex_count) < 0.6)
        if not np.any(f > 0):
            continue
        for k in range(1, 9):
            assert functional_certificate(G, f, k, S).passed


def test_higher_order_cycle4(c4):
    S = compute_spectrum(c4, 3)
    rep = higher_order_certificate(c4, 1, 1, [[1, 0, 0, 0], [0, 0, 1, 0]], S)
    assert rep.lhs == 8.0
    assert rep.status == "REPORTED"
    with pytest.raises(NotDisjoint):
        higher_order_certificate(c4, 1, 1, [[1, 1, 0, 0], [0, 1, 1, 0]], S)


def test_higher_order_reduces_to_single_certificate(c4):
    S = compute_spectrum(c4, 3)
    f0, f1 = eigenfunction_split(c4, [1, 0, -1, 0])
    rep = higher_order_certificate(c4, 1, 1, [f0, f1], S)
    single = max(functional_certificate(c4, g, 1, S).phi_f for g in (f0, f1))
    assert rep.lhs == single
