"""Low end of the spectrum of ``L f = lambda M f`` with ``M = diag(mu)``.

Two solvers are provided.  The dense path hands the symmetrized matrix
``M^{-1/2} L M^{-1/2}`` to LAPACK and is the reference.  The iterative path
runs Lanczos with full reorthogonalization on the shift-inverted symmetrized
operator, locking converged vectors and restarting from a fresh seeded vector
until no eigenvector below the requested level remains, so repeated
eigenvalues (circle and torus models) come out with full multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvergenceFailure, KTooLarge, NotAnEigenfunction, OneSidedFunction
from .graph_core import MeasuredGraph, as_function, rayleigh_quotient

DENSE_CUTOFF = 1500
ITER_TOL = 1e-9
LANCZOS_SEED = 20140117


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues ``lambda_0 <= ... <= lambda_K`` and mu-orthonormal eigenfunctions.

    ``eigenfunctions[:, j]`` belongs to ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    method: str
    residuals: np.ndarray

    @property
    def K(self) -> int:
        return int(self.eigenvalues.shape[0]) - 1

    def eigenfunction(self, j: int) -> np.ndarray:
        return self.eigenfunctions[:, j]


def symmetrized_operator(G: MeasuredGraph) -> sp.csr_matrix:
    s = 1.0 / np.sqrt(G.mu)
    D = sp.diags(s)
    return (D @ G.laplacian @ D).tocsr()


def _operator_scale(A) -> float:
    # Gershgorin bound on the spectral radius
    return float(max(np.abs(A).sum(axis=1).max(), 1e-300))


def _normalize_signs(V: np.ndarray) -> np.ndarray:
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            V[:, j] = -col
    return V


def _dense(A: sp.csr_matrix, K: int):
    vals, vecs = sla.eigh(A.toarray(), subset_by_index=[0, K])
    return vals, vecs


def _lanczos_run(solve, v0, locked, max_steps, tol, want):
    """One Lanczos pass on the inverse operator, orthogonal to ``locked``.

    Returns Ritz values (of the inverse) in decreasing order, Ritz vectors and
    the number of operator applications used.
    """
    n = v0.shape[0]
    Q = np.zeros((n, max_steps + 1))
    alphas, betas = [], []
    q = v0
    Q[:, 0] = q
    steps = 0
    theta = s = None
    for j in range(max_steps):
        w = solve(Q[:, j])
        steps += 1
        alpha = float(Q[:, j] @ w)
        w = w - alpha * Q[:, j]
        if j > 0:
            w = w - betas[-1] * Q[:, j - 1]
        for _ in range(2):
            if locked.shape[1]:
                w -= locked @ (locked.T @ w)
            w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        theta, s = sla.eigh_tridiagonal(np.array(alphas), np.array(betas)) if betas else (
            np.array(alphas), np.ones((1, 1)))
        order = np.argsort(theta)[::-1]
        theta, s = theta[order], s[:, order]
        est = np.abs(beta * s[-1, :])
        exhausted = beta <= 1e-12 * max(abs(theta[0]), 1e-300)
        if exhausted or j + 1 == max_steps:
            break
        top = min(want, len(theta))
        if j >= 3 and np.all(est[:top] <= tol * np.abs(theta[:top])):
            break
        betas.append(beta)
        Q[:, j + 1] = w / beta
    m = len(alphas)
    return theta, Q[:, :m] @ s, steps


def _iterative(A: sp.csr_matrix, K: int, seed: int = LANCZOS_SEED, tol: float = ITER_TOL):
    n = A.shape[0]
    scale = _operator_scale(A)
    sigma = 1e-6 * scale
    lu = splu((A + sigma * sp.identity(n, format="csc")).tocsc())
    rng = np.random.default_rng(seed)
    need = K + 1
    budget = 5 * n
    used = 0
    locked = np.zeros((n, 0))
    locked_vals = []

    def residual(y, lam):
        return float(np.linalg.norm(A @ y - lam * y))

    while True:
        v = rng.standard_normal(n)
        for _ in range(2):
            if locked.shape[1]:
                v -= locked @ (locked.T @ v)
        v /= np.linalg.norm(v)
        room = n - locked.shape[1]
        if room <= 0:
            break
        steps_cap = min(room, max(40, 4 * need), budget - used)
        if steps_cap <= 0:
            raise ConvergenceFailure(
                f"Lanczos exceeded {budget} operator applications",
                residuals=np.array(locked_vals),
            )
        theta, Y, steps = _lanczos_run(
            lu.solve, v, locked, steps_cap, 1e-12, max(1, need - locked.shape[1]))
        used += steps
        new_vals, new_vecs = [], []
        for t, y in zip(theta, Y.T):
            if t <= 0:
                continue
            y = y / np.linalg.norm(y)
            lam = float(y @ (A @ y))
            if residual(y, lam) <= tol * scale:
                new_vals.append(lam)
                new_vecs.append(y)
        if not new_vals:
            if steps >= room:
                break
            continue
        cur = sorted(locked_vals)
        if len(cur) >= need and min(new_vals) >= cur[K] - tol * scale:
            break
        for lam, y in zip(new_vals, new_vecs):
            for _ in range(2):
                if locked.shape[1]:
                    y = y - locked @ (locked.T @ y)
            nrm = np.linalg.norm(y)
            if nrm < 1e-6:
                continue
            locked = np.column_stack([locked, y / nrm])
            locked_vals.append(lam)

    # final Rayleigh-Ritz on the locked subspace
    H = locked.T @ (A @ locked)
    vals, S = np.linalg.eigh(0.5 * (H + H.T))
    vals, V = vals[:need], locked @ S[:, :need]
    res = np.array([residual(V[:, j], vals[j]) for j in range(V.shape[1])])
    if V.shape[1] < need or np.any(res > tol * scale):
        raise ConvergenceFailure(
            f"Lanczos residuals {res.max() if res.size else np.nan:.3e} exceed {tol * scale:.3e}",
            residuals=res,
        )
    return vals, V


def compute_spectrum(G: MeasuredGraph, K: int, method: str = "auto", seed: int = LANCZOS_SEED) -> Spectrum:
    """Smallest ``K + 1`` eigenpairs of the weighted graph Laplacian.

    Parameters
    ----------
    G : MeasuredGraph
    K : int
        Highest index wanted; ``0 <= K < vertex_count``.
    method : {"dense", "iterative", "auto"}
        ``auto`` picks dense below 1500 vertices.
    """
    n = G.vertex_count
    if K < 0 or K >= n:
        raise KTooLarge(f"K={K} must lie in [0, {n - 1}]")
    if method not in ("dense", "iterative", "auto"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if n < DENSE_CUTOFF else "iterative"
    A = symmetrized_operator(G)
    if method == "dense" or n <= 2:
        vals, V = _dense(A, K)
    else:
        vals, V = _iterative(A, K, seed=seed)
    # exact kernel: constant function, eigenvalue zero
    v0 = np.sqrt(G.mu)
    if abs(vals[0]) <= 1e-9 * max(1.0, _operator_scale(A)) and abs(v0 @ V[:, 0]) > 0.5:
        vals = vals.copy()
        vals[0] = 0.0
        V = V.copy()
        V[:, 0] = v0
    V = _normalize_signs(V)
    F = V / np.sqrt(G.mu)[:, None]
    res = np.linalg.norm(A @ V - V * vals[None, :], axis=0)
    vals.setflags(write=False)
    F.setflags(write=False)
    return Spectrum(eigenvalues=vals, eigenfunctions=F, method=method, residuals=res)


def generalized_residual(G: MeasuredGraph, f, lam: float) -> float:
    """``||M^{-1/2}(L f - lam M f)||`` relative to ``||f||_mu``."""
    f = as_function(G, f)
    r = G.laplacian @ f - lam * G.mu * f
    nf = np.sqrt(np.dot(G.mu, f * f))
    return float(np.linalg.norm(r / np.sqrt(G.mu)) / nf)


def eigenfunction_split(G: MeasuredGraph, f, lam: float = None, rtol: float = 1e-6):
    """Split an eigenfunction into positive and negative parts.

    Returns ``(max(f, 0), max(-f, 0))``.  ``f`` must be an eigenfunction for
    a positive eigenvalue; ``lam`` defaults to its Rayleigh quotient.
    """
    f = as_function(G, f)
    if not np.any(f):
        raise NotAnEigenfunction("zero function")
    if lam is None:
        lam = rayleigh_quotient(G, f)
    scale = _operator_scale(symmetrized_operator(G))
    if lam <= 1e-9 * scale:
        raise NotAnEigenfunction(f"eigenvalue {lam!r} is not positive (constant mode)")
    res = generalized_residual(G, f, lam)
    if res > rtol * scale:
        raise NotAnEigenfunction(f"residual {res:.3e} exceeds {rtol * scale:.3e}")
    f0 = np.maximum(f, 0.0)
    f1 = np.maximum(-f, 0.0)
    if not np.any(f0) or not np.any(f1):
        raise OneSidedFunction("eigenfunction does not change sign")
    return f0, f1


def eigenspace(spectrum: Spectrum, j: int, rtol: float = 1e-8) -> np.ndarray:
    """Indices of all computed eigenvalues equal to ``lambda_j`` within ``rtol``."""
    vals = spectrum.eigenvalues
    tol = rtol * max(1.0, abs(vals[j]))
    return np.flatnonzero(np.abs(vals - vals[j]) <= tol)


def canonical_eigenfunction(G: MeasuredGraph, spectrum: Spectrum, j: int = 1) -> np.ndarray:
    """Basis-independent eigenfunction for ``lambda_j``.

    Projects the point mass at the lowest-index vertex where the projection
    is nonzero onto the computed eigenspace of ``lambda_j``, then normalizes
    in ``L^2(mu)``.  Repeated eigenvalues make individual eigenvectors
    solver-dependent; the projection is not.
    """
    idx = eigenspace(spectrum, j)
    F = np.asarray(spectrum.eigenfunctions[:, idx])
    for v in range(G.vertex_count):
        # <delta_v / mu_v, phi>_mu = phi(v)
        f = F @ F[v]
        nrm = np.sqrt(np.dot(G.mu, f * f))
        if nrm > 1e-8 * np.abs(F).max():
            return f / nrm
    raise ValueError("eigenspace projection vanished at every vertex")
