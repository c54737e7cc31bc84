"""
Linear solves and spectra for the smoothing operator I + rho * L.

The smoothing system is solved by conjugate gradients on the matrix-free
operator. The part of the response that is constant on each connected
component lies in the null space of L and passes through the system
unchanged, so it is split off first and CG only sees the remainder.
Spectra come from a dense symmetric eigendecomposition or, for a few
extremal eigenvalues, from Lanczos with full reorthogonalization.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, Field
from scipy import linalg

from ..exceptions import CapacityError, ConvergenceError, InputError
from ..utils.io import write_table_csv
from ..utils.rng import keyed_rng
from ..utils.validators import validate_positive, validate_vector
from .graph import NeighborhoodGraph, dense_laplacian

logger = structlog.get_logger(__name__)

RESIDUAL_REFRESH_EVERY = 50
LANCZOS_CHECK_EVERY = 10


class SolveReport(BaseModel):
    """Outcome of one conjugate-gradient solve."""

    iterations: int
    final_residual: float
    converged: bool
    tol: float
    residual_inf_norm: float = 0.0
    residual_history: List[float] = Field(default_factory=list)


class SpectrumMode(str, Enum):
    FULL_DENSE = "full-dense"
    PARTIAL_ITERATIVE = "partial-iterative"


@dataclass(frozen=True)
class SpectrumResult:
    """
    Ascending Laplacian eigenvalues.

    Attributes:
        eigenvalues: Ascending eigenvalues (all n in full mode, k < n otherwise)
        mode: How they were computed
        n: Size of the graph they came from
        which: "smallest" or "largest" for partial spectra
        eigenvectors: Columns matching ``eigenvalues`` (full mode only, on request)
    """

    eigenvalues: np.ndarray
    mode: SpectrumMode
    n: int
    which: str = "smallest"
    eigenvectors: Optional[np.ndarray] = None

    @property
    def is_full(self) -> bool:
        return self.mode is SpectrumMode.FULL_DENSE and self.eigenvalues.shape[0] == self.n

    @property
    def indices(self) -> np.ndarray:
        """1-based positions of the eigenvalues in the full ordering."""
        k = self.eigenvalues.shape[0]
        start = self.n - k + 1 if self.which == "largest" else 1
        return np.arange(start, start + k)


def _smoothing_operator(g: NeighborhoodGraph, rho: float) -> Callable[[np.ndarray], np.ndarray]:
    degrees, weights = g.degrees, g.weights

    def matvec(v: np.ndarray) -> np.ndarray:
        return v + rho * (degrees * v - weights @ v)

    return matvec


def component_means(g: NeighborhoodGraph, y: np.ndarray) -> np.ndarray:
    """Projection of y onto vectors constant on each connected component."""
    _, labels = g.components
    sums = np.bincount(labels, weights=y)
    counts = np.bincount(labels)
    return (sums / counts)[labels]


def solve_smoothing_system(
    g: NeighborhoodGraph,
    y,
    rho: float,
    tol: float = 1e-10,
    max_iter: int = 5000,
    callback: Optional[Callable[[np.ndarray], None]] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve (I + rho L) f = y by conjugate gradients.

    Args:
        g: Neighborhood graph
        y: Responses, length n
        rho: Penalty weight (>= 0); rho = 0 returns y exactly
        tol: Relative residual target ||(I + rho L) f - y|| / ||y||
        max_iter: Iteration budget
        callback: Called with the full iterate f_k after every iteration

    Returns:
        (f_hat, SolveReport). A non-converged solve is returned, not raised.
    """
    y = validate_vector(y, length=g.n, name="y")
    rho = validate_positive(rho, "rho", allow_zero=True)
    tol = validate_positive(tol, "tol")

    if rho == 0.0:
        return y.copy(), SolveReport(iterations=0, final_residual=0.0, converged=True, tol=tol)

    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return np.zeros(g.n), SolveReport(iterations=0, final_residual=0.0, converged=True, tol=tol)

    matvec = _smoothing_operator(g, rho)
    null_part = component_means(g, y)
    z = y - null_part
    target = tol * y_norm

    x = np.zeros(g.n)
    r = z.copy()
    rs = float(r @ r)
    history = [np.sqrt(rs) / y_norm]
    p = r.copy()
    iterations = 0
    converged = np.sqrt(rs) <= target

    while not converged and iterations < max_iter:
        iterations += 1
        Ap = matvec(p)
        alpha = rs / float(p @ Ap)
        x += alpha * p
        if iterations % RESIDUAL_REFRESH_EVERY == 0:
            r = z - matvec(x)
        else:
            r -= alpha * Ap
        rs_new = float(r @ r)
        if callback is not None:
            callback(null_part + x)

        if np.sqrt(rs_new) <= target:
            # the recurrence drifts from the true residual; confirm before stopping
            r = z - matvec(x)
            rs_new = float(r @ r)
            history.append(np.sqrt(rs_new) / y_norm)
            if np.sqrt(rs_new) <= target:
                converged = True
                break
            p = r.copy()
            rs = rs_new
            continue

        history.append(np.sqrt(rs_new) / y_norm)
        p = r + (rs_new / rs) * p
        rs = rs_new

    residual = z - matvec(x)
    final = float(np.linalg.norm(residual)) / y_norm
    report = SolveReport(
        iterations=iterations,
        final_residual=final,
        converged=final <= tol,
        tol=tol,
        residual_inf_norm=float(np.max(np.abs(residual))),
        residual_history=history,
    )
    logger.debug(
        f"Smoothing solve finished after {iterations} iterations",
        rho=rho,
        residual=final,
        converged=report.converged,
    )
    return null_part + x, report


def full_spectrum(
    g: NeighborhoodGraph,
    dense_cap: int = 4000,
    eigenvectors: bool = False,
) -> SpectrumResult:
    """
    All Laplacian eigenvalues by dense symmetric eigendecomposition.

    Raises:
        CapacityError: if n exceeds ``dense_cap``
    """
    if g.n > dense_cap:
        raise CapacityError(
            f"Full spectrum of n={g.n} exceeds the dense cap {dense_cap}; "
            f"use partial_spectrum or permutation calibration"
        )
    L = dense_laplacian(g)
    if eigenvectors:
        values, vectors = linalg.eigh(L)
    else:
        values, vectors = linalg.eigh(L, eigvals_only=True), None
    return SpectrumResult(
        eigenvalues=values, mode=SpectrumMode.FULL_DENSE, n=g.n, eigenvectors=vectors
    )


def _ritz_values(alphas: List[float], betas: List[float]) -> Tuple[np.ndarray, np.ndarray]:
    if len(alphas) == 1:
        return np.array(alphas), np.ones((1, 1))
    return linalg.eigh_tridiagonal(np.array(alphas), np.array(betas))


def _orthogonalize(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # twice is enough
    for _ in range(2):
        v = v - basis @ (basis.T @ v)
    return v


def partial_spectrum(
    g: NeighborhoodGraph,
    k: int,
    which: str = "smallest",
    tol: float = 1e-10,
    max_basis: int = 1000,
    max_k: int = 200,
    seed: int = 0,
) -> SpectrumResult:
    """
    k extremal Laplacian eigenvalues by Lanczos with full reorthogonalization.

    A Ritz value theta_i is accepted once |beta_m * s_{m,i}| <= tol * max|theta|.
    When the Krylov space becomes invariant the iteration restarts from a
    random vector orthogonal to the basis built so far.

    Args:
        g: Neighborhood graph
        k: Number of eigenvalues, 1 <= k < n
        which: "smallest" or "largest"
        tol: Relative residual bound for accepting Ritz values
        max_basis: Largest Krylov basis (capped at n)
        max_k: Largest k accepted
        seed: Seed of the starting-vector stream

    Raises:
        ConvergenceError: carrying the current Ritz values when the basis is exhausted
    """
    n = g.n
    if which not in ("smallest", "largest"):
        raise InputError(f"which must be 'smallest' or 'largest', got {which!r}")
    if not 1 <= int(k) < n:
        raise InputError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    k = int(k)
    if k > max_k:
        raise CapacityError(f"partial_spectrum supports k <= {max_k}, got {k}")

    basis_size = max(min(n, int(max_basis)), min(n, k + 1))
    matvec = _smoothing_operator(g, 1.0)
    rng = keyed_rng(seed, "lanczos", n, k)

    Q = np.zeros((n, basis_size))
    alphas: List[float] = []
    betas: List[float] = []
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    beta_prev = 0.0
    selected = np.empty(0)

    for j in range(basis_size):
        Q[:, j] = q
        # L q = (I + L) q - q
        u = matvec(q) - q
        alpha = float(q @ u)
        u -= alpha * q
        if j > 0:
            u -= beta_prev * Q[:, j - 1]
        u = _orthogonalize(u, Q[:, : j + 1])
        beta = float(np.linalg.norm(u))
        alphas.append(alpha)
        m = j + 1

        theta, S = None, None
        if m >= k and ((m - k) % LANCZOS_CHECK_EVERY == 0 or m == basis_size):
            theta, S = _ritz_values(alphas, betas)
            scale = max(float(np.max(np.abs(theta))), np.finfo(float).tiny)
            idx = np.arange(k) if which == "smallest" else np.arange(m - k, m)
            selected = theta[idx]
            bounds = np.abs(beta * S[-1, idx])
            if m == n or np.all(bounds <= tol * scale):
                logger.debug(f"Lanczos converged with basis size {m}", k=k, which=which)
                return SpectrumResult(
                    eigenvalues=np.sort(selected),
                    mode=SpectrumMode.PARTIAL_ITERATIVE,
                    n=n,
                    which=which,
                )

        if m == basis_size:
            break

        scale = max(abs(a) for a in alphas) or 1.0
        if beta <= 1e-12 * scale:
            # invariant subspace: restart orthogonally
            q = _orthogonalize(rng.standard_normal(n), Q[:, :m])
            q /= np.linalg.norm(q)
            beta = 0.0
        else:
            q = u / beta
        betas.append(beta)
        beta_prev = beta

    raise ConvergenceError(
        f"Lanczos did not converge for k={k} {which} eigenvalues within a basis of {basis_size}",
        partial_eigenvalues=np.sort(selected).tolist(),
    )


def shrinkage_factors(spectrum: SpectrumResult, rho: float, power: int = 1) -> np.ndarray:
    """(rho * lambda_k + 1)^(-power) for every eigenvalue in the spectrum."""
    rho = validate_positive(rho, "rho", allow_zero=True)
    eigenvalues = np.maximum(spectrum.eigenvalues, 0.0)
    return (rho * eigenvalues + 1.0) ** (-float(power))


def export_spectrum(spectrum: SpectrumResult, file_path: Union[str, Path]) -> Path:
    """Write the spectrum as CSV ``k,lambda`` (k 1-based)."""
    rows = zip(spectrum.indices.tolist(), spectrum.eigenvalues.tolist())
    return write_table_csv(str(file_path), ["k", "lambda"], rows)
