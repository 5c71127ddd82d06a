"""Quadratic propagation system and its preconditioned conjugate-gradient solve.

The energy being minimized is the sum of per-point reconstruction residuals
under the fixed weight matrix W plus a diagonal penalty tying constrained
points to their targets.  Its normal equations are

    [(I - W)^T (I - W) + Lambda] S = Lambda T

solved per channel.  The operator is applied matrix-free as two sparse
matvecs plus a diagonal scale; an explicit dense assembly exists only as the
verification route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .lle import LleGraph

DEFAULT_LAMBDA = 100.0
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class PropagationSystem:
    """Immutable normal-equation system over n sample points."""

    graph: LleGraph
    lambda_diag: np.ndarray  # (n,) nonnegative constraint masses
    rhs: np.ndarray  # (n, channels), zero wherever lambda_diag is zero
    lam: float
    residual: sparse.csr_matrix  # I - W
    residual_t: sparse.csr_matrix

    @property
    def n(self) -> int:
        return self.lambda_diag.shape[0]

    @property
    def channels(self) -> int:
        return self.rhs.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """A @ v for (n,) or (n, c) vectors, without forming A."""
        rv = self.residual @ v
        out = self.residual_t @ rv
        if v.ndim == 1:
            return out + self.lambda_diag * v
        return out + self.lambda_diag[:, None] * v

    def jacobi_diagonal(self) -> np.ndarray:
        """diag(A): column sums of squares of I - W plus the masses."""
        sq = self.residual.multiply(self.residual).sum(axis=0)
        return np.asarray(sq).ravel() + self.lambda_diag

    def dense_matrix(self) -> np.ndarray:
        """Explicit A, verification route only."""
        r = self.residual.toarray()
        return r.T @ r + np.diag(self.lambda_diag)


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray  # (n, channels)
    iterations: np.ndarray  # (channels,) int
    relative_residual: np.ndarray  # (channels,)
    energy: np.ndarray  # (channels,)
    converged: np.ndarray  # (channels,) bool


def assemble(
    graph: LleGraph, constrained: np.ndarray, targets: np.ndarray, lam: float = DEFAULT_LAMBDA
) -> PropagationSystem:
    """System with mass lam on each constrained sample and rhs lam * target."""
    constrained = np.asarray(constrained, dtype=bool)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    lambda_diag = np.where(constrained, lam, 0.0)
    rhs = np.where(constrained[:, None], lam * targets, 0.0)
    return assemble_weighted(graph, lambda_diag, rhs, lam)


def assemble_weighted(
    graph: LleGraph, lambda_diag: np.ndarray, rhs: np.ndarray, lam: float = DEFAULT_LAMBDA
) -> PropagationSystem:
    """System with arbitrary nonnegative per-sample masses (lumped constraints)."""
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    lambda_diag = np.asarray(lambda_diag, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if lambda_diag.shape != (graph.n,):
        raise ValueError(f"lambda_diag must have shape ({graph.n},)")
    if rhs.ndim != 2 or rhs.shape[0] != graph.n:
        raise ValueError(f"rhs must have shape ({graph.n}, channels)")
    if (lambda_diag < 0.0).any():
        raise ValueError("negative constraint mass")
    if not (lambda_diag > 0.0).any():
        raise ValueError("unconstrained system")
    if rhs[lambda_diag == 0.0].any():
        raise ValueError("rhs nonzero on unconstrained samples")
    residual = graph.residual_operator()
    return PropagationSystem(
        graph=graph,
        lambda_diag=lambda_diag,
        rhs=rhs,
        lam=lam,
        residual=residual,
        residual_t=residual.T.tocsr(),
    )


def _cg(system: PropagationSystem, diag: np.ndarray, b: np.ndarray, x0: np.ndarray,
        tol: float, max_iter: int) -> tuple[np.ndarray, int, float, bool]:
    """Jacobi-preconditioned CG on one channel; returns (x, iters, rel, ok).

    A recursive-residual pass below tol is confirmed against the true
    residual before declaring convergence, restarting if they disagree.  A
    zero right-hand side short-circuits to the exact solution 0.
    """
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b), 0, 0.0, True
    x = x0.copy()
    r = b - system.apply(x)
    rel = float(np.linalg.norm(r)) / norm_b
    if rel <= tol:
        return x, 0, rel, True
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    iters = 0
    while iters < max_iter:
        ap = system.apply(p)
        pap = float(p @ ap)
        if pap <= 0.0 or not math.isfinite(pap):
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        iters += 1
        if float(np.linalg.norm(r)) / norm_b <= tol:
            r = b - system.apply(x)
            rel = float(np.linalg.norm(r)) / norm_b
            if rel <= tol:
                return x, iters, rel, True
            z = r / diag
            p = z.copy()
            rz = float(r @ z)
            continue
        z = r / diag
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    rel = float(np.linalg.norm(b - system.apply(x))) / norm_b
    return x, iters, rel, rel <= tol


def solve(
    system: PropagationSystem,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Solve every channel independently, starting from x0 when given.

    Non-convergence is reported through the flags, never raised; the best
    iterate and its true relative residual are returned regardless.
    """
    n, channels = system.rhs.shape
    if max_iter is None:
        max_iter = int(math.ceil(10.0 * math.sqrt(n)))
    if x0 is None:
        x0 = np.zeros((n, channels))
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (n, channels):
            raise ValueError(f"x0 must have shape ({n}, {channels})")
    diag = system.jacobi_diagonal()
    solution = np.empty((n, channels))
    iterations = np.zeros(channels, dtype=np.int64)
    residuals = np.zeros(channels)
    flags = np.zeros(channels, dtype=bool)
    for c in range(channels):
        solution[:, c], iterations[c], residuals[c], flags[c] = _cg(
            system, diag, system.rhs[:, c], x0[:, c], tol, max_iter
        )
    return SolveReport(
        solution=solution,
        iterations=iterations,
        relative_residual=residuals,
        energy=system_energy(system, solution),
        converged=flags,
    )


def system_energy(system: PropagationSystem, s: np.ndarray) -> np.ndarray:
    """Per-channel energy of a candidate solution under lumped masses."""
    rs = system.residual @ s
    smooth = (rs * rs).sum(axis=0)
    mass = system.lambda_diag
    targets = np.zeros_like(system.rhs)
    pos = mass > 0.0
    targets[pos] = system.rhs[pos] / mass[pos, None]
    d = s - targets
    return smooth + (mass[:, None] * d * d).sum(axis=0)


def energy(
    graph: LleGraph,
    s: np.ndarray,
    constrained: np.ndarray | None = None,
    targets: np.ndarray | None = None,
    lam: float = DEFAULT_LAMBDA,
) -> np.ndarray | float:
    """Reconstruction energy plus the constraint penalty, evaluated literally.

    With no constrained samples the penalty term vanishes.  Accepts (n,) or
    (n, channels) values; the return matches (scalar or per-channel array).
    """
    s_arr = np.asarray(s, dtype=np.float64)
    flat = s_arr.ndim == 1
    cols = s_arr[:, None] if flat else s_arr
    rs = graph.residual_operator() @ cols
    total = (rs * rs).sum(axis=0)
    if constrained is not None and np.asarray(constrained).any():
        constrained = np.asarray(constrained, dtype=bool)
        t_arr = np.asarray(targets, dtype=np.float64)
        t_cols = t_arr[:, None] if flat else t_arr
        d = cols[constrained] - t_cols[constrained]
        total = total + lam * (d * d).sum(axis=0)
    return float(total[0]) if flat else total


def dense_solve(system: PropagationSystem) -> np.ndarray:
    """Direct factorization of the explicit matrix, verification route only."""
    return np.linalg.solve(system.dense_matrix(), system.rhs)
