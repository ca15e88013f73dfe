"""
Uzawa iteration for discrete Stokes-type saddle-point systems.

    A u - C^T p = b
    C u         = d

A is SPD on the free faces, C is the weak divergence restricted to free faces and active
cells. The pressure Schur complement S = C A^-1 C^T is solved with preconditioned CG;
each iteration costs one inner solve with A. The preconditioner is the Cahouet-Chabard
combination mu V^-1 + mu m L^-1 (L the cell Laplacian), which reduces to mu V^-1 when
there is no zeroth-order term.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from brinkhom.config import settings
from brinkhom.core.exceptions import InvalidParameterError, SolverStagnationError
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)


@dataclass
class SaddleResult:
    u: FloatArray  # free-face velocity
    p: FloatArray  # active-cell pressure, weighted mean zero
    iterations: int
    residual: float  # max cell divergence defect
    history: list[float] = field(default_factory=list)


class InnerSolver:
    """Repeated solves with one SPD matrix, by sparse LU or Jacobi-CG."""

    def __init__(
        self,
        matrix: sp.spmatrix,
        method: str | None = None,
        tol: float | None = None,
        max_iter: int | None = None,
    ):
        self.matrix = matrix.tocsc()
        self.size = self.matrix.shape[0]
        method = method or settings.inner_solver
        if method == "auto":
            method = "direct" if self.size <= settings.direct_solver_max_unknowns else "cg"
        if method not in ("direct", "cg"):
            raise InvalidParameterError(f"Unknown inner solver '{method}'")
        self.method = method
        self.tol = tol if tol is not None else settings.inner_tol
        self.max_iter = max_iter or settings.inner_max_iter
        self._lu = None
        self._jacobi: LinearOperator | None = None
        if self.size == 0:
            return
        if method == "direct":
            logger.debug(f"Factorizing {self.size} x {self.size} matrix")
            self._lu = splu(self.matrix)
        else:
            inv_diag = 1.0 / self.matrix.diagonal()
            self._jacobi = LinearOperator(
                self.matrix.shape, matvec=lambda x: inv_diag * x, dtype=float
            )

    def solve(self, rhs: FloatArray) -> FloatArray:
        if self.size == 0:
            return np.zeros(0)
        if self._lu is not None:
            return self._lu.solve(rhs)
        x, info = cg(self.matrix, rhs, rtol=self.tol, atol=0.0, maxiter=self.max_iter, M=self._jacobi)
        if info > 0:
            logger.warning(f"Inner CG stopped after {info} iterations above tolerance")
        return x


class SaddlePointSolver:
    def __init__(
        self,
        a: sp.spmatrix,
        c: sp.spmatrix,
        cell_volumes: FloatArray,
        viscosity: float = 1.0,
        reaction: float = 0.0,
        face_mass: FloatArray | None = None,
        tol: float | None = None,
        max_iter: int | None = None,
        inner: InnerSolver | None = None,
    ):
        self.c = c.tocsr()
        self.ct = self.c.T.tocsr()
        self.volumes = np.asarray(cell_volumes, dtype=float)
        self.viscosity = viscosity
        self.tol = tol if tol is not None else settings.uzawa_tol
        self.max_iter = max_iter or settings.uzawa_max_iter
        self.inner = inner or InnerSolver(a)
        self._laplacian = None
        self._reaction = reaction
        if reaction > 0.0 and face_mass is not None and self.c.shape[0] > 0:
            lap = (self.c @ sp.diags(1.0 / face_mass) @ self.ct).tocsc()
            shift = 1e-10 * float(np.max(np.abs(lap.diagonal())))
            self._laplacian = splu((lap + shift * sp.identity(lap.shape[0])).tocsc())

    def _precondition(self, r: FloatArray) -> FloatArray:
        z = self.viscosity * r / self.volumes
        if self._laplacian is not None:
            z = z + self.viscosity * self._reaction * self._laplacian.solve(r)
        return z

    def _gauge(self, p: FloatArray) -> FloatArray:
        return p - np.dot(self.volumes, p) / self.volumes.sum()

    def _defect(self, r: FloatArray) -> float:
        return float(np.max(np.abs(r) / self.volumes)) if r.size else 0.0

    def solve(
        self,
        b: FloatArray,
        d: FloatArray | None = None,
        p0: FloatArray | None = None,
    ) -> SaddleResult:
        n_cells = self.c.shape[0]
        d = np.zeros(n_cells) if d is None else d - d.mean()
        p = np.zeros(n_cells) if p0 is None else p0.copy()

        u = self.inner.solve(b + self.ct @ p)
        r = d - self.c @ u
        r -= r.mean() if r.size else 0.0
        defect = self._defect(r)
        history = [defect]
        best = (defect, u.copy(), p.copy())
        if defect <= self.tol:
            return SaddleResult(u, self._gauge(p), 0, defect, history)

        z = self._precondition(r)
        direction = z.copy()
        rz = float(np.dot(r, z))
        for iteration in range(1, self.max_iter + 1):
            w = self.inner.solve(self.ct @ direction)
            sd = self.c @ w
            curvature = float(np.dot(direction, sd))
            if curvature <= 0.0:
                logger.warning(f"Schur CG lost positivity at iteration {iteration}")
                break
            alpha = rz / curvature
            p += alpha * direction
            u += alpha * w
            r -= alpha * sd
            r -= r.mean()
            defect = self._defect(r)
            history.append(defect)
            logger.debug(f"Uzawa iteration {iteration}: max divergence defect {defect:.3e}")
            if defect < best[0]:
                best = (defect, u.copy(), p.copy())
            if defect <= self.tol:
                return SaddleResult(u, self._gauge(p), iteration, defect, history)
            z = self._precondition(r)
            rz_new = float(np.dot(r, z))
            direction = z + (rz_new / rz) * direction
            rz = rz_new

        defect, u_best, p_best = best
        raise SolverStagnationError(
            "Uzawa iteration did not reach the divergence tolerance",
            residual=defect,
            best=SaddleResult(u_best, self._gauge(p_best), len(history) - 1, defect, history),
            history=history,
        )
