"""Damped least squares (Levenberg-Marquardt) with Marquardt diagonal scaling.

Damping starts at ``lam0`` times the diagonal of the normal matrix and is
divided by 10 on every accepted step and multiplied by 10 on every
rejected one.  Accepted steps strictly decrease the residual norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    jacobian: np.ndarray
    converged: bool
    iterations: int
    history: list = field(default_factory=list)  # residual norm after each accepted step
    message: str = ""

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))

    def standard_errors(self) -> np.ndarray:
        """Indicative 1-sigma errors from the inverse Gauss-Newton Hessian."""
        J = self.jacobian
        m, n = J.shape
        dof = m - n
        if dof <= 0:
            return np.full(n, np.nan)
        s2 = float(self.residual @ self.residual) / dof
        cov = np.linalg.pinv(J.T @ J) * s2
        return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def numeric_jacobian(fun: Callable, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with a relative step per parameter."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x))
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2 * h)
    return J


def levenberg_marquardt(
    fun: Callable,
    x0,
    jac: Optional[Callable] = None,
    max_iter: int = 200,
    ftol: float = 1e-10,
    xtol: float = 1e-10,
    lam0: float = 1e-3,
) -> LMResult:
    """Minimize ``sum(fun(x)**2)`` starting from ``x0``.

    Stops when an accepted step changes the residual norm by less than
    ``ftol`` (relative) or moves ``x`` by less than ``xtol`` (relative), or
    after ``max_iter`` iterations.  Hitting the cap returns the best iterate
    with ``converged=False``.
    """
    if jac is None:
        jac = lambda x: numeric_jacobian(fun, x)  # noqa: E731
    x = np.array(x0, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("residual is not finite at the initial point")
    cost = float(r @ r)
    J = np.asarray(jac(x), dtype=float)
    history = [np.sqrt(cost)]
    lam = lam0
    converged = False
    message = "iteration cap reached"
    it = 0

    while it < max_iter:
        it += 1
        if cost == 0.0:
            converged, message = True, "exact fit"
            break
        A = J.T @ J
        grad = J.T @ r
        d = np.diag(A).copy()
        d[d <= 0] = max(d.max(), 1.0) * 1e-12
        try:
            dx = np.linalg.solve(A + lam * np.diag(d), -grad)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        x_new = x + dx
        r_new = np.asarray(fun(x_new), dtype=float)
        with np.errstate(over="ignore"):  # a wild trial step just gets rejected
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
        step = np.linalg.norm(dx) / (np.linalg.norm(x) + xtol)

        if cost_new < cost:
            rel_change = (np.sqrt(cost) - np.sqrt(cost_new)) / np.sqrt(cost)
            x, r, cost = x_new, r_new, cost_new
            history.append(np.sqrt(cost))
            lam = max(lam / 10.0, 1e-12)
            if rel_change < ftol or step < xtol:
                converged, message = True, "converged"
                break
            J = np.asarray(jac(x), dtype=float)
        else:
            lam *= 10.0
            if step < xtol:
                converged, message = True, "converged (no further decrease)"
                break
            if lam > 1e16:
                message = "damping overflow"
                break

    J = np.asarray(jac(x), dtype=float)
    return LMResult(x, r, J, converged, it, history, message)
