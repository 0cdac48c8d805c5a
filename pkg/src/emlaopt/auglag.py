"""Augmented Lagrangian minimizer for smooth constrained problems.

Classic PHR scheme: equality multipliers plus clipped inequality
multipliers on top of a quadratic penalty, with an L-BFGS-B inner solve so
simple variable bounds stay exact.  Multiplier updates follow the usual
two-branch rule: update when the violation target is met, otherwise grow
the penalty.  Deterministic: no randomness, fixed update schedule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


@dataclass
class AuglagResult:
    x: np.ndarray
    cost: float
    eq_residual: np.ndarray
    ineq_violation: np.ndarray
    converged: bool
    outer_iterations: int
    message: str
    multipliers_eq: np.ndarray = field(default=None)
    multipliers_ineq: np.ndarray = field(default=None)

    @property
    def max_violation(self) -> float:
        v = 0.0
        if self.eq_residual.size:
            v = max(v, float(np.abs(self.eq_residual).max()))
        if self.ineq_violation.size:
            v = max(v, float(self.ineq_violation.max()))
        return v


def minimize_auglag(
    fun,
    x0,
    jac,
    eq=None,
    eq_jac=None,
    ineq=None,
    ineq_jac=None,
    bounds=None,
    ctol=1e-6,
    gtol=1e-8,
    rho0=10.0,
    rho_max=1e9,
    outer_maxiter=25,
    inner_maxiter=80,
    lam0=None,
    mu0=None,
):
    """Minimize fun subject to eq(x) == 0, ineq(x) <= 0 and box bounds.

    All callables receive the full decision vector; jacobians return
    (n_con, n_x) arrays.  ``lam0``/``mu0`` warm-start the multipliers.
    Returns the best near-feasible iterate when the outer budget runs out.
    """
    x = np.asarray(x0, dtype=float).copy()
    n_eq = len(eq(x)) if eq is not None else 0
    n_in = len(ineq(x)) if ineq is not None else 0
    lam = np.zeros(n_eq) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    mu = np.zeros(n_in) if mu0 is None else np.asarray(mu0, dtype=float).copy()
    rho = rho0

    def lagrangian(z):
        val = fun(z)
        grad = jac(z).copy()
        if n_eq:
            h = eq(z)
            jh = eq_jac(z)
            val += lam @ h + 0.5 * rho * (h @ h)
            grad += jh.T @ (lam + rho * h)
        if n_in:
            g = ineq(z)
            jg = ineq_jac(z)
            active = np.maximum(0.0, mu + rho * g)
            val += (active @ active - mu @ mu) / (2.0 * rho)
            grad += jg.T @ active
        return val, grad

    def violation(z):
        vh = np.abs(eq(z)).max() if n_eq else 0.0
        vg = max(0.0, ineq(z).max()) if n_in else 0.0
        return max(vh, vg)

    def result(z, converged, outer, message):
        return AuglagResult(
            x=z,
            cost=float(fun(z)),
            eq_residual=eq(z) if n_eq else np.zeros(0),
            ineq_violation=np.maximum(0.0, ineq(z)) if n_in else np.zeros(0),
            converged=converged,
            outer_iterations=outer,
            message=message,
            multipliers_eq=lam,
            multipliers_ineq=mu,
        )

    best = None
    inner_gtol = max(gtol, 1e-3)
    viol_target = 0.05
    feasible_streak = 0
    for outer in range(1, outer_maxiter + 1):
        res = minimize(
            lagrangian,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": inner_maxiter, "ftol": 1e-12, "gtol": inner_gtol},
        )
        x = res.x
        viol = violation(x)
        cost = float(fun(x))
        if best is None or viol < best[1] or (viol <= max(ctol, best[1]) and cost < best[2]):
            best = (x.copy(), viol, cost)

        if viol <= max(ctol, viol_target):
            if n_eq:
                lam = lam + rho * eq(x)
            if n_in:
                mu = np.maximum(0.0, mu + rho * ineq(x))
            viol_target = max(0.1 * ctol, 0.2 * viol_target)
            inner_gtol = max(gtol, 0.2 * inner_gtol)
            feasible_streak = feasible_streak + 1 if viol <= ctol else 0
            if feasible_streak >= 2:
                return result(x, True, outer, "constraints satisfied")
        else:
            rho = min(rho * 10.0, rho_max)
            feasible_streak = 0

    x, viol, cost = best
    return result(x, viol <= ctol, outer_maxiter, "outer budget exhausted; best iterate")
