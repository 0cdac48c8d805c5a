"""Outer-level search for criterion weights that maximize actuation efficiency.

For a candidate weight vector the inner trajectory generator is solved,
the resulting force/velocity samples are rated through the per-joint
efficiency characteristics, and the time-aggregated squared total
efficiency becomes the outer objective.  Grid search (exhaustive over the
weight box) and projected Nelder-Mead are provided; both are deterministic
and record their full evaluation trace.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .effmap import EfficiencyMap
from .manipulator import ChainModel, rnea
from .trajopt import NlpProblem, TrajectoryResult, solve_inner


def total_efficiency(v_x, f_x, eta_fns):
    """Combined efficiency of all actuators at one sample.

    eta_Act = (sum_i p_i) / (sum_i p_i / eta_i) over the motoring joints
    (p_i = f_i v_i > 0).  Regenerating joints are excluded from both sums.
    Returns (eta_act, flagged): flagged is True when no joint delivers
    positive power, or an active joint has zero efficiency; eta_act is 0
    in both cases.
    """
    v = np.asarray(v_x, dtype=float)
    f = np.asarray(f_x, dtype=float)
    p = f * v
    num = 0.0
    den = 0.0
    any_active = False
    for i in range(len(p)):
        if p[i] <= 0.0:
            continue
        eta_i = float(eta_fns[i](f[i], v[i]))
        if eta_i <= 0.0:
            return 0.0, True
        num += p[i]
        den += p[i] / eta_i
        any_active = True
    if not any_active:
        return 0.0, True
    return num / den, False


def _eta_table(v_x, f_x, eta_fns):
    """Per-sample eta_Act and flags for (n_samples, n_joints) arrays."""
    m = v_x.shape[0]
    eta = np.zeros(m)
    flagged = np.zeros(m, dtype=bool)
    for k in range(m):
        eta[k], flagged[k] = total_efficiency(v_x[k], f_x[k], eta_fns)
    return eta, flagged


def efficiency_objective(result: TrajectoryResult, eta_fns):
    """F = 0.5 dt sum_k eta_Act^2 over the collocation samples."""
    dt = result.t_final / (len(result.times) - 1)
    eta, flagged = _eta_table(result.v_x, result.f_x, eta_fns)
    return 0.5 * dt * float(np.sum(eta**2)), eta, flagged


def efficiency_summary(v_x, f_x, eta_fns) -> dict:
    """Energy-weighted per-joint and total efficiencies over a trajectory.

    Per joint: delivered energy / drawn energy over its motoring samples.
    Total: same ratio summed across joints (the power-weighted time mean
    of the per-sample combined efficiency).
    """
    v = np.asarray(v_x, dtype=float)
    f = np.asarray(f_x, dtype=float)
    p = f * v
    n = p.shape[1]
    per_joint = []
    num_tot = 0.0
    den_tot = 0.0
    for i in range(n):
        mask = p[:, i] > 0
        if not np.any(mask):
            per_joint.append(0.0)
            continue
        etas = np.array([eta_fns[i](fi, vi) for fi, vi in zip(f[mask, i], v[mask, i])])
        good = etas > 0
        num = float(np.sum(p[mask, i][good]))
        den = float(np.sum(p[mask, i][good] / etas[good]))
        per_joint.append(num / den if den > 0 else 0.0)
        num_tot += num
        den_tot += den
    total = num_tot / den_tot if den_tot > 0 else 0.0
    eta_samples, flagged = _eta_table(v, f, eta_fns)
    return {
        "per_joint": per_joint,
        "total": total,
        "sample_mean": float(eta_samples[~flagged].mean()) if np.any(~flagged) else 0.0,
        "flagged_samples": int(flagged.sum()),
        "n_samples": int(len(eta_samples)),
    }


def quartile_occupancy(v_x, f_x, maps: list[EfficiencyMap], quantile: float = 0.75) -> list:
    """Fraction of each joint's motoring samples inside the map's top band.

    A sample counts when its interpolated efficiency reaches the given
    quantile of the map's feasible positive-efficiency cells.
    """
    v = np.asarray(v_x, dtype=float)
    f = np.asarray(f_x, dtype=float)
    p = f * v
    out = []
    for i, emap in enumerate(maps):
        mask = p[:, i] > 0
        if not np.any(mask):
            out.append(0.0)
            continue
        threshold = emap.eta_quantile(quantile)
        eta = emap.interp_eta(f[mask, i], v[mask, i])
        out.append(float(np.mean(eta >= threshold)))
    return out


@dataclass(frozen=True)
class BilevelConfig:
    """Outer-search settings: weight box, method and budget."""

    weight_lower: np.ndarray
    weight_upper: np.ndarray
    method: str = "grid"  # "grid" or "nelder-mead"
    grid_points: int = 5
    maxiter: int = 40
    seed: int = 0
    warm_start: bool = True

    def __post_init__(self):
        lo = np.asarray(self.weight_lower, dtype=float)
        hi = np.asarray(self.weight_upper, dtype=float)
        object.__setattr__(self, "weight_lower", lo)
        object.__setattr__(self, "weight_upper", hi)
        if lo.shape != hi.shape:
            raise ValueError("weight bounds must share shape")
        if np.any(lo < 0) or np.any(lo > hi):
            raise ValueError("need 0 <= weight_lower <= weight_upper")
        if self.method not in ("grid", "nelder-mead"):
            raise ValueError("method must be 'grid' or 'nelder-mead'")


@dataclass
class BilevelResult:
    weights_opt: np.ndarray
    outer_value: float
    inner: TrajectoryResult
    summary: dict
    trace: list  # (weights, F, converged) in evaluation order
    n_inner_solves: int
    eta_samples: np.ndarray = None
    flagged_samples: np.ndarray = None

    def trace_to_csv(self) -> str:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        e = len(self.weights_opt)
        writer.writerow([f"w{i+1}" for i in range(e)] + ["F", "inner_converged"])
        for w, value, ok in self.trace:
            writer.writerow(["%.12g" % x for x in w] + ["%.12g" % value, "1" if ok else "0"])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "weights_opt": self.weights_opt.tolist(),
            "outer_value": self.outer_value,
            "summary": self.summary,
            "n_inner_solves": self.n_inner_solves,
            "trace": [
                {"weights": list(map(float, w)), "F": float(v), "inner_converged": bool(ok)}
                for w, v, ok in self.trace
            ],
            "trajectory": self.inner.to_dict(),
        }
        return json.dumps(doc, indent=2)


def map_eta_fns(maps: list[EfficiencyMap]):
    """Bilinear-lookup efficiency callables from per-joint maps."""
    return [m.interp_eta for m in maps]


def outer_cost(
    weights,
    problem: NlpProblem,
    dynamics,
    eta_fns,
    initial_guess=None,
):
    """Inner solve at one weight vector plus the outer objective.

    Returns (F, TrajectoryResult); F is negated nowhere — callers maximize
    it (a minimizing search loop accumulates the negative).
    """
    result = solve_inner(problem, dynamics, weights=weights, initial_guess=initial_guess)
    value, eta, flagged = efficiency_objective(result, eta_fns)
    return value, result, eta, flagged


def _solve_point(model, problem, weights, eta_maps, initial_guess):
    dynamics = lambda q, qd, qdd: rnea(model, q, qd, qdd)
    eta_fns = map_eta_fns(eta_maps)
    value, result, eta, flagged = outer_cost(weights, problem, dynamics, eta_fns, initial_guess)
    return value, result, eta, flagged


def _grid_worker(args):
    model, problem, weights, eta_maps, initial_guess = args
    value, result, eta, flagged = _solve_point(model, problem, weights, eta_maps, initial_guess)
    return value, result, eta, flagged


def solve_outer(
    config: BilevelConfig,
    problem: NlpProblem,
    model: ChainModel,
    eta_maps: list[EfficiencyMap],
    jobs: int = 1,
) -> BilevelResult:
    """Run the leader-level weight search.

    Grid mode evaluates every point of the weight-box lattice (optionally
    in parallel; each point warm-starts from one shared base solve so the
    outcome is independent of evaluation order).  Nelder-Mead mode runs a
    sequential projected simplex search from the box center.
    """
    eta_fns = map_eta_fns(eta_maps)
    dynamics = lambda q, qd, qdd: rnea(model, q, qd, qdd)
    lo, hi = config.weight_lower, config.weight_upper

    # shared deterministic warm start from the box center
    center = 0.5 * (lo + hi)
    base = solve_inner(problem, dynamics, weights=center)
    warm = (
        np.concatenate([base.control_points.ravel(), [base.t_final]])
        if config.warm_start
        else None
    )

    trace = []
    evaluations = []

    if config.method == "grid":
        axes = [np.linspace(lo[i], hi[i], config.grid_points) for i in range(len(lo))]
        mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
        tasks = [(model, problem, w, eta_maps, warm) for w in mesh]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_grid_worker, tasks))
        else:
            results = [_grid_worker(t) for t in tasks]
        for w, (value, result, eta, flagged) in zip(mesh, results):
            ok = result.converged
            trace.append((np.array(w), value if ok else float("-inf"), ok))
            evaluations.append((np.array(w), value, result, eta, flagged, ok))
    else:
        from scipy.optimize import minimize

        def neg_f(w_raw):
            w = np.clip(w_raw, lo, hi)
            value, result, eta, flagged = _solve_point(model, problem, w, eta_maps, warm)
            ok = result.converged
            trace.append((w.copy(), value if ok else float("-inf"), ok))
            evaluations.append((w.copy(), value, result, eta, flagged, ok))
            return -value if ok else 1e6

        minimize(
            neg_f,
            center,
            method="Nelder-Mead",
            options={"maxfev": config.maxiter, "xatol": 1e-3, "fatol": 1e-6},
        )

    valid = [e for e in evaluations if e[5]]
    if not valid:
        raise RuntimeError("no outer candidate produced a converged inner solve")
    best = max(valid, key=lambda e: e[1])
    w_opt, value, result, eta, flagged, _ = best
    summary = efficiency_summary(result.v_x, result.f_x, eta_fns)
    return BilevelResult(
        weights_opt=w_opt,
        outer_value=value,
        inner=result,
        summary=summary,
        trace=trace,
        n_inner_solves=len(trace) + 1,
        eta_samples=eta,
        flagged_samples=flagged,
    )
