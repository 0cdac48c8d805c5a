"""Generate point-to-point trajectories under different criterion weights.

The inner-level generator parameterizes the three piston strokes as
clamped B-splines and minimizes a weighted sum of the squared-force
(effort) and squared-power criteria subject to stroke, speed, force and
final-time boxes.  Watch how the weighting moves the solution: effort
pressure shortens the move, power pressure stretches it.
"""

import numpy as np

from emlaopt import solve_inner
from emlaopt.manipulator import rnea
from emlaopt.presets import benchmark_problem, default_manipulator

model = default_manipulator()
problem = benchmark_problem(model)
dynamics = lambda q, qd, qdd: rnea(model, q, qd, qdd)

print(f"move: strokes {problem.q_init} -> {problem.q_final}, "
      f"duration free in [{problem.t_lower}, {problem.t_upper}] s")
print(f"{'weights':>14} | {'t_final':>7} | {'effort':>9} | {'power':>9} | "
      f"{'peak |f| [kN]':>13} | {'peak |v| [mm/s]':>15}")
for w in ([1.0, 0.0], [0.7, 0.3], [0.5, 0.5], [0.3, 0.7], [0.0, 1.0]):
    res = solve_inner(problem, dynamics, weights=np.array(w))
    assert res.converged, w
    print(f"{str(w):>14} | {res.t_final:7.2f} | {res.psi_raw['effort']:9.3e} | "
          f"{res.psi_raw['power']:9.3e} | {np.abs(res.f_x).max() / 1e3:13.1f} | "
          f"{np.abs(res.v_x).max() * 1e3:15.0f}")

res = solve_inner(problem, dynamics, weights=np.array([0.5, 0.5]))
print(f"\nbalanced solution: cost {res.cost:.4f}, constraint violation "
      f"{res.constraint_violation:.1e}, {res.outer_iterations} SQP iterations")
print("force ranges per joint [kN]:",
      np.round(res.f_x.min(axis=0) / 1e3, 1), "to", np.round(res.f_x.max(axis=0) / 1e3, 1))
