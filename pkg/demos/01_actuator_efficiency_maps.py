"""Build and inspect the efficiency maps of the three joint actuators.

Each map solves the steady operating point of the motor + drive + screw
stack on a grid of axial force and linear speed, totals the losses, and
rates the power conversion.  The script prints a compact text rendering
of each map and writes the CSV/JSON artifacts next to itself.
"""

from pathlib import Path

import numpy as np

from emlaopt import build_efficiency_map, map_to_csv, map_to_json
from emlaopt.presets import actuators, default_map_grid

out_dir = Path(__file__).with_suffix("") .name + "_out"
out_dir = Path(out_dir)
out_dir.mkdir(exist_ok=True)

for emla in actuators():
    force, velocity = default_map_grid(emla)
    emap = build_efficiency_map(emla, force, velocity)
    eta = emap.eta[emap.feasible]
    print(f"\n=== {emla.name} ===")
    print(f"grid: {len(force)} forces x {len(velocity)} speeds; "
          f"eta in [{eta.min():.3f}, {eta.max():.3f}]; "
          f"feasible {emap.feasible.mean() * 100:.0f}% of cells")
    i, j = np.unravel_index(np.nanargmax(np.where(emap.feasible, emap.eta, -1)), emap.eta.shape)
    print(f"best cell: f = {force[i] / 1e3:.1f} kN, v = {velocity[j] * 1e3:.0f} mm/s, "
          f"eta = {emap.eta[i, j]:.3f}")

    # coarse text picture: rows = force (down), cols = speed (right)
    print("eta map (rows: force low->high, cols: speed low->high):")
    for fi in range(0, len(force), len(force) // 8):
        row = "".join(
            f"{emap.eta[fi, vj]:5.2f}" if emap.feasible[fi, vj] else "    -"
            for vj in range(0, len(velocity), len(velocity) // 10)
        )
        print(f"  {force[fi] / 1e3:6.1f} kN |{row}")

    (out_dir / f"{emla.name}_map.csv").write_text(map_to_csv(emap))
    (out_dir / f"{emla.name}_map.json").write_text(map_to_json(emap))
print(f"\nwrote maps to {out_dir}/")
