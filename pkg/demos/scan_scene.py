"""Generate a small synthetic scene, scan it from the centre and reposition.

Prints how many points each scan keeps and its ground share, which depends
on how close the simulated scanner stands to the rectangles.
"""
import json

import numpy as np

from slr import ScannerConfig, SceneConfig, generate_dense_scene, ground_fraction, simulate_scan, slr

scene = SceneConfig.scaled(10.0, 0.02, 12, seed=0)
dense = generate_dense_scene(scene)
print(f"dense scene: {len(dense):,} points")

primary = simulate_scan(dense, (0.0, 0.0, 0.0), ScannerConfig(0.1, 0.1))
print(f"primary scan at the centre: {len(primary):,} points, ground fraction {ground_fraction(primary).fraction:.3f}")

coarse = ScannerConfig(0.5, 0.5)
for xy in [(0.0, 0.0), (3.0, 0.0), (0.0, -6.0)]:
    moved = slr(primary, xy, coarse, ground_radius=0.5)
    origin = np.round(json.loads(moved.meta["origin"]), 3)
    print(f"SLR scan at {xy}: {len(moved):,} points, origin {origin}, "
          f"ground fraction {ground_fraction(moved).fraction:.3f}")
