"""Distance histograms of repositioned scans at three scanner heights.

The ground peak moves outwards as the scanner rises, while the non-ground
histogram stays roughly put.
"""
from slr import ScannerConfig, SceneConfig, generate_dense_scene, simulate_scan
from slr.nss import height_sweep

dense = generate_dense_scene(SceneConfig.scaled(10.0, 0.02, 12, seed=0))
primary = simulate_scan(dense, (0.0, 0.0, 0.0), ScannerConfig(0.1, 0.1))

heights = [0.5, 1.65, 3.0]
sweep = height_sweep(primary, (2.0, 2.0), heights, ScannerConfig(0.5, 0.5), max_distance=8.0, ground_radius=0.5)
for h, (ground, non_ground) in zip(heights, sweep):
    print(f"height {h:4.2f} m: ground peak {ground.peak_distance:5.2f} m, "
          f"non-ground peak {non_ground.peak_distance:5.2f} m")
