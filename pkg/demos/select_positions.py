"""Pick secondary scanner positions from a primary scan.

Cells must have enough ground nearby and an azimuth profile at least as good
as the minimum profile (here all zeros, so only the density filter bites).
"""
from slr import ScannerConfig, SceneConfig, candidate_cells, generate_dense_scene, select_positions, simulate_scan
from slr.selection import SelectionConfig

dense = generate_dense_scene(SceneConfig.scaled(10.0, 0.02, 12, seed=0))
primary = simulate_scan(dense, (0.0, 0.0, 0.0), ScannerConfig(0.1, 0.1))

for min_count in (10, 100, 400):
    cfg = SelectionConfig(cell_size=1.0, density_radius=1.0, min_ground_count=min_count, ground_radius=1.0)
    cells = candidate_cells(primary, config=cfg)
    print(f"min_ground_count={min_count:>3}: {len(cells)} candidate cells")

cells = candidate_cells(primary, config=SelectionConfig(1.0, 1.0, 100, ground_radius=1.0))
positions = select_positions(cells, 5, seed=0)
print("five positions (seed 0):")
for x, y in positions:
    print(f"  ({x:6.2f}, {y:6.2f})")
