"""Similarity of SLR scans to true scans as a function of distance moved.

Small version of the validation experiment: 12 rectangles in a 10 m disk,
primary scan at 0.1 deg, secondary scans at 0.5 deg.  Takes a few seconds.
"""
import numpy as np

from slr import ScannerConfig, SceneConfig, run_experiment

result = run_experiment(SceneConfig.scaled(10.0, 0.02, 12, seed=0), ScannerConfig(0.1, 0.1),
                        ScannerConfig(0.5, 0.5), n_positions=12, seed=0, workers=4)
order = np.argsort(result.distances)
print(" distance  similarity")
for r in (result.records[i] for i in order):
    print(f"{r.scanner_distance:9.2f}  {r.similarity:10.4f}")
print("scaling:", {k: v for k, v in result.meta.items() if "scale" in k})
