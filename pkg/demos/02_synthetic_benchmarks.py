"""
Fitting the four synthetic benchmark shapes
===========================================

Trains the full recipe on each named generator at a reduced size, prints
a small results table, and exports a decision-region picture for the
moons problem. Expect roughly half a minute of work.
"""

import os

import numpy as np

from planemix import diagnostics, workflow
from planemix.svgplot import grid_svg
from planemix.training import TrainConfig

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# a lighter budget than the protocol defaults keeps this demo snappy
config = TrainConfig(max_epochs=80, seed=0)

print(f"{'dataset':<10} {'lift':<22} {'planes':<12} {'test acc':<9} ece")
kept = {}
for name in workflow.GENERATORS:
    data = workflow.generate_dataset(name, n=1500, seed=0)
    train, val, test = workflow.split_dataset(data, 0)
    result = workflow.train_classifier(train, val, config=config)
    metrics = workflow.evaluate_model(result.model, test,
                                      result.stored_temperature)
    kept[name] = (result, test)
    print(f"{name:<10} {result.lift_description:<22} "
          f"{str(list(result.budget.per_class)):<12} "
          f"{metrics['accuracy']:<9.4f} {metrics['ece_scaled']:.4f}")

# Render where the moons model draws its boundaries. The SVG is written
# by the library itself, no plotting stack required.
result, test = kept["moons"]
bounds = diagnostics.bounds_from(test.features)
grid = diagnostics.decision_grid(result.model, bounds, resolution=160)
path = os.path.join(OUT, "moons_decision_regions.svg")
with open(path, "w") as fh:
    fh.write(grid_svg(grid, test.features, test.labels,
                      title="moons decision regions"))
print(f"\nwrote {path}")
