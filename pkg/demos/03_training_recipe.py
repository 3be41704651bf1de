"""
Inside the training loop
========================

The optimizer anneals the pooling sharpness, follows a cosine learning
rate, regularizes idle planes harder than busy ones, and stops early on
a stalled validation loss. All of that is visible in the epoch log, so
this script fits one model and reads the story back out of the log.
"""

import numpy as np

from planemix import workflow
from planemix.training import TrainConfig

data = workflow.generate_dataset("moons", n=1500, seed=3)
train, val, test = workflow.split_dataset(data, 3)

config = TrainConfig(seed=3, max_epochs=120, patience=10)
result = workflow.train_classifier(train, val, config=config)
log = result.log

print(f"init strategy: {log.init_strategy}")
print(f"epochs run:    {len(log.epochs)} of {config.max_epochs}"
      + ("  (early stop)" if log.stopped_early else ""))
print(f"best val loss: {log.best_val_loss:.5f} at epoch {log.best_epoch}")

# sharpness ramps over the first half of the budget, then holds
print("\nepoch  alpha   lr        train     val")
marks = [0, len(log.epochs) // 4, len(log.epochs) // 2, len(log.epochs) - 1]
for i in sorted(set(marks)):
    r = log.epochs[i]
    print(f"{r.epoch:>5}  {r.alpha:.3f}  {r.lr:.6f}  {r.train_loss:.5f}"
          f"   {r.val_loss:.5f}")

# the plane usage spread shows the usage-aware ridge doing its job:
# nothing collapses to zero traffic
first, last = log.epochs[0], log.epochs[-1]
print(f"\nusage spread epoch {first.epoch}: "
      f"[{first.usage_min:.3f}, {first.usage_max:.3f}]")
print(f"usage spread epoch {last.epoch:>3}: "
      f"[{last.usage_min:.3f}, {last.usage_max:.3f}]")

metrics = workflow.evaluate_model(result.model, test,
                                  result.stored_temperature)
print(f"\ntest accuracy {metrics['accuracy']:.4f}, "
      f"stored sharpness {result.model.alpha}")
