"""
Choosing a threshold from a risk target
=======================================

Each threshold gives a (risk, return) point over the trailing months. A
cubic through those points summarizes the frontier, and a risk target is
turned back into a threshold by interpolating between grid points.
"""

import tempfile

from tbp.errors import TargetOutOfRange
from tbp.fixtures import write_universe
from tbp.frontier import fit_to_csv, frontier_to_csv, manage_step
from tbp.market_data import load_panel, make_windows, split_panel, stack_samples
from tbp.rnn import NetworkConfig, init_model, train

data_dir = tempfile.mkdtemp()
write_universe(data_dir, seed=3)
panel = load_panel(data_dir, "last")
split = split_panel(panel)

X, y = stack_samples(make_windows(panel, split.train))
Xv, yv = stack_samples(make_windows(panel, split.validation))
model, _ = train(init_model(NetworkConfig(hidden=16, seed=3)), X, y, Xv, yv)

# %%
# Ask for a monthly risk of 0.05, falling back to the nearest reachable point
try:
    rec, frontier = manage_step(model, panel, 0.05, split)
except TargetOutOfRange as exc:
    print(f"0.05 is out of reach; nearest point has risk {exc.nearest.risk:.4f}")
    rec, frontier = manage_step(model, panel, exc.nearest.risk, split)

print(frontier_to_csv(frontier.points))
print(fit_to_csv(frontier.fit))

# %%
# The recommendation for the month after the panel ends
print(f"theta {rec.theta:.5f}: expected risk {rec.expected_risk:.4f}, "
      f"return {rec.expected_return:.4f}")
print("hold:", ", ".join(a for a, _ in rec.members) or "cash")
if rec.candidates:
    print("other thresholds reaching the target:", rec.candidates)
