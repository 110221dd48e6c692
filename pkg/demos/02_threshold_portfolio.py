"""
Threshold portfolios on a synthetic universe
============================================

Train an LSTM on the bundled ten-asset fixture, then hold each month the
assets whose forecast clears a threshold. Raising the threshold narrows
the portfolio; an equally weighted portfolio of everything is the
baseline.
"""

import tempfile

from tbp.evaluation import format_summary, hit_ratio_summary, hit_ratios_by_asset
from tbp.fixtures import write_universe
from tbp.forecast import forecast_panel
from tbp.market_data import load_panel, make_windows, split_panel, stack_samples
from tbp.portfolio import TbpConfig, backtest, ewp_backtest
from tbp.rnn import NetworkConfig, init_model, train

data_dir = tempfile.mkdtemp()
write_universe(data_dir, seed=7)
panel = load_panel(data_dir, "last")
split = split_panel(panel)
print(f"{panel.n_assets} assets, {panel.n_months} months")

# %%
# Fit on the training months, stop early on the validation months
X, y = stack_samples(make_windows(panel, split.train))
Xv, yv = stack_samples(make_windows(panel, split.validation))
model, history = train(init_model(NetworkConfig(hidden=16, seed=7)), X, y, Xv, yv)
print(f"{len(history.epochs)} epochs, best at {history.best_epoch}")

# %%
# Directional accuracy on the test months
fc = forecast_panel(model, panel, split.test).realized_only()
print("hit ratio (mean, SD):", format_summary(*hit_ratio_summary(hit_ratios_by_asset(fc.records()))))

# %%
# Backtests: the equally weighted baseline, then rising thresholds
ewp = ewp_backtest(fc.months, fc.assets, fc.realized)
print(f"EWP         mean {ewp.stats['mean']:.4f}  SD {ewp.stats['sd']:.4f}  wealth {ewp.wealth[-1]:.3f}")
for theta in (0.0, 0.005, 0.01, 0.015, 0.02):
    res = backtest(fc.months, fc.assets, fc.predictions, fc.realized, TbpConfig("long", theta))
    s = res.stats
    print(f"theta {theta:<6} mean {s['mean']:.4f}  SD {s['sd']:.4f}  "
          f"assets {s['average_assets']:.2f}  wealth {res.wealth[-1]:.3f}")
