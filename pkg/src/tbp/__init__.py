"""Threshold-based portfolios built on recurrent return forecasts.

Subpackages and modules:

- ``tbp.market_data``: Yahoo-style daily CSV ingestion, monthly bars,
  percent-change panels, splits and sliding windows.
- ``tbp.rnn``: S-RNN / LSTM / GRU cells, BPTT, ADAM, training, checkpoints.
- ``tbp.evaluation``: hit ratio and threshold-conditional accuracy.
- ``tbp.portfolio``: TBP selection, equal weighting, monthly backtests.
- ``tbp.frontier``: TBP frontiers, cubic fits, threshold lookup.
- ``tbp.cli``: the ``tbp`` command.
"""

__version__ = "0.1.0"
