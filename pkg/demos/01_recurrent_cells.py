"""
Recurrent cells and their gradients
===================================

A many-to-one LSTM maps a window of monthly OHLCV changes to one number.
Here we run one forward pass, backpropagate through time, and compare a
few gradient entries against central differences.
"""

import numpy as np

from tbp.rnn import NetworkConfig, backward, forward, init_model, loss

# a small LSTM: 4 hidden units reading 3 features over 6 steps
cfg = NetworkConfig(cell="lstm", hidden=4, input_dim=3, seq_len=6, dropout_rate=0.0, seed=1)
model = init_model(cfg)
print("parameters:", model.n_parameters())

rng = np.random.default_rng(0)
X = rng.normal(size=(8, 6, 3))
y = rng.normal(0, 0.05, 8)

# %%
# Forward and backward
preds, cache = forward(model, X)
grads = backward(model, cache, y)
print("loss:", loss(preds, y))

# %%
# Central differences on the forget-gate input weights
W = model.parameters()["layers.0.W_f"]
h = 1e-5
for idx in [(0, 0), (2, 1), (3, 2)]:
    old = W[idx]
    W[idx] = old + h
    up = loss(forward(model, X)[0], y)
    W[idx] = old - h
    down = loss(forward(model, X)[0], y)
    W[idx] = old
    numeric = (up - down) / (2 * h)
    print(f"W_f{idx}: analytic {grads['layers.0.W_f'][idx]: .10f}  numeric {numeric: .10f}")
