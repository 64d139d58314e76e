"""Train the stacked LSTM on a scaled sine wave and watch the RMSE fall.

Windows of seven values predict the eighth. The per-epoch history is the
eval-mode RMSE in scaled units.

    python demos/04_training_an_lstm.py
"""

import numpy as np

from stockcast.data import apply_minmax, build_windows, fit_minmax
from stockcast.neural import NetSpec, TrainConfig, predict_series, train

wave = np.sin(2 * np.pi * np.arange(500) / 50) + 0.3 * np.sin(2 * np.pi * np.arange(500) / 13)
scaler = fit_minmax(wave[:400])
scaled = apply_minmax(scaler, wave)
train_set = build_windows(scaled[:400], 7)
test_set = build_windows(scaled[400:], 7)

spec = NetSpec(kind="lstm", widths=(32, 16), dropout=0.2)
params, history = train(spec, train_set, TrainConfig(epochs=100, batch=64, seed=1))
for epoch in (1, 5, 10, 25, 50, 100):
    print(f"epoch {epoch:3d}: train RMSE {history[epoch - 1]:.4f}")

pred = predict_series(spec, params, test_set.inputs)
print(f"\n{len(pred)} test windows from {len(wave) - 400} held-out points, "
      f"test RMSE {np.sqrt(np.mean((pred - test_set.targets) ** 2)):.4f} (scaled)")
