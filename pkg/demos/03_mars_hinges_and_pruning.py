"""MARS on a kinked target: the forward pass overgrows, GCV pruning cuts back.

    python demos/03_mars_hinges_and_pruning.py
"""

import numpy as np

from stockcast.mars import backward_pass, forward_pass, mars_predict


def describe(term):
    if not term.hinges:
        return "1"
    parts = []
    for h in term.hinges:
        parts.append(f"max(0, x{h.feature} - {h.knot:.3f})" if h.sign > 0 else f"max(0, {h.knot:.3f} - x{h.feature})")
    return " * ".join(parts)


rng = np.random.default_rng(8)
X = rng.uniform(size=(300, 2))
# x1 is pure noise; the response bends at x0 = 0.3 and again at 0.7
y = 2 * np.maximum(0, X[:, 0] - 0.3) - 4 * np.maximum(0, X[:, 0] - 0.7) + 0.05 * rng.normal(size=300)

candidate = forward_pass(X, y, max_terms=15)
print(f"forward pass: {len(candidate.terms)} terms, rss {candidate.rss:.4f}, gcv {candidate.gcv:.6f}")
pruned = backward_pass(candidate, X, y)
print(f"after pruning: {len(pruned.terms)} terms, rss {pruned.rss:.4f}, gcv {pruned.gcv:.6f}\n")
for c, t in zip(pruned.coeffs, pruned.terms):
    print(f"  {c:+8.4f} * {describe(t)}")

grid = np.column_stack([np.linspace(0, 1, 11), np.full(11, 0.5)])
print("\n x0   fitted   true")
for row, yhat in zip(grid, mars_predict(pruned, grid)):
    true = 2 * max(0, row[0] - 0.3) - 4 * max(0, row[0] - 0.7)
    print(f"{row[0]:.1f}  {yhat: .4f}  {true: .4f}")
