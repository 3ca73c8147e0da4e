#!/usr/bin/env python3
"""Forward pass of a small tanh MLP in numpy, for the frozen values in
tests/unit/test_nn.cpp. Parameters are laid out per layer as an [in x out]
row-major weight block followed by `out` biases; values are
0.3 * sin(1.7 * i + 0.2) over the flat index i."""
import numpy as np

sizes = [5, 7, 6, 3]
n = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
flat = 0.3 * np.sin(1.7 * np.arange(n) + 0.2)
x = np.stack([np.cos(0.9 * np.arange(5)), np.sin(0.4 * np.arange(5) + 1.0)])

off = 0
h = x
for l, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
    W = flat[off:off + a * b].reshape(a, b)
    off += a * b
    bias = flat[off:off + b]
    off += b
    h = h @ W + bias
    if l < len(sizes) - 2:
        h = np.tanh(h)
for row in h:
    print(", ".join(repr(float(v)) for v in row))
