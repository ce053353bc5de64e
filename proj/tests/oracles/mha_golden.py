#!/usr/bin/env python3
"""Golden output for the seed-42 MHA instance used in test_reference_kernel.

Regenerates the exact inputs the C++ kernel draws (std::mt19937_64, values
(u >> 11) * 2^-53 - 0.5, row-major fill, weights then input) and evaluates
softmax(Q K^T / sqrt(d_qk)) V per head followed by the output projection
with numpy.

Usage: python3 tests/oracles/mha_golden.py
"""

import numpy as np

MASK = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def __call__(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def check_generator():
    g = MT19937_64(5489)
    for _ in range(9999):
        g()
    assert g() == 9981545732273789042


def matrix(rng, rows, cols):
    vals = [(rng() >> 11) * 2.0**-53 - 0.5 for _ in range(rows * cols)]
    return np.array(vals, dtype=np.float64).reshape(rows, cols)


def main():
    check_generator()
    d_model, n_heads, d_qk, d_v, length = 16, 2, 4, 4, 3
    rng = MT19937_64(42)
    wq, wk, wv = [], [], []
    for _ in range(n_heads):
        wq.append(matrix(rng, d_model, d_qk))
        wk.append(matrix(rng, d_model, d_qk))
        wv.append(matrix(rng, d_model, d_v))
    wo = matrix(rng, n_heads * d_v, d_model)
    x = matrix(rng, length, d_model)

    heads = []
    for h in range(n_heads):
        q, k, v = x @ wq[h], x @ wk[h], x @ wv[h]
        z = q @ k.T / np.sqrt(d_qk)
        z = z - z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        heads.append(p @ v)
    y = np.concatenate(heads, axis=1) @ wo
    for row in y:
        print(",\n".join("    " + repr(float(v)) for v in row) + ",")


if __name__ == "__main__":
    main()
