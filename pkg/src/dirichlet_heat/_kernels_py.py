"""Pure-Python/numpy fallbacks with the same signatures as the compiled kernels."""

import math

import numpy as np


def sensor_scan(r_fixed: int, bits: int, K: int):
    """min_{k<=K} k |sin(pi {k r})| for r = r_fixed / 2^bits (exact integer reduction)."""
    modulus = 1 << bits
    mask = modulus - 1
    acc = 0
    best, arg = math.inf, 0
    for k in range(1, K + 1):
        acc = (acc + r_fixed) & mask
        g = acc if acc < modulus - acc else modulus - acc
        if g <= k:
            val = 0.0
        else:
            val = float(k) * math.sin(math.pi * (g / modulus))
        if val < best:
            best, arg = val, k
    return best, arg


def sensor_scan_128(hi: int, lo: int, K: int):
    return sensor_scan((hi << 64) | lo, 128, K)


def dirichlet_sup(coeffs, lambdas, times):
    c = np.asarray(coeffs, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    t = np.asarray(times, dtype=float)
    vals = np.abs(np.exp(-np.outer(t, lam)) @ c)
    j = int(np.argmax(vals))
    return float(vals[j]), j


def dirichlet_sup_many(coeffs, lambdas, times, out):
    c = np.asarray(coeffs, dtype=float)
    table = np.exp(-np.outer(np.asarray(times, dtype=float), np.asarray(lambdas, dtype=float)))
    out[:] = np.max(np.abs(c @ table.T), axis=1)
