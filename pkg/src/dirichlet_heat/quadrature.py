"""Gauss-Legendre rules and monotone cubic interpolation at mpmath precision."""

from __future__ import annotations

import functools
import math

from mpmath import mp

PANEL_NODES = 32


@functools.lru_cache(maxsize=64)
def _legendre_rule(n: int, prec: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    with mp.workprec(prec + 20):
        nodes, weights = [], []
        eps = mp.ldexp(1, -prec - 10)
        for i in range(1, n // 2 + 1):
            x = mp.cos(mp.pi * (i - mp.mpf(1) / 4) / (n + mp.mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mp.one, x
                for k in range(2, n + 1):
                    p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < eps:
                    break
            p0, p1 = mp.one, x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            w = 2 / ((1 - x * x) * dp * dp)
            nodes.extend((-x, x))
            weights.extend((w, w))
        if n % 2:
            p0, p1 = mp.one, mp.zero
            for k in range(2, n + 1):
                p0, p1 = p1, (-(k - 1) * p0) / k
            dp = n * (-p0)
            nodes.append(mp.zero)
            weights.append(2 / (dp * dp))
        order = sorted(range(n), key=lambda j: nodes[j])
        return (tuple(+nodes[j] for j in order), tuple(+weights[j] for j in order))


def gauss_legendre(n: int, a=0, b=1):
    """n-point Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = _legendre_rule(int(n), mp.prec)
    a, b = mp.mpf(a), mp.mpf(b)
    half, mid = (b - a) / 2, (a + b) / 2
    return [mid + half * xi for xi in x], [half * wi for wi in w]


def composite_gauss_legendre(order: int, a=0, b=1, panel_nodes: int = PANEL_NODES):
    """Composite rule with at least ``order`` nodes, ``panel_nodes`` per panel.

    Returns ``(nodes, weights)`` sorted increasingly.
    """
    panels = max(1, math.ceil(order / panel_nodes))
    a, b = mp.mpf(a), mp.mpf(b)
    h = (b - a) / panels
    nodes, weights = [], []
    for p in range(panels):
        x, w = gauss_legendre(panel_nodes, a + p * h, a + (p + 1) * h)
        nodes.extend(x)
        weights.extend(w)
    return nodes, weights


def graded_gauss_legendre(order: int, T, rate, panel_nodes: int = PANEL_NODES):
    """Composite rule on [0, T] graded toward 0 for integrands like exp(-rate t).

    Panels have width max(4/rate, t/2) at their left end t, so every panel
    sees at most a bounded exponential variation relative to its size.
    Panels are split evenly if fewer than ``order`` nodes result.
    """
    T, rate = mp.mpf(T), mp.mpf(rate)
    if rate <= 0:
        return composite_gauss_legendre(order, 0, T, panel_nodes)
    base = 4 / rate
    edges = [mp.zero]
    while edges[-1] < T:
        t = edges[-1]
        nxt = t + max(base, t / 2)
        if nxt >= T or T - nxt < base / 2:
            nxt = T
        edges.append(nxt)
    split = max(1, math.ceil(order / (panel_nodes * (len(edges) - 1))))
    nodes, weights = [], []
    for lo, hi in zip(edges, edges[1:]):
        h = (hi - lo) / split
        for p in range(split):
            x, w = gauss_legendre(panel_nodes, lo + p * h, lo + (p + 1) * h)
            nodes.extend(x)
            weights.extend(w)
    return nodes, weights


class Pchip:
    """Piecewise monotone cubic (Fritsch-Carlson) interpolant in mp arithmetic."""

    def __init__(self, x, y):
        n = len(x)
        if n < 2:
            raise ValueError("need at least two points")
        self.x = [mp.mpf(v) for v in x]
        self.y = [mp.mpf(v) for v in y]
        h = [self.x[i + 1] - self.x[i] for i in range(n - 1)]
        delta = [(self.y[i + 1] - self.y[i]) / h[i] for i in range(n - 1)]
        d = [mp.zero] * n
        if n == 2:
            d[0] = d[1] = delta[0]
        else:
            for i in range(1, n - 1):
                if delta[i - 1] * delta[i] <= 0:
                    d[i] = mp.zero
                else:
                    w1 = 2 * h[i] + h[i - 1]
                    w2 = h[i] + 2 * h[i - 1]
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
            d[0] = self._end_slope(h[0], h[1], delta[0], delta[1])
            d[-1] = self._end_slope(h[-1], h[-2], delta[-1], delta[-2])
        self.h, self.delta, self.d = h, delta, d

    @staticmethod
    def _end_slope(h0, h1, m0, m1):
        d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
        if mp.sign(d) != mp.sign(m0):
            return mp.zero
        if mp.sign(m0) != mp.sign(m1) and abs(d) > abs(3 * m0):
            return 3 * m0
        return d

    def __call__(self, t):
        t = mp.mpf(t)
        x = self.x
        if t <= x[0]:
            i = 0
        elif t >= x[-1]:
            i = len(x) - 2
        else:
            lo, hi = 0, len(x) - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if x[mid] <= t:
                    lo = mid
                else:
                    hi = mid
            i = lo
        h = self.h[i]
        s = (t - x[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.y[i] + h10 * h * self.d[i]
                + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
