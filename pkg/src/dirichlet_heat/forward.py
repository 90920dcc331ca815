"""Forward maps: Dirichlet series, 1-D fractional heat solutions, boundary
fluxes, tensor-product solutions, and noisy sampling.

Normalization: on (0, mu*pi) the datum is f(x) = sum_k fhat_k sin(k x / mu) with
fhat_k = 2/(mu pi) int f(x) sin(k x / mu) dx, and the k-th mode decays like
exp(-(k/mu)^(2 alpha) t).
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from mpmath import mp

from .errors import DomainError
from .precision import mpf_to_str
from .quadrature import composite_gauss_legendre, gauss_legendre, graded_gauss_legendre
from .sequences import CoefficientSequence, EigenvalueSequence, norm


@dataclass(frozen=True)
class InitialDatum:
    """Sine-Fourier coefficients of an initial temperature on (0, mu*pi)."""

    coeffs: CoefficientSequence
    mu: object = 1
    regularity: tuple | None = None  # (theta, m): f in m * ball of H^theta

    def __post_init__(self):
        if not isinstance(self.coeffs, CoefficientSequence):
            object.__setattr__(self, "coeffs", CoefficientSequence(tuple(self.coeffs)))
        object.__setattr__(self, "mu", mp.mpf(self.mu))
        if self.mu <= 0:
            raise DomainError("mu must be positive")

    @classmethod
    def from_function(cls, f: Callable, mu=1, modes=32, order=128):
        """Project a callable onto the first ``modes`` sine modes by quadrature."""
        mu = mp.mpf(mu)
        x, w = composite_gauss_legendre(order, 0, mu * mp.pi)
        fx = [mp.mpf(f(xi)) for xi in x]
        c = 2 / (mu * mp.pi)
        coeffs = [c * mp.fsum(wi * fi * mp.sin(k * xi / mu) for xi, wi, fi in zip(x, w, fx))
                  for k in range(1, modes + 1)]
        return cls(CoefficientSequence(tuple(coeffs)), mu)

    def regularity_ok(self) -> bool:
        if self.regularity is None:
            return True
        theta, m = self.regularity
        return norm(self.coeffs, _h(theta)) <= mp.mpf(m) * (1 + mp.ldexp(1, -mp.prec // 2))

    def l2_norm(self):
        """||f||_{L2(0, mu pi)} = sqrt(mu pi / 2 * sum fhat_k^2)."""
        return mp.sqrt(self.mu * mp.pi / 2) * norm(self.coeffs, "l2")

    def inner(self, other: "InitialDatum"):
        """L2(0, mu pi) inner product."""
        n = max(len(self.coeffs), len(other.coeffs))
        return self.mu * mp.pi / 2 * mp.fsum(self.coeffs[k] * other.coeffs[k]
                                              for k in range(1, n + 1))

    def __call__(self, x):
        x = mp.mpf(x)
        return mp.fsum(c * mp.sin(k * x / self.mu) for k, c in enumerate(self.coeffs, start=1))

    def sup_norm(self, points: int = 2001):
        """Max |f| over a uniform grid of the interval (float estimate)."""
        xs = np.linspace(0.0, float(self.mu * mp.pi), points)
        c = np.array([float(v) for v in self.coeffs])
        k = np.arange(1, len(c) + 1)
        vals = np.sin(np.outer(xs, k) / float(self.mu)) @ c
        return float(np.max(np.abs(vals)))


def _h(theta):
    from .sequences import SequenceNormKind
    return SequenceNormKind.h(theta)


@dataclass(frozen=True)
class TensorDatum:
    """f = f_1 (x) ... (x) f_d on prod_i (0, mu_i pi)."""

    factors: tuple
    non_resonant: bool = True

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 1:
            raise ValueError("need at least one factor")

    @property
    def dim(self):
        return len(self.factors)

    @property
    def scales(self):
        return tuple(f.mu for f in self.factors)

    def l2_norm(self):
        return mp.fprod(f.l2_norm() for f in self.factors)

    def l2_norm_direct(self):
        """sqrt(prod(mu_i pi/2) * sum_K prod_i fhat_{k_i}^2) summed over the full index grid."""
        scale = mp.fprod(f.mu * mp.pi / 2 for f in self.factors)
        total = mp.fsum(mp.fprod(c * c for c in combo)
                        for combo in itertools.product(*[f.coeffs.entries for f in self.factors]))
        return mp.sqrt(scale * total)

    def inner(self, other: "TensorDatum"):
        return mp.fprod(f.inner(g) for f, g in zip(self.factors, other.factors))

    def distance(self, other: "TensorDatum"):
        """||self - other||_{L2(Omega)} for two tensor data on the same box."""
        sq = self.inner(self) + other.inner(other) - 2 * self.inner(other)
        return mp.sqrt(max(sq, mp.zero))


@dataclass(frozen=True)
class DirichletSample:
    """Noisy evaluations of a Dirichlet series at fixed times in [0, T].

    ``weights`` marks the times as a quadrature rule on [0, T]; ``truth``
    keeps the noiseless values for test-mode diagnostics.
    """

    times: tuple
    values: tuple
    noise_level: object = 0
    noise_norm: str = "sup"
    horizon: object = 1
    seed: int | None = None
    weights: tuple | None = None
    truth: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(mp.mpf(t) for t in self.times))
        object.__setattr__(self, "values", tuple(mp.mpf(v) for v in self.values))
        object.__setattr__(self, "horizon", mp.mpf(self.horizon))
        object.__setattr__(self, "noise_level", mp.mpf(self.noise_level))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(mp.mpf(w) for w in self.weights))
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")
        if not self.times:
            raise ValueError("empty sample")
        if self.noise_norm not in ("sup", "L2"):
            raise ValueError("noise_norm must be 'sup' or 'L2'")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if self.times[0] < 0 or self.times[-1] > self.horizon:
            raise DomainError("times must lie in [0, T]")

    def __len__(self):
        return len(self.times)

    def sup(self, window=None):
        """max |value| over samples, optionally restricted to a union of intervals."""
        vals = [abs(v) for t, v in zip(self.times, self.values) if _in_window(t, window)]
        return max(vals) if vals else mp.zero

    def lookup(self, t, tol=None):
        """Value at time ``t`` (within ``tol``) or ``None``."""
        t = mp.mpf(t)
        tol = tol if tol is not None else mp.ldexp(1, -mp.prec // 2) * max(1, abs(t))
        lo, hi = 0, len(self.times)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.times[mid] < t - tol:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.times) and abs(self.times[lo] - t) <= tol:
            return self.values[lo]
        return None

    def scaled(self, s) -> "DirichletSample":
        s = mp.mpf(s)
        truth = tuple(s * v for v in self.truth) if self.truth is not None else None
        return DirichletSample(self.times, tuple(s * v for v in self.values),
                               abs(s) * self.noise_level, self.noise_norm, self.horizon,
                               self.seed, self.weights, truth)

    def to_csv(self, path, sidecar=True):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([mpf_to_str(t), mpf_to_str(v)])
        if sidecar:
            meta = {"epsilon": mpf_to_str(self.noise_level), "noise_norm": self.noise_norm,
                    "T": mpf_to_str(self.horizon), "seed": self.seed}
            if self.weights is not None:
                meta["weights"] = [mpf_to_str(x) for x in self.weights]
            path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
        return path

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != ["t", "value"]:
            raise ValueError("expected header 't,value'")
        times = [mp.mpf(r[0]) for r in rows[1:]]
        values = [mp.mpf(r[1]) for r in rows[1:]]
        meta = {}
        side = path.with_suffix(".json")
        if side.exists():
            meta = json.loads(side.read_text())
        weights = meta.get("weights")
        return cls(times, values, mp.mpf(meta.get("epsilon", 0)), meta.get("noise_norm", "sup"),
                   mp.mpf(meta.get("T", times[-1])), meta.get("seed"),
                   tuple(mp.mpf(x) for x in weights) if weights else None)


def _in_window(t, window):
    if window is None:
        return True
    return any(lo <= t <= hi for lo, hi in window)


def eval_dirichlet(a: CoefficientSequence, seq: EigenvalueSequence, t):
    """F_a(t) = sum_k a_k exp(-lambda_k t) at the current precision."""
    t = mp.mpf(t)
    if t < 0:
        raise DomainError("t must be nonnegative")
    n = len(a)
    if a.support > len(seq):
        raise ValueError("coefficient support exceeds the exponent sequence")
    return mp.fsum(a[k] * mp.exp(-seq.value(k) * t) for k in range(1, min(n, len(seq)) + 1)
                   if a[k] != 0)


def dirichlet_evaluator(a: CoefficientSequence, seq: EigenvalueSequence) -> Callable:
    """Callable t -> F_a(t); recomputes exponents at the caller's precision."""
    a = CoefficientSequence(a.entries[:a.support])

    def F(t):
        return eval_dirichlet(a, seq, t)

    F.coefficients = a
    F.exponents = seq
    return F


def heat_point(f: InitialDatum, alpha, x0, t):
    """u(x0, t) = sum_k fhat_k exp(-(k/mu)^(2 alpha) t) sin(k x0 / mu)."""
    x0, t, alpha = mp.mpf(x0), mp.mpf(t), mp.mpf(alpha)
    if not 0 < x0 < f.mu * mp.pi:
        raise DomainError("x0 must lie in (0, mu*pi)")
    if t < 0:
        raise DomainError("t must be nonnegative")
    return mp.fsum(c * mp.exp(-(k / f.mu) ** (2 * alpha) * t) * mp.sin(k * x0 / f.mu)
                   for k, c in enumerate(f.coeffs, start=1) if c != 0)


def heat_field(f: InitialDatum, alpha, x, t):
    """u(x, t) for any x in [0, mu pi] (no open-interval check)."""
    x, t, alpha = mp.mpf(x), mp.mpf(t), mp.mpf(alpha)
    return mp.fsum(c * mp.exp(-(k / f.mu) ** (2 * alpha) * t) * mp.sin(k * x / f.mu)
                   for k, c in enumerate(f.coeffs, start=1) if c != 0)


def flux_coefficients(f: InitialDatum) -> CoefficientSequence:
    """Coefficients (k/mu) fhat_k of the boundary-flux Dirichlet series."""
    return CoefficientSequence(tuple(k / f.mu * c for k, c in enumerate(f.coeffs, start=1)))


def boundary_flux(f: InitialDatum, alpha, t):
    """d/dx u(0, t) = sum_k (k/mu) fhat_k exp(-(k/mu)^(2 alpha) t), t > 0."""
    t, alpha = mp.mpf(t), mp.mpf(alpha)
    if t <= 0:
        raise DomainError("boundary flux is evaluated for t > 0 only")
    return mp.fsum(k / f.mu * c * mp.exp(-(k / f.mu) ** (2 * alpha) * t)
                   for k, c in enumerate(f.coeffs, start=1) if c != 0)


def tensor_eval(F: TensorDatum, alpha, x: Sequence, t):
    """Product of per-axis solutions (tensor-sum convention for the fractional power)."""
    if len(x) != F.dim:
        raise ValueError(f"point has dimension {len(x)}, datum has {F.dim}")
    return mp.fprod(heat_point(fi, alpha, xi, t) for fi, xi in zip(F.factors, x))


def sample(evaluator: Callable, times: Sequence, epsilon=0, noise_norm="sup", seed=None,
           horizon=None, weights=None, keep_truth=True) -> DirichletSample:
    """Evaluate ``evaluator`` on ``times`` and add bounded or L2-scaled noise.

    sup noise: i.i.d. uniform on [-eps, eps]. L2 noise: Gaussian rescaled so
    its quadrature L2 norm (``weights``, default trapezoid) equals eps.
    """
    times = [mp.mpf(t) for t in times]
    if not times:
        raise ValueError("empty times list")
    eps = mp.mpf(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    T = mp.mpf(horizon) if horizon is not None else times[-1]
    truth = [mp.mpf(evaluator(t)) for t in times]
    values = list(truth)
    if eps > 0:
        rng = np.random.default_rng(seed)
        if noise_norm == "sup":
            noise = [mp.mpf(float(u)) * eps for u in rng.uniform(-1.0, 1.0, len(times))]
        elif noise_norm == "L2":
            g = [mp.mpf(float(u)) for u in rng.standard_normal(len(times))]
            w = weights if weights is not None else trapezoid_weights(times)
            l2 = mp.sqrt(mp.fsum(wi * gi * gi for wi, gi in zip(w, g)))
            noise = [eps * gi / l2 for gi in g]
        else:
            raise ValueError("noise_norm must be 'sup' or 'L2'")
        values = [v + e for v, e in zip(truth, noise)]
    return DirichletSample(times, values, eps, noise_norm, T, seed, weights,
                           tuple(truth) if keep_truth else None)


def trapezoid_weights(times):
    n = len(times)
    if n == 1:
        return [mp.one]
    w = [mp.zero] * n
    for i in range(n - 1):
        h = times[i + 1] - times[i]
        w[i] += h / 2
        w[i + 1] += h / 2
    return w


def quadrature_times(T, n_max: int, rate=None):
    """Gauss-Legendre nodes/weights on [0, T] sized for truncations up to n_max.

    With ``rate`` (the largest decay rate in the integrands, e.g. twice the
    largest exponent) the panels are graded toward t = 0.
    """
    order = max(64, 8 * n_max)
    if rate is None:
        return composite_gauss_legendre(order, 0, T)
    return graded_gauss_legendre(order, T, rate)


class ExpTable:
    """Cached exp(-lambda_k t_j) table for repeated evaluations on one grid."""

    def __init__(self, lambdas, times):
        self.times = list(times)
        self.table = [[mp.exp(-lam * t) for lam in lambdas] for t in self.times]

    def apply(self, coeffs):
        c = list(coeffs)
        return [mp.fsum(ci * e for ci, e in zip(c, row) if ci != 0) for row in self.table]


@dataclass(frozen=True)
class HyperplaneSample:
    """Values of a d-D solution on {x_axis = x0_axis} x (0, T).

    ``nodes``/``node_weights`` form a product Gauss-Legendre rule over the
    transverse box; ``values[i][j]`` is the value at transverse node i, time j.
    """

    axis: int
    x0_axis: object
    nodes: tuple
    node_weights: tuple
    times: tuple
    time_weights: tuple | None
    values: tuple
    noise_level: object = 0
    horizon: object = 1

    def to_json(self) -> dict:
        s = mpf_to_str
        return {"axis": self.axis, "x0_axis": s(self.x0_axis),
                "nodes": [[s(c) for c in n] for n in self.nodes],
                "node_weights": [s(w) for w in self.node_weights],
                "times": [s(t) for t in self.times],
                "time_weights": [s(w) for w in self.time_weights] if self.time_weights else None,
                "values": [[s(v) for v in row] for row in self.values],
                "noise_level": s(self.noise_level), "T": s(self.horizon)}

    @classmethod
    def from_json(cls, obj) -> "HyperplaneSample":
        m = mp.mpf
        tw = obj.get("time_weights")
        return cls(int(obj["axis"]), m(obj["x0_axis"]),
                   tuple(tuple(m(c) for c in n) for n in obj["nodes"]),
                   tuple(m(w) for w in obj["node_weights"]),
                   tuple(m(t) for t in obj["times"]),
                   tuple(m(w) for w in tw) if tw else None,
                   tuple(tuple(m(v) for v in row) for row in obj["values"]),
                   m(obj.get("noise_level", 0)), m(obj.get("T", 1)))


def hyperplane_sample(F: TensorDatum, alpha, axis: int, x0_axis, times, time_weights=None,
                      transverse_nodes: int = 32, epsilon=0, seed=None, horizon=None):
    """Sample u on the hyperplane x_axis = x0_axis over a transverse quadrature grid."""
    alpha = mp.mpf(alpha)
    if not 0 <= axis < F.dim:
        raise ValueError("axis out of range")
    per_axis = []
    for i, fi in enumerate(F.factors):
        if i == axis:
            continue
        x, w = gauss_legendre(transverse_nodes, 0, fi.mu * mp.pi)
        per_axis.append((i, x, w))
    grids = [list(zip(x, w)) for _, x, w in per_axis]
    nodes, node_w = [], []
    for combo in itertools.product(*grids) if grids else [()]:
        nodes.append(tuple(c[0] for c in combo))
        node_w.append(mp.fprod(c[1] for c in combo) if combo else mp.one)
    times = [mp.mpf(t) for t in times]
    fa = F.factors[axis]
    along = [heat_point(fa, alpha, x0_axis, t) for t in times]
    # transverse factors evaluated per (axis, node coordinate, time)
    trans = {}
    for slot, (i, x, _) in enumerate(per_axis):
        for xi in x:
            trans[(i, xi)] = [heat_field(F.factors[i], alpha, xi, t) for t in times]
    rng = np.random.default_rng(seed)
    eps = mp.mpf(epsilon)
    values = []
    for node in nodes:
        row = []
        for j in range(len(times)):
            v = along[j]
            for (i, _, _), xi in zip(per_axis, node):
                v *= trans[(i, xi)][j]
            row.append(v)
        if eps > 0:
            row = [v + eps * mp.mpf(float(u)) for v, u in zip(row, rng.uniform(-1, 1, len(row)))]
        values.append(tuple(row))
    T = mp.mpf(horizon) if horizon is not None else times[-1]
    return HyperplaneSample(axis, mp.mpf(x0_axis), tuple(nodes), tuple(node_w), tuple(times),
                            tuple(time_weights) if time_weights is not None else None,
                            tuple(values), eps, T)


def log_safe(x) -> float:
    """float(log|x|) that tolerates values below the double range."""
    x = mp.mpf(x)
    if x == 0:
        return -math.inf
    return float(mp.log(abs(x)))
