"""Biorthogonal recovery for summable exponent sequences.

The family psi_n = sum_k C[n,k] exp(-lambda_k t) is the finite-section dual
basis of {exp(-lambda_k t)} in L2(0, T): C is the inverse of the Gram matrix.
Coefficients are read off as a_n = int_0^T F psi_n dt by Gauss-Legendre
quadrature, after choosing the truncation from the noise level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from mpmath import mp

from . import kernels
from .errors import IllConditionedError, InterpolationError
from .forward import DirichletSample
from .precision import get_bits, mpf_to_str
from .quadrature import Pchip, composite_gauss_legendre, graded_gauss_legendre
from .sequences import CoefficientSequence, EigenvalueSequence, reciprocal_sum_class


@dataclass
class RecoveryReport:
    """Outcome of one recovery: estimate, truncation, bounds, diagnostics."""

    method: str
    estimate: CoefficientSequence
    truncation: int
    certified_bound: object = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, mp.mpf):
                return mpf_to_str(v)
            if hasattr(v, "to_json"):
                return v.to_json()
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {"method": self.method, "truncation": self.truncation,
                "estimate": self.estimate.to_strings(),
                "certified_bound": conv(self.certified_bound),
                "diagnostics": conv(self.diagnostics)}


def gram_matrix(lam, T, N: int, window=None):
    """G[j,k] = int exp(-(lambda_j + lambda_k) t) dt over (0, T) (or ``window``)."""
    lams = _prefix(lam, N)
    t0, t1 = (mp.zero, mp.mpf(T)) if window is None else (mp.mpf(window[0]), mp.mpf(window[1]))
    G = mp.matrix(N, N)
    for j in range(N):
        for k in range(j, N):
            s = lams[j] + lams[k]
            if t1 == mp.inf:
                v = mp.exp(-s * t0) / s
            else:
                v = (mp.exp(-s * t0) - mp.exp(-s * t1)) / s
            G[j, k] = G[k, j] = v
    return G


def _prefix(lam, N):
    if isinstance(lam, EigenvalueSequence):
        return lam.prefix(N)
    vals = [mp.mpf(v) for v in lam]
    if N > len(vals):
        raise IndexError("not enough exponents")
    return vals[:N]


@dataclass(frozen=True)
class BiorthoFamily:
    T: object
    N: int
    lambdas: tuple
    combo: tuple  # combo[n][k] = C[n+1, k+1]
    psi_norms: tuple
    precision_bits: int
    residual: object

    def psi(self, n: int, t):
        """psi_n(t), 1-based n."""
        t = mp.mpf(t)
        return mp.fsum(c * mp.exp(-lam * t) for c, lam in zip(self.combo[n - 1], self.lambdas))

    def biorthogonality_residual(self, bits: int | None = None):
        """max |int_0^T psi_n exp(-lambda_m t) dt - delta_nm| evaluated at ``bits``."""
        with mp.workprec(bits or 2 * self.precision_bits):
            G = gram_matrix(self.lambdas, self.T, self.N)
            worst = mp.zero
            for n in range(self.N):
                for m in range(self.N):
                    v = mp.fsum(self.combo[n][k] * G[k, m] for k in range(self.N))
                    worst = max(worst, abs(v - (1 if n == m else 0)))
            return +worst

    def to_json(self) -> dict:
        s = mpf_to_str
        return {"T": s(self.T), "N": self.N, "precision_bits": self.precision_bits,
                "lambdas": [s(v, self.precision_bits) for v in self.lambdas],
                "combo": [[s(v, self.precision_bits) for v in row] for row in self.combo],
                "psi_norms": [s(v, self.precision_bits) for v in self.psi_norms],
                "residual": s(self.residual)}

    @classmethod
    def from_json(cls, obj) -> "BiorthoFamily":
        if isinstance(obj, str):
            obj = json.loads(obj)
        bits = int(obj["precision_bits"])
        with mp.workprec(bits):
            m = mp.mpf
            return cls(m(obj["T"]), int(obj["N"]), tuple(m(v) for v in obj["lambdas"]),
                       tuple(tuple(m(v) for v in row) for row in obj["combo"]),
                       tuple(m(v) for v in obj["psi_norms"]), bits, m(obj["residual"]))


_FAMILY_CACHE: dict = {}


def build_family(lam, T, N: int, precision_bits: int | None = None, cache=True) -> BiorthoFamily:
    """Solve G C^T = I at twice the working precision, refine, and verify.

    Raises :class:`IllConditionedError` when the biorthogonality residual of
    the stored family exceeds 2^(-precision_bits/4).
    """
    bits = int(precision_bits or get_bits())
    with mp.workprec(bits):
        lams = tuple(_prefix(lam, N))
    key = (lams, str(T), N, bits)
    if cache and key in _FAMILY_CACHE:
        return _FAMILY_CACHE[key]
    target = mp.ldexp(1, -(bits // 4))
    with mp.workprec(2 * bits):
        G = gram_matrix(lams, T, N)
        try:
            L = mp.cholesky(G)
        except (ValueError, ZeroDivisionError) as exc:
            raise IllConditionedError(
                f"Gram matrix not numerically positive definite at {2 * bits} bits",
                required_bits=2 * bits) from exc
        C = _inverse_from_cholesky(L)
        eye = mp.eye(N)
        for _ in range(4):
            R = eye - G * C
            if mp.mnorm(R, 1) < mp.ldexp(1, -2 * bits + 8):
                break
            C = C + C * R
    with mp.workprec(bits):
        combo = tuple(tuple(+C[n, k] for k in range(N)) for n in range(N))
        norms = tuple(mp.sqrt(abs(C[n, n])) for n in range(N))
    fam = BiorthoFamily(mp.mpf(T), N, lams, combo, norms, bits, mp.zero)
    residual = fam.biorthogonality_residual()
    fam = BiorthoFamily(fam.T, N, lams, combo, norms, bits, residual)
    if not residual <= target:
        cond_bits = max(0.0, float(mp.log(residual, 2))) + bits
        need = int(math.ceil(4 * cond_bits / 3)) + 16
        raise IllConditionedError(
            f"biorthogonality residual {mp.nstr(residual, 3)} exceeds 2^-{bits // 4} at "
            f"{bits} bits; about {need} bits required", required_bits=need)
    if cache:
        _FAMILY_CACHE[key] = fam
    return fam


def _inverse_from_cholesky(L):
    n = L.rows
    Linv = mp.matrix(n, n)
    for j in range(n):
        Linv[j, j] = 1 / L[j, j]
        for i in range(j + 1, n):
            s = mp.fsum(L[i, k] * Linv[k, j] for k in range(j, i))
            Linv[i, j] = -s / L[i, i]
    inv = mp.matrix(n, n)
    for i in range(n):
        for j in range(i, n):
            v = mp.fsum(Linv[k, i] * Linv[k, j] for k in range(j, n))
            inv[i, j] = inv[j, i] = v
    return inv


_EXP_CACHE: dict = {}


def _quadrature_moments(values, nodes, weights, lambdas):
    key = (tuple(lambdas), tuple(nodes), mp.prec)
    table = _EXP_CACHE.get(key)
    if table is None:
        table = [[w * mp.exp(-lam * t) for t, w in zip(nodes, weights)] for lam in lambdas]
        if len(_EXP_CACHE) > 64:
            _EXP_CACHE.clear()
        _EXP_CACHE[key] = table
    return [mp.fsum(r * v for r, v in zip(row, values)) for row in table]


def quadrature_data(F, T, order: int, rate=None):
    """Return (nodes, weights, values) for int_0^T F(t) g(t) dt style sums.

    A :class:`DirichletSample` carrying quadrature weights on [0, T] with at
    least ``order`` nodes is used as-is; other samples are interpolated with a
    monotone cubic and must have spacing <= T/(4*order). Evaluators are
    sampled on a rule graded toward 0 for decay rates up to ``rate``.
    """
    T = mp.mpf(T)
    if isinstance(F, DirichletSample):
        if F.weights is not None and abs(F.horizon - T) <= mp.ldexp(T, -mp.prec // 2) \
                and abs(mp.fsum(F.weights) - T) <= mp.ldexp(T, -mp.prec // 3):
            if len(F.times) < order:
                raise InterpolationError(
                    f"sample rule has {len(F.times)} nodes, quadrature order {order} requested")
            return list(F.times), list(F.weights), list(F.values)
        spacing = max((b - a for a, b in zip(F.times, F.times[1:])), default=T)
        h = T / (4 * order)
        if spacing > h * (1 + mp.ldexp(1, -20)) or F.times[0] > h or F.times[-1] < T - h:
            raise InterpolationError(
                f"sample spacing {mp.nstr(spacing, 4)} too coarse for order {order}; "
                f"need <= {mp.nstr(h, 4)} covering [0, T]")
        interp = Pchip(F.times, F.values)
        nodes, weights = composite_gauss_legendre(order, 0, T)
        return nodes, weights, [interp(t) for t in nodes]
    nodes, weights = _rule(order, T, rate)
    return nodes, weights, [mp.mpf(F(t)) for t in nodes]


_RULE_CACHE: dict = {}


def _rule(order, T, rate):
    key = (order, T, rate, mp.prec)
    if key not in _RULE_CACHE:
        if len(_RULE_CACHE) > 32:
            _RULE_CACHE.clear()
        _RULE_CACHE[key] = graded_gauss_legendre(order, T, rate) if rate else \
            composite_gauss_legendre(order, 0, T)
    return _RULE_CACHE[key]


def extract_coefficients(F, fam: BiorthoFamily, quadrature_order: int | None = None,
                         n: int | None = None) -> CoefficientSequence:
    """a_j = int_0^T F psi_j dt for j <= n (default: all N members of the family).

    Evaluators are integrated on a Gauss-Legendre rule graded toward t = 0
    for decay rates up to 2 lambda_N; samples bring their own rule.
    """
    order = quadrature_order or max(64, 8 * fam.N)
    n = fam.N if n is None else int(n)
    if not 1 <= n <= fam.N:
        raise ValueError(f"n must lie in [1, {fam.N}]")
    nodes, weights, values = quadrature_data(F, fam.T, order, 2 * fam.lambdas[-1])
    moments = _quadrature_moments(values, nodes, weights, fam.lambdas)
    est = [mp.fsum(c * mo for c, mo in zip(row, moments)) for row in fam.combo[:n]]
    return CoefficientSequence(tuple(est))


def select_truncation(epsilon, C, theta, m=1, n_max: int | None = None) -> int:
    """Greatest N with exp(C N) (eps/m)^2 <= N^(-2 theta); 1 if none qualifies.

    The left side minus the right side is increasing in N, so the admissible
    set is {1, ..., N~}. ``eps == 0`` returns ``n_max``.
    """
    eps = mp.mpf(epsilon)
    C, theta = mp.mpf(C), mp.mpf(theta)
    if eps <= 0:
        if n_max is None:
            raise ValueError("epsilon = 0 needs n_max")
        return int(n_max)
    log_eps = 2 * mp.log(eps / mp.mpf(m))

    def ok(n):
        return C * n + log_eps + 2 * theta * mp.log(n) <= 0

    if not ok(1):
        return 1
    hi = 2
    while ok(hi):
        if n_max is not None and hi >= n_max:
            return int(n_max)
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo if n_max is None else min(lo, int(n_max))


def truncation_constant(lam, T, n_pilot: int, precision_bits: int | None = None,
                        weights=None):
    """Calibrate C with T * sum_{n<=N} w_n^2 ||psi_n||^2 <= exp(C N) for all N <= n_pilot.

    The psi_n are the members of the ``n_pilot``-term family, which is also
    the family used for extraction. The factor T converts a sup-norm noise
    bound to L2(0, T); ``weights`` (default 1) account for later rescaling
    of the coefficients.
    """
    fam = build_family(lam, T, n_pilot, precision_bits)
    return section_constant(fam, weights)


def section_constant(fam: BiorthoFamily, weights=None) -> float:
    best, acc = -math.inf, mp.zero
    for n, p in enumerate(fam.psi_norms, start=1):
        w = mp.one if weights is None else mp.mpf(weights[n - 1])
        acc += (w * p) ** 2
        best = max(best, float(mp.log(acc * fam.T)) / n)
    return max(best, 0.0)


def growth_constant(lam, T, n_pilot: int, beta: float, precision_bits: int | None = None):
    """max_n log||psi_n|| / lambda_n^(1/beta) over a pilot family."""
    fam = build_family(lam, T, n_pilot, precision_bits)
    return float(max(mp.log(p) / lam_n ** (mp.one / beta)
                     for p, lam_n in zip(fam.psi_norms, fam.lambdas)))


def psi_growth_fit(lam, T, n: int, beta: float, section: int | None = None,
                   precision_bits: int | None = None):
    """Regress log||psi_k|| on lambda_k^(1/beta), k <= n.

    The norms come from the ``section``-term family (default 2n); the last
    few members of any finite section are distorted by the truncation.
    Returns (slope, intercept, r2, xs, ys).
    """
    section = section or 2 * n
    fam = build_family(lam, T, section, precision_bits)
    xs = np.array([float(v ** (mp.one / beta)) for v in fam.lambdas[:n]])
    ys = np.array([float(mp.log(p)) for p in fam.psi_norms[:n]])
    slope, intercept, r2 = linear_fit(xs, ys)
    return slope, intercept, r2, xs, ys


def linear_fit(xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    ss_res = float(np.sum((ys - (slope * xs + intercept)) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2


@dataclass
class LogRecoveryConfig:
    """Knobs for :func:`recover_log`.

    ``noise_level`` None means "measure sup|F| over the window"; 0 means exact
    data (truncation then capped only by ``n_max``). ``C`` None triggers
    calibration on the extraction family; ``N`` fixes the truncation.

    Coefficients are read off with the first N members of an
    ``n_section``-term family (default ``n_max``). A section longer than N
    approximates the biorthogonal family of the whole sequence, so modes
    between N and ``n_section`` do not leak into the estimate.
    ``bound_constant`` multiplies the reported log-rate bound and is meant to
    be calibrated on pilot runs. ``l1_radius`` declares the extra l1 prior
    that matters for theta <= 1/2; it is reported next to the estimate's l1
    norm and never used to pick N.
    """

    noise_level: object = None
    window: tuple | None = None
    n_max: int = 12
    C: float | None = None
    N: int | None = None
    n_section: int | None = None
    bound_constant: float = 1.0
    precision_bits: int | None = None
    quadrature_order: int | None = None
    require_summable: bool = True
    l1_radius: float | None = None


def noise_floor(bits: int):
    return mp.ldexp(1, -int(bits))


def effective_noise(F, T, declared, window, bits):
    """Declared noise level, else the measured sup of |F| over ``window``.

    A sample always carries a declaration (0 means exact data); the measured
    sup is used only for bare evaluators with ``declared`` None.
    """
    if declared is not None:
        eps = mp.mpf(declared)
    elif isinstance(F, DirichletSample):
        eps = F.noise_level
    else:
        eps = measured_sup(F, T, window)
    return max(eps, noise_floor(bits)), eps


def measured_sup(F, T, window=None, points: int = 257):
    win = window or [(mp.zero, mp.mpf(T))]
    if isinstance(F, DirichletSample):
        return F.sup(win)
    best = mp.zero
    for lo, hi in win:
        lo, hi = mp.mpf(lo), mp.mpf(hi)
        for j in range(points):
            best = max(best, abs(mp.mpf(F(lo + (hi - lo) * j / (points - 1)))))
    return best


def recover_log(F, lam: EigenvalueSequence, T, theta, m=1,
                config: LogRecoveryConfig | None = None) -> RecoveryReport:
    """Noise level -> truncation -> biorthogonal family -> quadrature extraction."""
    cfg = config or LogRecoveryConfig()
    bits = int(cfg.precision_bits or get_bits())
    regime = reciprocal_sum_class(lam)
    if cfg.require_summable and regime == "divergent":
        from .errors import RegimeError
        raise RegimeError("sum 1/lambda_k diverges; the biorthogonal route needs a summable sequence")
    with mp.workprec(bits):
        n_cap = min(cfg.n_max, len(lam))
        M = min(max(cfg.n_section or n_cap, cfg.N or 1), len(lam))
        fam = build_family(lam, T, M, bits)
        C = cfg.C if cfg.C is not None else section_constant(fam)
        eps, eps_raw = effective_noise(F, T, cfg.noise_level, cfg.window, bits)
        N = int(cfg.N) if cfg.N is not None else select_truncation(eps, C, theta, m, min(n_cap, M))
        est = extract_coefficients(F, fam, cfg.quadrature_order, N)
        log_eps = abs(mp.log(eps))
        bound = mp.mpf(cfg.bound_constant) * (log_eps ** (-mp.mpf(theta)) + eps)
        l2_noise = eps * mp.sqrt(mp.mpf(T))
        per_coeff = [l2_noise * p for p in fam.psi_norms[:N]]
        tail = mp.mpf(m) / (1 + mp.mpf(N + 1) ** 2) ** (mp.mpf(theta) / 2)
        diag = {"C": C, "epsilon": eps, "epsilon_declared": eps_raw,
                "residual": fam.residual, "psi_norms": list(fam.psi_norms[:N]), "section": M,
                "coefficient_error_bounds": per_coeff, "tail_bound": tail,
                "regime": regime, "precision_bits": bits,
                "bound_calibrated": cfg.bound_constant != 1.0,
                "prior": {"theta": theta, "m": m, "l1_radius": cfg.l1_radius},
                "l1_estimate": est.norm("l1")}
        if cfg.l1_radius is not None and theta <= 0.5 and diag["l1_estimate"] > cfg.l1_radius:
            diag["l1_prior_exceeded"] = True
        return RecoveryReport("biortho", est, N, bound, diag)


def restriction_constant(lam, T, window, N: int, draws: int = 1000, seed: int = 0,
                         points: int = 2000, backend: str | None = None) -> float:
    """Lower estimate of d in ||F||_{L inf(0,T)} <= d ||F||_{L inf(B)} over random unit vectors.

    ``window`` is a list of closed intervals. The full-interval grid contains
    the window grid, so the ratio is at least 1.
    """
    lams = np.array([float(v) for v in _prefix(lam, N)])
    T = float(T)
    win = [(float(lo), float(hi)) for lo, hi in window]
    wgrid = np.unique(np.concatenate([np.linspace(lo, hi, points) for lo, hi in win]))
    full = np.unique(np.concatenate([np.linspace(0.0, T, points), wgrid]))
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((draws, N))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    num = kernels.dirichlet_sup_many(c, lams, full, backend)
    den = kernels.dirichlet_sup_many(c, lams, wgrid, backend)
    ratios = num / den
    return float(np.max(ratios))
