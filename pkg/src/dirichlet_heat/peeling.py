"""Sequential peeling for divergent exponent sequences.

Step k evaluates the residual R_k(t) = F(t) - sum_{i<k} a^_i exp(-lambda_i t)
at one time s_k and sets a^_k = R_k(s_k) exp(lambda_k s_k). Its error is at
most

    eps e^{lambda_k s} + sum_{i<k} e_i e^{(lambda_k - lambda_i) s}
        + tau_k e^{-(lambda_{k+1} - lambda_k) s},

where e_i are the certified errors of earlier steps and tau_k bounds the
l1 mass of the unpeeled tail. All bookkeeping is done with natural logs in
float64 so that bounds far below the double range stay representable.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from mpmath import mp
from scipy.optimize import minimize_scalar

from . import kernels
from .biortho import RecoveryReport
from .errors import GapConditionError, IllConditionedError
from .forward import DirichletSample
from .precision import get_bits, mpf_to_str
from .sequences import CoefficientSequence, EigenvalueSequence, GapParams, validate_gap

LN2 = math.log(2.0)
LN3 = math.log(3.0)


def logsumexp(values) -> float:
    """ln sum exp(v) for a short list of floats."""
    values = list(values)
    top = max(values)
    if top == -math.inf:
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def chain_constant(k: int) -> int:
    """C_1 = 2, C_{k+1} = 3 C_k + 2, i.e. C_k = 3^k - 1."""
    return 3 ** k - 1


def products(lams, k_max: int):
    """p_k = prod_{i<=k} (1 - lambda_i/lambda_{i+1}) for k <= k_max (needs k_max+1 exponents)."""
    out, p = [], mp.one
    for k in range(1, k_max + 1):
        p *= 1 - lams[k - 1] / lams[k]
        out.append(+p)
    return out


def log_q(k: int, c_star: float, beta: float) -> float:
    """ln q_k with q_k = c_*^k / (k+1)^(beta k)."""
    return k * math.log(c_star) - beta * k * math.log(k + 1)


def rho_zero(theta, beta, c_star) -> float:
    """Largest rho for which k = 1 satisfies 3 rho^(q_1) <= 1."""
    return math.exp(-LN3 / math.exp(log_q(1, c_star, beta)))


def select_k_tilde(rho, theta, beta, c_star=1.0, k_cap: int = 10_000):
    """Greatest k with 3^k rho^(q_k) <= k^(-theta).

    Returns ``(k, flag)``; ``flag`` is True when rho >= rho_0 and no k
    qualifies. The log of the left side minus the right side is increasing
    in k, so the admissible set is an initial segment.
    """
    rho = mp.mpf(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if rho >= 1:
        return 0, True
    ln_abs = float(mp.log(-mp.log(rho)))  # ln|ln rho|

    def ok(k):
        lhs = k * LN3 + theta * math.log(k) - math.exp(log_q(k, c_star, beta) + ln_abs)
        return lhs <= 0

    if not ok(1):
        return 0, True
    k = 1
    while k < k_cap and ok(k + 1):
        k += 1
    return k, False


def k_tilde_lower_bound(rho, theta, beta) -> float:
    """(1/(2 c)) (ln|ln rho|)^(1/2) with c = (ln 3 + theta + beta)^(1/2)."""
    c = math.sqrt(LN3 + theta + beta)
    return math.sqrt(float(mp.log(-mp.log(mp.mpf(rho))))) / (2 * c)


@dataclass
class PeelingTrace:
    estimates: CoefficientSequence
    sample_times: list
    rho: object
    products: list
    q: list
    cumulative_bounds: list  # 3^k rho_k^(p_k)
    residual_scales: list = field(default_factory=list)  # rho_k
    log_step_bounds: list = field(default_factory=list)  # ln e_k (certified)
    log_chain_bounds: list = field(default_factory=list)  # ln sum_{i<=k} e_i

    def to_json(self) -> dict:
        s = mpf_to_str
        return {"estimates": self.estimates.to_strings(),
                "sample_times": [s(t) for t in self.sample_times], "rho": s(self.rho),
                "products": [s(v) for v in self.products], "q": [s(v) for v in self.q],
                "cumulative_bounds": [s(v) for v in self.cumulative_bounds],
                "residual_scales": [s(v) for v in self.residual_scales],
                "log_step_bounds": list(self.log_step_bounds),
                "log_chain_bounds": list(self.log_chain_bounds)}

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "s_k", "a_hat_k", "bound_k"])
            for k, (s, a, b) in enumerate(zip(self.sample_times, self.estimates,
                                             self.cumulative_bounds), start=1):
                w.writerow([k, mpf_to_str(s), mpf_to_str(a), mpf_to_str(b)])
        return path


def _step_terms(s, k, lams, log_eps, log_errs, log_tau):
    """Log of the three error contributions at time s (lams are floats, 0-based list)."""
    lk, lk1 = lams[k - 1], lams[k]
    terms = [log_eps + lk * s, log_tau - (lk1 - lk) * s]
    terms += [le + (lk - lams[i]) * s for i, le in enumerate(log_errs)]
    return terms


def step_log_bound(s, k, lams, log_eps, log_errs, log_tau) -> float:
    return float(logsumexp(_step_terms(s, k, lams, log_eps, log_errs, log_tau)))


def balanced_time(k, lams, log_eps, log_errs, log_tau, s_max, candidates=None):
    """Time minimizing the certified step bound (convex in s)."""
    f = lambda s: step_log_bound(s, k, lams, log_eps, log_errs, log_tau)  # noqa: E731
    if candidates is not None:
        vals = [f(float(c)) for c in candidates]
        j = int(np.argmin(vals))
        return candidates[j], vals[j]
    res = minimize_scalar(f, bounds=(0.0, s_max), method="bounded",
                          options={"xatol": 1e-10 * max(1.0, s_max)})
    s = float(res.x)
    best = min((s, f(s)), (0.0, f(0.0)), (s_max, f(s_max)), key=lambda p: p[1])
    return best


def paper_time(rho_k, lam_next, s_max):
    """s_k = ln(1/rho_k)/lambda_{k+1}, 0 when rho_k >= 1, capped at s_max."""
    rho_k = mp.mpf(rho_k)
    if rho_k >= 1:
        return mp.zero
    if rho_k <= 0:
        return mp.mpf(s_max)
    return min(mp.log(1 / rho_k) / lam_next, mp.mpf(s_max))


def _evaluate(F, s):
    if isinstance(F, DirichletSample):
        v = F.lookup(s)
        if v is None:
            raise ValueError(f"sample has no value at t = {s}")
        return v
    return mp.mpf(F(s))


def peel_step(F, partial, k: int, lam, rho_k=None, s=None, s_max=None):
    """One peeling step; returns (a^_k, s_k).

    Without an explicit ``s`` the time follows s_k = ln(1/rho_k)/lambda_{k+1}
    (s_k = 0 when rho_k >= 1). ``partial`` holds a^_1..a^_{k-1}.
    """
    lams = [mp.mpf(v) for v in (lam.prefix(k + 1) if isinstance(lam, EigenvalueSequence) else lam[:k + 1])]
    if s is None:
        if s_max is None:
            s_max = mp.log(mp.ldexp(1, mp.prec)) / lams[0]
        s = paper_time(rho_k, lams[k], s_max)
    s = mp.mpf(s)
    r = _evaluate(F, s) - mp.fsum(partial[i] * mp.exp(-lams[i] * s) for i in range(k - 1))
    return r * mp.exp(lams[k - 1] * s), s


def measure_sup(F, lam, s_max, points=2001):
    """max |F| over a uniform grid on [0, s_max] (kernel path for plain evaluators)."""
    if isinstance(F, DirichletSample):
        return F.sup()
    coeffs = getattr(F, "coefficients", None)
    seq = getattr(F, "exponents", None)
    grid = np.linspace(0.0, float(s_max), points)
    if coeffs is not None and seq is not None and coeffs.support > 0:
        n = coeffs.support
        c = [float(coeffs[k]) for k in range(1, n + 1)]
        lv = [float(seq.value(k)) for k in range(1, n + 1)]
        return mp.mpf(kernels.dirichlet_sup(c, lv, grid)[0])
    return max(abs(mp.mpf(F(mp.mpf(float(t))))) for t in grid)


@dataclass
class PeelingConfig:
    """Knobs for :func:`recover_peeling`.

    ``rule`` is "balanced" (minimize the certified step bound) or "paper"
    (s_k = ln(1/rho_k)/lambda_{k+1}). ``noise_level`` 0 or None on an exact
    evaluator means noiseless: all ``n_max`` steps run and the internal
    precision is raised until the certified chain falls below
    2^-``target_bits`` (default: working bits / 4).
    """

    noise_level: object = None
    rule: str = "balanced"
    n_max: int = 8
    sup_points: int = 2001
    precision_bits: int | None = None
    target_bits: int | None = None
    max_bits: int = 1 << 17
    bound_constant: float = 1.0
    gap: GapParams | None = None
    check_gap: bool = True


def _tail_logs(theta, n):
    """ln tau_k for the normalized prior sum k^theta |a_k| <= 1."""
    return [-theta * math.log(k + 1) for k in range(1, n + 1)]


def plan_chain(lams_f, log_eps, log_taus, rule="balanced", log_rho=None, s_max=None):
    """Run the certified bookkeeping for given exponents; returns (times, log step bounds)."""
    n = len(log_taus)
    if s_max is None:
        s_max = -log_eps / lams_f[0]
    times, logs = [], []
    for k in range(1, n + 1):
        if rule == "balanced":
            s, le = balanced_time(k, lams_f, log_eps, logs, log_taus[k - 1], s_max)
        else:
            lr = _log_residual_scale(log_rho, logs)
            s = 0.0 if lr >= 0 else min(-lr / lams_f[k], s_max)
            le = step_log_bound(s, k, lams_f, log_eps, logs, log_taus[k - 1])
        times.append(s)
        logs.append(le)
    return times, logs


def _log_residual_scale(log_rho, logs):
    return float(logsumexp([log_rho] + list(logs)))


@functools.lru_cache(maxsize=256)
def _plan_precision_cached(lams_f, log_taus, target_log, start_bits, max_bits, log_scale):
    return _plan_precision(list(lams_f), list(log_taus), target_log, start_bits, max_bits, log_scale)


def plan_precision(lams_f, log_taus, target_log, start_bits, max_bits, log_scale=math.log(4.0)):
    """Smallest precision (bits) whose certified chain ends below exp(target_log)."""
    return _plan_precision_cached(tuple(lams_f), tuple(log_taus), float(target_log),
                                  int(start_bits), int(max_bits), float(log_scale))


def _plan_precision(lams_f, log_taus, target_log, start_bits, max_bits, log_scale):
    def final(bits):
        _, logs = plan_chain(lams_f, -bits * LN2 + log_scale, log_taus)
        return float(logsumexp(logs))

    lo = hi = max(64, int(start_bits))
    while final(hi) > target_log:
        lo, hi = hi, hi * 2
        if hi > max_bits:
            raise IllConditionedError(
                f"noiseless peeling of {len(log_taus)} modes needs more than {max_bits} bits",
                required_bits=hi)
    if lo == hi:
        return hi
    while hi - lo > 32:
        mid = (lo + hi) // 2
        if final(mid) <= target_log:
            hi = mid
        else:
            lo = mid
    return hi


def recover_peeling(F, lam: EigenvalueSequence, theta, m=1,
                    config: PeelingConfig | None = None) -> RecoveryReport:
    """Peel coefficients from an evaluator or a sample under the prior a in m*B_{l1,theta}."""
    cfg = config or PeelingConfig()
    bits = int(cfg.precision_bits or get_bits())
    theta = float(theta)
    m = mp.mpf(m)
    if m <= 0:
        raise ValueError("m must be positive")
    gap = cfg.gap or lam.default_gap()
    is_sample = isinstance(F, DirichletSample)
    n_need = min(cfg.n_max + 1, len(lam))
    if cfg.check_gap:
        rep = validate_gap(lam, n_need, gap)
        if not rep.passed:
            raise GapConditionError(
                f"gap condition fails on the first {n_need} exponents: d* = "
                f"{mp.nstr(rep.d_star, 5)} (need {gap.d}), c* = {mp.nstr(rep.c_star, 5)} (need {gap.c})")
    c_star = gap.c_star
    with mp.workprec(bits):
        declared = cfg.noise_level
        if declared is None and is_sample:
            declared = F.noise_level
        eps = mp.mpf(declared or 0)
        noiseless = eps == 0
        lams_all = lam.prefix(n_need)
        lams_f = [float(v) for v in lams_all]
        s_max_work = bits * LN2 / lams_f[0]
        rho = measure_sup(F, lam, s_max_work, cfg.sup_points) / m

    flag = False
    if noiseless:
        K = min(cfg.n_max, n_need - 1)
        k_tilde = None
    else:
        k_tilde, flag = select_k_tilde(eps / m, theta, gap.beta, c_star)
        K = min(k_tilde, cfg.n_max, n_need - 1)
    if K == 0:
        bound = m * rho / mp.mpf(rho_zero(theta, gap.beta, c_star))
        diag = {"rho": rho, "k_tilde": k_tilde, "fallback": True, "epsilon": eps}
        return RecoveryReport("peeling", CoefficientSequence(()), 0, bound, diag)

    log_taus = _tail_logs(theta, K)
    target_bits = cfg.target_bits or bits // 4
    if noiseless and not is_sample:
        work = plan_precision(lams_f[:K + 1], log_taus, -target_bits * LN2, bits, cfg.max_bits)
        work = max(work, bits)
    else:
        work = bits
    with mp.workprec(work):
        log_eps = (float(mp.log(eps / m)) if not noiseless else -work * LN2) + math.log(4.0)
        s_max = -log_eps / lams_f[0]
        candidates = list(F.times) if is_sample else None
        lams = lam.prefix(K + 1)
        Fn = _normalized(F, m)
        est, times, logs = [], [], []
        log_rho = float(mp.log(rho)) if rho > 0 else -work * LN2
        for k in range(1, K + 1):
            if cfg.rule == "balanced":
                s, le = balanced_time(k, lams_f, log_eps, logs, log_taus[k - 1], s_max,
                                      [float(t) for t in candidates] if candidates else None)
            elif cfg.rule == "paper":
                lr = _log_residual_scale(log_rho, logs)
                s = 0.0 if lr >= 0 else min(-lr / lams_f[k], s_max)
                if candidates:
                    s = min((float(t) for t in candidates), key=lambda t: abs(t - s))
                le = step_log_bound(s, k, lams_f, log_eps, logs, log_taus[k - 1])
            else:
                raise ValueError(f"unknown rule {cfg.rule!r}")
            s_mp = _snap(F, s) if is_sample else mp.mpf(s)
            a_k, _ = peel_step(Fn, est, k, lams, s=s_mp)
            est.append(a_k)
            times.append(s_mp)
            logs.append(le)

    with mp.workprec(bits):
        p = products(lams_all, K)
        q = [mp.exp(log_q(k, c_star, gap.beta)) for k in range(1, K + 1)]
        log_chain = [float(logsumexp(logs[:k])) for k in range(1, K + 1)]
        scales = [rho] + [rho + mp.exp(lc) for lc in log_chain[:-1]]
        cumulative = [mp.mpf(3) ** k * scales[k - 1] ** p[k - 1] for k in range(1, K + 1)]
        estimate = CoefficientSequence(tuple(m * a for a in est))
        trace = PeelingTrace(estimate, times, rho, p, q, [m * c for c in cumulative], scales,
                             logs, log_chain)
        tail = m * mp.mpf(K + 1) ** (-theta)
        chain_total = m * mp.exp(log_chain[-1])
        if noiseless:
            bound = chain_total
        else:
            r = eps / m
            lnln = mp.log(-mp.log(r)) if r < mp.exp(-1) else mp.mpf(0)
            shape = lnln ** (-mp.mpf(theta) / 2) if lnln > 0 else mp.one
            bound = mp.mpf(cfg.bound_constant) * m * (shape + r)
        diag = {"rho": rho, "k_tilde": k_tilde, "fallback": flag, "epsilon": eps,
                "rule": cfg.rule, "internal_bits": work, "chain_bound": chain_total,
                "tail_bound": tail, "certified_l1_bound": chain_total + tail,
                "trace": trace, "c_star": c_star, "beta": gap.beta}
    return RecoveryReport("peeling", estimate, K, bound, diag)


def _snap(F: DirichletSample, s: float):
    return min(F.times, key=lambda t: abs(t - s))


def _normalized(F, m):
    if isinstance(F, DirichletSample):
        return F.scaled(1 / m)
    if m == 1:
        return F
    return lambda t: F(t) / m
