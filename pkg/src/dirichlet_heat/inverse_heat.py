"""Initial-datum reconstruction from point, boundary-flux and hyperplane data.

Each inversion reduces to a Dirichlet series in the eigenvalues
lambda_k = (k/mu)^(2 alpha), recovers its coefficients with one of the three
routes and maps them back to sine coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from mpmath import mp

from .biortho import (LogRecoveryConfig, RecoveryReport, effective_noise, recover_log,
                      select_truncation, truncation_constant)
from .errors import RegimeError, SensorError
from .forward import DirichletSample, HyperplaneSample, InitialDatum, TensorDatum
from .peeling import PeelingConfig, recover_peeling
from .precision import get_bits, mpf_to_str
from .sensor import SensorPoint, series_to_mode
from .sequences import CoefficientSequence, EigenvalueSequence
from .vandermonde import HolderConfig, recover_holder


@dataclass
class MeasurementChannel:
    """Where the data come from.

    ``kind`` is "point", "flux" or "hyperplane". ``data`` is a
    :class:`DirichletSample` or an evaluator t -> value for the first two,
    and a list of :class:`HyperplaneSample` (one per axis) for hyperplane
    data. ``window`` is the set B used for measured sup norms and bound
    reports; it defaults to [T/4, 3T/4].
    """

    kind: str
    alpha: object
    data: object
    sensor: SensorPoint | None = None
    mu: object = 1
    horizon: object = 1
    window: list | None = None

    def __post_init__(self):
        if self.kind not in ("point", "flux", "hyperplane"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "point":
            if self.sensor is None:
                raise SensorError("a point channel needs a sensor point")
            if not self.sensor.verified:
                raise SensorError("a point channel needs a verified sensor point")
            self.mu = self.sensor.mu
        if isinstance(self.data, DirichletSample):
            self.horizon = self.data.horizon

    def B(self):
        T = mp.mpf(self.horizon)
        return self.window or [(T / 4, 3 * T / 4)]


@dataclass
class InversionResult:
    estimate: object
    report: RecoveryReport
    theorem_bound: object
    theorem_tag: str
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        est = self.estimate
        if isinstance(est, TensorDatum):
            est_json = [f.coeffs.to_strings() for f in est.factors]
        else:
            est_json = est.coeffs.to_strings()
        diag = {k: (mpf_to_str(v) if isinstance(v, mp.mpf) else v)
                for k, v in self.diagnostics.items()}
        return {"estimate": est_json, "report": self.report.to_json(),
                "theorem_bound": mpf_to_str(self.theorem_bound), "theorem_tag": self.theorem_tag,
                "diagnostics": diag}


@dataclass
class InversionConfig:
    """Shared knobs. ``bound_constant`` is the calibrated C of the theorem bound
    (1.0 means uncalibrated); ``alpha_w``/``beta_w`` set the weighted-l1
    prior of the Vandermonde route; ``c_theta`` enters the double-log bound.
    """

    n_max: int = 12
    C: float | None = None
    noise_level: object = None
    bound_constant: float = 1.0
    precision_bits: int | None = None
    count: int = 64
    alpha_w: float = 1.0
    beta_w: float | None = None
    c_theta: float = 1.0
    peeling: PeelingConfig | None = None
    holder: HolderConfig | None = None


def eigenvalues(alpha, mu, count) -> EigenvalueSequence:
    return EigenvalueSequence.power(alpha, mu, count)


def _log_shape(eps, power):
    eps = mp.mpf(eps)
    if eps <= 0:
        return mp.zero
    le = abs(mp.log(eps))
    return le ** (-mp.mpf(power)) + eps if le > 0 else mp.inf


def _loglog_shape(eps, power):
    eps = mp.mpf(eps)
    if eps <= 0:
        return mp.zero
    if eps >= mp.exp(-mp.e):
        return mp.one + eps
    return mp.log(-mp.log(eps)) ** (-mp.mpf(power)) + eps


def _recover_series(F, lam, method, theta, m, cfg: InversionConfig, T, window, d0=None,
                    order_shift=0):
    """Run one route on a Dirichlet series; returns the RecoveryReport."""
    bits = int(cfg.precision_bits or get_bits())
    if method == "biortho":
        if 2 * float(lam.alpha) <= 1:
            raise RegimeError("the biorthogonal route needs 2*alpha > 1 (summable 1/lambda_k)")
        n_cap = min(cfg.n_max, len(lam))
        with mp.workprec(bits):
            C = cfg.C if cfg.C is not None else truncation_constant(lam, T, n_cap, bits)
            eps, _ = effective_noise(F, T, cfg.noise_level, window, bits)
            scale = mp.mpf(d0) if d0 else mp.one
            N = select_truncation(eps / scale, C, theta + order_shift, m, n_cap)
        lcfg = LogRecoveryConfig(noise_level=cfg.noise_level, window=window, n_max=n_cap, C=C, N=N,
                                 precision_bits=bits)
        return recover_log(F, lam, T, theta, m, lcfg)
    if method == "peeling":
        pcfg = cfg.peeling or PeelingConfig(n_max=cfg.n_max, precision_bits=bits)
        if cfg.noise_level is not None:
            pcfg = replace(pcfg, noise_level=cfg.noise_level)
        return recover_peeling(F, lam, theta, m, pcfg)
    if method == "vandermonde":
        hcfg = cfg.holder or HolderConfig(N_max=min(cfg.n_max, len(lam)), precision_bits=bits)
        if cfg.noise_level is not None:
            hcfg = replace(hcfg, noise_level=cfg.noise_level)
        gap = lam.default_gap()
        beta_w = cfg.beta_w if cfg.beta_w is not None else gap.beta1 + 1
        return recover_holder(F, lam, m, cfg.alpha_w, beta_w, hcfg)
    raise ValueError(f"unknown method {method!r}")


def _noise_for_bound(report: RecoveryReport):
    d = report.diagnostics
    return d.get("epsilon", mp.zero)


def recover_initial_point(channel: MeasurementChannel, theta, m, method: str = "biortho",
                          config: InversionConfig | None = None, truth: InitialDatum | None = None
                          ) -> InversionResult:
    """Sine coefficients of f from u(x0, t): recover a_k = sin(k x0/mu) fhat_k, then divide."""
    if channel.kind != "point":
        raise ValueError("expected a point channel")
    cfg = config or InversionConfig()
    pt = channel.sensor
    alpha = mp.mpf(channel.alpha)
    lam = eigenvalues(alpha, pt.mu, max(cfg.count, cfg.n_max + 2))
    T = mp.mpf(channel.horizon)
    if method == "biortho" and 2 * alpha <= 1:
        raise RegimeError(f"alpha = {mp.nstr(alpha, 5)}: the biorthogonal route needs alpha > 1/2; "
                          "use peeling or vandermonde")
    report = _recover_series(channel.data, lam, method, theta, m, cfg, T, channel.B(),
                             d0=pt.d0_empirical, order_shift=1)
    a = report.estimate
    if a.support > pt.K:
        raise SensorError(f"recovered support {a.support} exceeds verified range K = {pt.K}")
    est = series_to_mode(a, pt, (theta, m))
    eps = _noise_for_bound(report)
    C = mp.mpf(cfg.bound_constant)
    if method == "biortho":
        tag, bound = "log-point", C * _log_shape(eps, 1)
    elif method == "peeling":
        r = mp.mpf(eps) / (mp.mpf(m) * mp.mpf(cfg.c_theta))
        tag, bound = "loglog-point", C * _loglog_shape(r, mp.mpf(1) / 4) + C * mp.mpf(eps)
    else:
        gamma = report.diagnostics.get("gamma", 0.0)
        tag = "holder-point"
        bound = C * (mp.mpf(eps) ** gamma + mp.mpf(eps)) if eps > 0 else mp.zero
    diag = _truth_diag(est, truth)
    diag["d0_empirical"] = pt.d0_empirical
    return InversionResult(est, report, bound, tag, diag)


def recover_initial_boundary(channel: MeasurementChannel, alpha, beta, m, method: str | None = None,
                             config: InversionConfig | None = None,
                             truth: InitialDatum | None = None) -> InversionResult:
    """Sine coefficients of f from the flux d/dx u(0, t): b_k = (k/mu) fhat_k."""
    if channel.kind != "flux":
        raise ValueError("expected a flux channel")
    cfg = config or InversionConfig()
    alpha = mp.mpf(alpha)
    mu = mp.mpf(channel.mu)
    lam = eigenvalues(alpha, mu, max(cfg.count, cfg.n_max + 2))
    T = mp.mpf(channel.horizon)
    if method is None:
        method = "biortho" if 2 * alpha > 1 else "vandermonde"
    if beta <= 0:
        raise ValueError("beta must be positive")
    report = _recover_series(channel.data, lam, method, beta, m, cfg, T, channel.B())
    b = report.estimate
    fhat = CoefficientSequence(tuple(mu * v / k for k, v in enumerate(b, start=1)))
    est = InitialDatum(fhat, mu, (beta, m))
    eps = _noise_for_bound(report)
    power = mp.mpf(beta) / max(alpha, mp.mpf(beta))
    bound = mp.mpf(cfg.bound_constant) * _log_shape(eps, power)
    diag = _truth_diag(est, truth)
    diag["rate_exponent"] = float(power)
    return InversionResult(est, report, bound, "log-flux", diag)


def _truth_diag(est: InitialDatum, truth: InitialDatum | None) -> dict:
    if truth is None:
        return {}
    n = max(len(est.coeffs), len(truth.coeffs))
    diff = InitialDatum(est.coeffs.padded(n) - truth.coeffs.padded(n), est.mu)
    err = diff.l2_norm()
    ref = truth.l2_norm()
    return {"l2_error": err, "relative_error": err / ref if ref > 0 else err}


def project_hyperplane(hs: HyperplaneSample, mus, alpha) -> DirichletSample:
    """Project onto prod_{i != axis} sin(x_i/mu_i) and remove the transverse envelope.

    The result is c * u_axis(x0_axis, t) with c the product of the
    transverse first sine coefficients.
    """
    alpha = mp.mpf(alpha)
    others = [i for i in range(len(mus)) if i != hs.axis]
    norm = mp.fprod(2 / (mp.mpf(mus[i]) * mp.pi) for i in others) if others else mp.one
    basis = [mp.fprod(mp.sin(x / mp.mpf(mus[i])) for x, i in zip(node, others))
             for node in hs.nodes]
    rate = mp.fsum((1 / mp.mpf(mus[i])) ** (2 * alpha) for i in others)
    values = []
    for j, t in enumerate(hs.times):
        proj = mp.fsum(w * b * row[j] for w, b, row in zip(hs.node_weights, basis, hs.values))
        values.append(norm * proj * mp.exp(rate * t))
    # noise after projection: sup |sum w b e| <= eps * sum |w b| * norm, then the envelope
    noise = mp.zero
    if hs.noise_level > 0:
        noise = hs.noise_level * norm * mp.fsum(abs(w * b) for w, b in zip(hs.node_weights, basis)) \
            * mp.exp(rate * hs.horizon)
    return DirichletSample(hs.times, values, noise, "sup", hs.horizon, None, hs.time_weights)


def recover_tensor(channels, alpha, mus, eta, theta, m, sensors, method: str = "biortho",
                   config: InversionConfig | None = None, truth: TensorDatum | None = None
                   ) -> InversionResult:
    """Tensor-product datum from one hyperplane measurement per axis.

    ``sensors[j]`` is the verified point on axis j (its ``mu`` must equal
    ``mus[j]``). Each axis yields g_j = c_j f_j with c_j the product of the
    other factors' first coefficients; P = g_{j,1} for every j fixes the
    scalars and the product is prod_j g_j / P^(d-1).
    """
    cfg = config or InversionConfig()
    d = len(mus)
    if len(channels) != d or len(sensors) != d:
        raise ValueError("need one channel and one sensor per axis")
    per_axis, reports = [], []
    eps_max = mp.zero
    for j, hs in enumerate(sorted(channels, key=lambda h: h.axis)):
        if hs.axis != j:
            raise ValueError("channels must cover every axis once")
        pt = sensors[j]
        if abs(pt.x0 - hs.x0_axis) > mp.ldexp(max(1, abs(pt.x0)), -mp.prec // 2):
            raise SensorError(f"axis {j}: hyperplane position differs from the sensor point")
        G = project_hyperplane(hs, mus, alpha)
        ch = MeasurementChannel("point", alpha, G, pt, horizon=hs.horizon)
        res = recover_initial_point(ch, theta, m, method, cfg)
        per_axis.append(res.estimate)
        reports.append(res.report)
        eps_max = max(eps_max, mp.mpf(res.report.diagnostics.get("epsilon", 0)))
    firsts = [g.coeffs[1] for g in per_axis]
    P = mp.fsum(firsts) / d
    spread = max(abs(v - P) for v in firsts)
    floor = max(eps_max, mp.ldexp(1, -mp.prec // 2))
    if abs(P) <= 10 * floor or abs(P) <= spread:
        raise RegimeError("first transverse Fourier coefficient vanishes at noise level; "
                          "the scalar ambiguity cannot be fixed")
    scale = abs(P) ** (mp.mpf(d - 1) / d)
    sign = mp.sign(P) ** (d - 1)
    factors = []
    for j, g in enumerate(per_axis):
        s = sign / scale if j == 0 else 1 / scale
        factors.append(InitialDatum(g.coeffs.scale(s), mus[j]))
    est = TensorDatum(tuple(factors), True)
    for j, f in enumerate(factors):
        sup = f.sup_norm()
        if sup < eta:
            raise RegimeError(f"factor {j} has sup norm {mp.nstr(sup, 5)} below eta = {eta}")
    tag = "log-tensor"
    bound = mp.mpf(cfg.bound_constant) * _log_shape(eps_max, theta) if eps_max > 0 else mp.zero
    N = max(r.truncation for r in reports)
    combined = RecoveryReport(reports[0].method, factors[0].coeffs, N, bound,
                              {"axes": [r.diagnostics for r in reports], "P": P,
                               "first_spread": spread, "epsilon": eps_max})
    diag = {"P": P}
    if truth is not None:
        err = est.distance(truth)
        ref = truth.l2_norm()
        diag.update(l2_error=err, relative_error=err / ref)
    return InversionResult(est, combined, bound, tag, diag)
