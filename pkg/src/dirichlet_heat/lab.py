"""Noise sweeps, stability-rate fits and record export.

A sweep runs ``trials`` independent draws at every noise level. Trial t uses
seed ``seed + t`` for the datum, so all noise levels of one trial share the
same truth; the noise draw is seeded by (seed + t, noise index).
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from mpmath import mp

from .biortho import LogRecoveryConfig, linear_fit, recover_log
from .errors import DirichletHeatError
from .forward import (InitialDatum, TensorDatum, boundary_flux, dirichlet_evaluator, heat_point,
                      hyperplane_sample, quadrature_times, sample)
from .inverse_heat import (InversionConfig, MeasurementChannel, recover_initial_boundary,
                           recover_initial_point, recover_tensor)
from .peeling import PeelingConfig, recover_peeling
from .precision import get_bits, mpf_to_str
from .sensor import propose_point, verify_point
from .sequences import CoefficientSequence, EigenvalueSequence, SequenceNormKind, norm
from .vandermonde import HolderConfig, recover_holder

SCENARIOS = ("series_recovery", "point_inversion", "boundary_inversion", "tensor_inversion")
RECORD_FIELDS = ("epsilon", "trial", "seed", "error", "N", "status")


@dataclass
class ExperimentConfig:
    """One sweep. ``datum`` is ``{"kind": "fixed", "coeffs": [...]}`` or
    ``{"kind": "h_theta" | "l1_theta" | "l1_exp", "modes": n}`` drawn in the
    ball of radius ``m``; ``eigen`` holds ``alpha`` and ``mu`` of
    lambda_k = (k/mu)^(2 alpha).
    """

    scenario: str = "series_recovery"
    method: str = "biortho"
    eigen: dict = field(default_factory=lambda: {"alpha": 1, "mu": 1})
    datum: dict = field(default_factory=lambda: {"kind": "h_theta", "modes": 16})
    noise_grid: list = field(default_factory=lambda: [1e-2, 1e-4, 1e-6, 1e-8, 1e-10])
    trials: int = 10
    seed: int = 0
    precision_bits: int = 256
    T: float = 1.0
    B: list | None = None
    theta: float = 1.0
    m: float = 1.0
    beta: float = 1.0
    n_max: int = 12
    alpha_w: float = 1.0
    beta_w: float | None = None
    tau: float = 1.0
    sensor: str = "golden"
    sensor_K: int = 1000
    mus: list = field(default_factory=lambda: [1.0, 2 ** 0.5])
    eta: float = 1e-3
    peeling_grid: int = 401
    C: float | None = None
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        g = [float(e) for e in self.noise_grid]
        if not g or any(e < 0 for e in g) or any(b >= a for a, b in zip(g, g[1:])):
            raise ValueError("noise grid must be nonnegative and strictly decreasing")

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (str, Path)) and Path(obj).exists():
            obj = json.loads(Path(obj).read_text())
        elif isinstance(obj, str):
            obj = json.loads(obj)
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Record:
    epsilon: float
    trial: int
    seed: int
    error: object
    N: int
    status: str = "ok"
    runtime: float = field(default=0.0, compare=False)


def random_coefficients(kind: str, modes: int, m, rng, theta=1.0, alpha_w=1.0, beta_w=2.0):
    """Random finitely supported sequence on the sphere of radius m of a weighted norm."""
    k = np.arange(1, modes + 1, dtype=float)
    if kind == "h_theta":
        g = rng.standard_normal(modes)
        raw = g * (1 + k * k) ** (-theta / 2) / np.sqrt(k)
        nk = SequenceNormKind.h(theta)
    elif kind == "l1_theta":
        g = rng.uniform(-1, 1, modes)
        raw = g * k ** (-theta - 1)
        nk = SequenceNormKind.l1_weighted(theta) if theta > 0 else "l1"
    elif kind == "l1_exp":
        g = rng.uniform(-1, 1, modes)
        raw = g * np.exp(-alpha_w * k ** beta_w) * 2.0 ** -k
        raw = np.array([float(mp.mpf(float(x))) for x in raw])
        nk = SequenceNormKind.l1_exp_weighted(alpha_w, beta_w)
    elif kind == "uniform":
        raw = rng.uniform(-1, 1, modes)
        nk = "l2"
    else:
        raise ValueError(f"unknown datum kind {kind!r}")
    a = CoefficientSequence(tuple(mp.mpf(float(x)) for x in raw))
    s = norm(a, nk)
    return a.scale(mp.mpf(m) / s) if s > 0 else a


def _datum(cfg: ExperimentConfig, rng):
    d = cfg.datum
    if d.get("kind") == "fixed":
        return CoefficientSequence(tuple(mp.mpf(v) for v in d["coeffs"]))
    beta_w = cfg.beta_w if cfg.beta_w is not None else 2.0
    return random_coefficients(d.get("kind", "h_theta"), int(d.get("modes", 16)), cfg.m, rng,
                               float(d.get("theta", cfg.theta)), cfg.alpha_w, beta_w)


def _times_for(cfg: ExperimentConfig, lam_alpha, mu=1):
    T = mp.mpf(cfg.T)
    if cfg.method == "biortho":
        rate = 2 * (mp.mpf(cfg.n_max) / mp.mpf(mu)) ** (2 * mp.mpf(lam_alpha))
        nodes, w = quadrature_times(T, cfg.n_max, rate)
        return nodes, w, T
    if cfg.method == "vandermonde":
        tau = mp.mpf(cfg.tau)
        n = cfg.n_max
        return [j * tau for j in range(n)], None, (n - 1) * tau if n > 1 else tau
    return [T * j / (cfg.peeling_grid - 1) for j in range(cfg.peeling_grid)], None, T


def _inversion_cfg(cfg: ExperimentConfig, eps) -> InversionConfig:
    return InversionConfig(n_max=cfg.n_max, C=cfg.C, noise_level=eps,
                           precision_bits=cfg.precision_bits, alpha_w=cfg.alpha_w,
                           beta_w=cfg.beta_w,
                           peeling=PeelingConfig(n_max=cfg.n_max, precision_bits=cfg.precision_bits),
                           holder=HolderConfig(N_max=cfg.n_max, tau=cfg.tau,
                                               precision_bits=cfg.precision_bits, C=cfg.C))


def run_trial(cfg: ExperimentConfig, i_eps: int, trial: int) -> Record:
    """One (noise level, trial) cell; errors are recorded, not raised."""
    eps = float(cfg.noise_grid[i_eps])
    seed = cfg.seed + trial
    t0 = time.perf_counter()
    with mp.workprec(cfg.precision_bits):
        try:
            err, N = _run_cell(cfg, eps, seed, i_eps)
            status = "ok"
        except (DirichletHeatError, ArithmeticError, ValueError) as exc:
            err, N, status = mp.nan, 0, f"{type(exc).__name__}: {exc}"
        err_s = mpf_to_str(err, 64) if mp.isfinite(err) else "nan"
    return Record(eps, trial, seed, err_s, int(N), status, time.perf_counter() - t0)


def _noise_seed(seed, i_eps):
    return int(seed) * 1000 + int(i_eps)


def _run_cell(cfg: ExperimentConfig, eps, seed, i_eps):
    rng = np.random.default_rng(seed)
    alpha = mp.mpf(cfg.eigen.get("alpha", 1))
    mu = mp.mpf(cfg.eigen.get("mu", 1))
    times, weights, horizon = _times_for(cfg, alpha, mu)
    nseed = _noise_seed(seed, i_eps)
    if cfg.scenario == "series_recovery":
        count = max(64, cfg.n_max + 2, int(cfg.datum.get("modes", 16)) + 2)
        lam = EigenvalueSequence.power(alpha, mu, count)
        a = _datum(cfg, rng)
        S = sample(dirichlet_evaluator(a, lam), times, eps, seed=nseed, horizon=horizon,
                   weights=weights)
        if cfg.method == "biortho":
            rep = recover_log(S, lam, horizon, cfg.theta, cfg.m,
                              LogRecoveryConfig(noise_level=eps, window=cfg.B, n_max=cfg.n_max,
                                                C=cfg.C, precision_bits=cfg.precision_bits))
        elif cfg.method == "peeling":
            rep = recover_peeling(S, lam, cfg.theta, cfg.m,
                                  PeelingConfig(noise_level=eps, n_max=cfg.n_max,
                                                precision_bits=cfg.precision_bits))
        else:
            beta_w = cfg.beta_w if cfg.beta_w is not None else lam.default_gap().beta1 + 1
            rep = recover_holder(S, lam, cfg.m, cfg.alpha_w, beta_w,
                                 HolderConfig(noise_level=eps, N_max=cfg.n_max, tau=cfg.tau,
                                              C=cfg.C, precision_bits=cfg.precision_bits))
        n = max(len(a), len(rep.estimate))
        return (rep.estimate.padded(n) - a.padded(n)).norm("l2"), rep.truncation
    icfg = _inversion_cfg(cfg, eps)
    if cfg.scenario == "point_inversion":
        f = InitialDatum(_datum(cfg, rng), mu)
        pt = verify_point(propose_point(cfg.sensor, mu), cfg.sensor_K)
        S = sample(lambda t: heat_point(f, alpha, pt.x0, t), times, eps, seed=nseed,
                   horizon=horizon, weights=weights)
        ch = MeasurementChannel("point", alpha, S, pt, horizon=horizon, window=cfg.B)
        res = recover_initial_point(ch, cfg.theta, cfg.m, cfg.method, icfg, truth=f)
        return res.diagnostics["l2_error"], res.report.truncation
    if cfg.scenario == "boundary_inversion":
        f = InitialDatum(_datum(cfg, rng), mu)
        coeffs = CoefficientSequence(tuple(k / mu * c for k, c in enumerate(f.coeffs, start=1)))
        lam = EigenvalueSequence.power(alpha, mu, max(64, len(coeffs) + 2))
        ev = dirichlet_evaluator(coeffs, lam) if cfg.method != "biortho" else \
            (lambda t: boundary_flux(f, alpha, t))
        S = sample(ev, times, eps, seed=nseed, horizon=horizon, weights=weights)
        ch = MeasurementChannel("flux", alpha, S, mu=mu, horizon=horizon, window=cfg.B)
        res = recover_initial_boundary(ch, alpha, cfg.beta, cfg.m, cfg.method, icfg, truth=f)
        return res.diagnostics["l2_error"], res.report.truncation
    # tensor
    mus = [mp.mpf(v) for v in cfg.mus]
    factors = tuple(InitialDatum(_datum(cfg, rng), mj) for mj in mus)
    F = TensorDatum(factors, True)
    sens = [verify_point(propose_point(cfg.sensor, mj), cfg.sensor_K) for mj in mus]
    chs = [hyperplane_sample(F, alpha, j, sens[j].x0, times, weights, epsilon=eps,
                             seed=nseed * 10 + j, horizon=horizon) for j in range(len(mus))]
    res = recover_tensor(chs, alpha, mus, cfg.eta, cfg.theta, cfg.m, sens, cfg.method, icfg,
                         truth=F)
    return res.diagnostics["l2_error"], res.report.truncation


def _cell(args):
    cfg_dict, i, t = args
    cfg = ExperimentConfig(**cfg_dict)
    mp.prec = cfg.precision_bits
    return run_trial(cfg, i, t)


def run_experiment(cfg: ExperimentConfig, seeds=None) -> list:
    """All (noise level, trial) cells, sorted by (epsilon descending, trial)."""
    cells = [(i, t) for i in range(len(cfg.noise_grid)) for t in range(cfg.trials)]
    if cfg.workers > 1:
        payload = [(asdict(cfg), i, t) for i, t in cells]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_cell, payload))
    else:
        records = [run_trial(cfg, i, t) for i, t in cells]
    return sorted(records, key=lambda r: (-r.epsilon, r.trial))


@dataclass
class RateFit:
    model: str
    exponent: float
    C: float
    r2: float
    points: int
    degenerate: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def _finite(records):
    out = {}
    for r in records:
        e = float(r.error) if not isinstance(r.error, float) else r.error
        if r.epsilon > 0 and math.isfinite(e) and e > 0:
            out.setdefault(r.epsilon, []).append(e)
    return out


def median_errors(records) -> dict:
    """epsilon -> median error over finite trials."""
    return {eps: float(np.median(v)) for eps, v in sorted(_finite(records).items(), reverse=True)}


def rate_shape(model: str, eps, exponent):
    """The model curve without its constant."""
    le = abs(math.log(eps))
    if model == "log":
        return le ** (-exponent)
    if model == "doublelog":
        return math.log(le) ** (-exponent / 2)
    if model == "holder":
        return eps ** exponent
    raise ValueError(f"unknown model {model!r}")


def _design(model, eps):
    le = np.abs(np.log(eps))
    if model == "log":
        return np.log(le)
    if model == "doublelog":
        return np.log(np.log(le))
    if model == "holder":
        return np.log(eps)
    raise ValueError(f"unknown model {model!r}")


def fit_rate(records, model: str = "log") -> RateFit:
    """Least squares on median errors in the linearizing coordinates.

    log: ln err = ln C - theta ln|ln eps|; doublelog: ln err = ln C -
    (theta/2) ln ln|ln eps|; holder: ln err = ln C + gamma ln eps.
    """
    med = median_errors(records) if not isinstance(records, dict) else records
    if len(med) < 4:
        raise ValueError(f"need at least 4 noise levels with finite errors, got {len(med)}")
    eps = np.array(list(med.keys()), dtype=float)
    err = np.array(list(med.values()), dtype=float)
    if model == "doublelog" and np.any(np.abs(np.log(eps)) <= 1):
        raise ValueError("doublelog model needs eps < 1/e")
    x = _design(model, eps)
    y = np.log(err)
    if np.ptp(y) == 0 or np.ptp(x) == 0:
        return RateFit(model, 0.0, float(err[0]), 0.0, len(med), True)
    slope, intercept, r2 = linear_fit(x, y)
    exponent = {"log": -slope, "doublelog": -2 * slope, "holder": slope}[model]
    return RateFit(model, float(exponent), float(math.exp(intercept)),
                   float(min(max(r2, 0.0), 1.0)), len(med), False)


def calibrate_constant(records, model: str, exponent: float) -> float:
    """Envelope C = max err / shape over all finite records."""
    best = 0.0
    for eps, errs in _finite(records).items():
        best = max(best, max(errs) / rate_shape(model, eps, exponent))
    return best


def bound_violations(records, model, exponent, C, use_median=True):
    """Noise levels whose (median) error exceeds C * shape."""
    data = median_errors(records) if use_median else {
        eps: max(v) for eps, v in _finite(records).items()}
    return [(eps, e, C * rate_shape(model, eps, exponent)) for eps, e in data.items()
            if e > C * rate_shape(model, eps, exponent)]


def is_monotone(records) -> bool:
    """Median error non-increasing as epsilon decreases."""
    vals = list(median_errors(records).values())
    return all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def export(records, fits, path, config: ExperimentConfig | None = None):
    """Write <path>.csv (records, runtime excluded) and <path>.json (fits, config, runtimes)."""
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".csv", ".json") else path
    csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([repr(float(r.epsilon)), r.trial, r.seed, r.error, r.N, r.status])
    meta = {"fits": {k: (v.to_json() if hasattr(v, "to_json") else v) for k, v in (fits or {}).items()},
            "config": config.to_json() if config is not None else None,
            "runtimes": [r.runtime for r in records]}
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return csv_path, json_path


def import_records(path) -> list:
    path = Path(path)
    csv_path = path if path.suffix == ".csv" else path.with_suffix(".csv")
    with csv_path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != RECORD_FIELDS:
        raise ValueError("unexpected header")
    runtimes = []
    side = csv_path.with_suffix(".json")
    if side.exists():
        runtimes = json.loads(side.read_text()).get("runtimes", [])
    out = []
    for i, row in enumerate(rows[1:]):
        rt = runtimes[i] if i < len(runtimes) else 0.0
        out.append(Record(float(row[0]), int(row[1]), int(row[2]), row[3], int(row[4]), row[5], rt))
    return out
