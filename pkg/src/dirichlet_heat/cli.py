"""Command line entry point.

    dirichlet-heat [--precision-bits B] [--seed S] [--config FILE] COMMAND ...

Commands: ``forward`` (simulate a measurement), ``recover`` (invert one),
``sensor-check`` (certify a sensor point), ``experiment`` (noise sweep) and
``fit`` (rate fit on exported records). For ``experiment`` the config file
is an :class:`ExperimentConfig`; for the other commands its keys provide
defaults for the command's options (dashes written as underscores).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from mpmath import mp

from . import lab
from .biortho import LogRecoveryConfig, recover_log
from .errors import DirichletHeatError
from .forward import (DirichletSample, HyperplaneSample, InitialDatum, TensorDatum,
                      dirichlet_evaluator, heat_point, hyperplane_sample,
                      quadrature_times, sample)
from .inverse_heat import (InversionConfig, MeasurementChannel, recover_initial_boundary,
                           recover_initial_point, recover_tensor)
from .peeling import PeelingConfig, recover_peeling
from .precision import get_bits, mpf_to_str, set_bits
from .sensor import parse_expression, propose_point, verify_point
from .sequences import CoefficientSequence, EigenvalueSequence
from .vandermonde import HolderConfig, recover_holder

METHODS = ("biortho", "peeling", "vandermonde")


def _coeffs(text):
    """'1,0.5,-0.25' -> CoefficientSequence; expressions such as 1/3 are allowed."""
    vals = [parse_expression(v, get_bits()) for v in str(text).split(",") if v.strip()]
    if not vals:
        raise ValueError("empty coefficient list")
    return CoefficientSequence(tuple(vals))


def _factor_coeffs(text):
    return [_coeffs(part) for part in str(text).split(";")]


def _num(text):
    return parse_expression(text, get_bits()) if isinstance(text, str) else mp.mpf(text)


def _mus(text):
    return [_num(v) for v in str(text).split(",")]


def _sensor(args, mu):
    pt = propose_point(args.sensor, mu, args.x0)
    return verify_point(pt, args.K)


def _times(args, lam_max):
    T = _num(args.T)
    if args.grid == "quadrature":
        nodes, weights = quadrature_times(T, args.n_max, 2 * lam_max)
        return nodes, weights, T
    if args.grid == "vandermonde":
        tau = _num(args.tau)
        n = args.n_max
        return [j * tau for j in range(n)], None, max(tau * (n - 1), tau)
    n = args.points
    return [T * j / (n - 1) for j in range(n)], None, T


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def cmd_forward(args):
    alpha, mu = _num(args.alpha), _num(args.mu)
    lam_max = (mp.mpf(args.n_max) / mu) ** (2 * alpha)
    times, weights, T = _times(args, lam_max)
    if args.channel == "hyperplane":
        mus = _mus(args.mus)
        parts = _factor_coeffs(args.coeffs)
        if len(parts) != len(mus):
            raise ValueError("give one coefficient list per axis, separated by ';'")
        F = TensorDatum(tuple(InitialDatum(c, m) for c, m in zip(parts, mus)), True)
        out = []
        for j, mj in enumerate(mus):
            pt = _sensor(args, mj)
            out.append(hyperplane_sample(F, alpha, j, pt.x0, times, weights, epsilon=args.epsilon,
                                         seed=None if args.seed is None else args.seed * 10 + j,
                                         horizon=T).to_json())
        _write_json({"channels": out, "mus": [mpf_to_str(m) for m in mus]}, args.out)
        return 0
    a = _coeffs(args.coeffs)
    if args.channel == "series":
        lam = EigenvalueSequence.power(alpha, mu, len(a))
        ev = dirichlet_evaluator(a, lam)
    elif args.channel == "point":
        f = InitialDatum(a, mu)
        pt = _sensor(args, mu)
        ev = lambda t: heat_point(f, alpha, pt.x0, t)  # noqa: E731
    else:
        # finite support: the flux is the series sum_k (k/mu) fhat_k exp(-lambda_k t), also at t = 0
        b = CoefficientSequence(tuple(k / mu * c for k, c in enumerate(a, start=1)))
        ev = dirichlet_evaluator(b, EigenvalueSequence.power(alpha, mu, len(a)))
    S = sample(ev, times, args.epsilon, seed=args.seed, horizon=T, weights=weights,
               keep_truth=False)
    if args.out in (None, "-"):
        for t, v in zip(S.times, S.values):
            print(f"{mpf_to_str(t)},{mpf_to_str(v)}")
    else:
        S.to_csv(args.out)
    return 0


def _inversion_config(args, lam_count):
    bits = get_bits()
    eps = args.epsilon
    return InversionConfig(n_max=args.n_max, C=args.C, noise_level=eps,
                           bound_constant=args.bound_constant, precision_bits=bits,
                           count=max(64, lam_count),
                           peeling=PeelingConfig(n_max=args.n_max, precision_bits=bits),
                           holder=HolderConfig(N_max=args.n_max, tau=_num(args.tau),
                                               precision_bits=bits))


def cmd_recover(args):
    t0 = time.perf_counter()
    alpha, mu = _num(args.alpha), _num(args.mu)
    bits = get_bits()
    if args.channel == "tensor":
        obj = json.loads(Path(args.data).read_text())
        chs = [HyperplaneSample.from_json(c) for c in obj["channels"]]
        mus = [mp.mpf(m) for m in obj["mus"]]
        sens = [_sensor(args, m) for m in mus]
        res = recover_tensor(chs, alpha, mus, args.eta, args.theta, args.m, sens, args.method,
                             _inversion_config(args, args.n_max + 2))
        out = res.to_json()
    else:
        S = DirichletSample.from_csv(args.data)
        window = [(_num(a), _num(b)) for a, b in args.window] if args.window else None
        if args.channel == "series":
            lam = EigenvalueSequence.power(alpha, mu, max(64, args.n_max + 2))
            if args.method == "biortho":
                rep = recover_log(S, lam, S.horizon, args.theta, args.m,
                                  LogRecoveryConfig(noise_level=args.epsilon, window=window,
                                                    n_max=args.n_max, C=args.C,
                                                    bound_constant=args.bound_constant,
                                                    precision_bits=bits))
            elif args.method == "peeling":
                rep = recover_peeling(S, lam, args.theta, args.m,
                                      PeelingConfig(noise_level=args.epsilon, n_max=args.n_max,
                                                    precision_bits=bits,
                                                    bound_constant=args.bound_constant))
            else:
                beta_w = args.beta_w if args.beta_w is not None else lam.default_gap().beta1 + 1
                rep = recover_holder(S, lam, args.m, args.alpha_w, beta_w,
                                     HolderConfig(noise_level=args.epsilon, N_max=args.n_max,
                                                  tau=_num(args.tau), C=args.C,
                                                  precision_bits=bits,
                                                  bound_constant=args.bound_constant))
            out = {"report": rep.to_json(), "estimate": rep.estimate.to_strings()}
        elif args.channel == "point":
            ch = MeasurementChannel("point", alpha, S, _sensor(args, mu), horizon=S.horizon,
                                    window=window)
            res = recover_initial_point(ch, args.theta, args.m, args.method,
                                        _inversion_config(args, args.n_max + 2))
            out = res.to_json()
        else:
            ch = MeasurementChannel("flux", alpha, S, mu=mu, horizon=S.horizon, window=window)
            res = recover_initial_boundary(ch, alpha, args.beta, args.m, args.method,
                                           _inversion_config(args, args.n_max + 2))
            out = res.to_json()
    out["method"] = args.method
    out["N"] = out["report"]["truncation"]
    out["timings"] = {"total_seconds": time.perf_counter() - t0}
    out["precision_bits"] = bits
    _write_json(out, args.out)
    return 0


def cmd_sensor_check(args):
    t0 = time.perf_counter()
    pt = verify_point(propose_point(args.strategy, args.mu, args.x0), args.K, args.reduction_bits)
    # the certificate itself carries no timing so repeated runs are byte-identical
    _write_json(pt.to_json(), args.out)
    print(f"scan of K = {args.K}: {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return 0 if pt.verified else 1


def cmd_experiment(args, config):
    if config is None:
        raise ValueError("experiment needs --config with an ExperimentConfig")
    cfg = lab.ExperimentConfig.from_json(config)
    if args.precision_bits is not None:
        cfg.precision_bits = args.precision_bits
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    out = args.out or cfg.output
    if not out:
        raise ValueError("experiment needs --out or an 'output' key in the config")
    records = lab.run_experiment(cfg)
    fits = {}
    for model in args.models:
        try:
            fits[model] = lab.fit_rate(records, model)
        except ValueError as exc:
            fits[model] = {"error": str(exc)}
    csv_path, json_path = lab.export(records, fits, out, cfg)
    print(f"{len(records)} records -> {csv_path}, {json_path}")
    return 0


def cmd_fit(args):
    records = lab.import_records(args.records)
    fit = lab.fit_rate(records, args.model)
    obj = fit.to_json()
    obj["calibrated_C"] = lab.calibrate_constant(records, args.model, fit.exponent)
    obj["monotone"] = lab.is_monotone(records)
    _write_json(obj, args.out)
    return 0


def _common_recovery(p):
    p.add_argument("--alpha", default="1", help="fractional order alpha")
    p.add_argument("--mu", default="1", help="interval (0, mu*pi) scale")
    p.add_argument("--n-max", type=int, default=12, help="largest truncation / system size")
    p.add_argument("--tau", default="1", help="sampling step of the vandermonde grid")
    p.add_argument("--sensor", default="golden", choices=("golden", "silver", "explicit"))
    p.add_argument("--x0", default=None, help="explicit sensor position (expression)")
    p.add_argument("--K", type=int, default=1000, help="sensor verification range")


def build_parser():
    p = argparse.ArgumentParser(prog="dirichlet-heat", description=__doc__.splitlines()[0])
    p.add_argument("--precision-bits", type=int, default=None, help="working precision (bits)")
    p.add_argument("--seed", type=int, default=None, help="noise / sweep seed")
    p.add_argument("--config", default=None, help="JSON config file")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="simulate a measurement and write it as CSV")
    f.add_argument("--channel", choices=("series", "point", "flux", "hyperplane"), default="point")
    f.add_argument("--coeffs", required=False, default="1",
                   help="coefficients a_1,a_2,... (';' separates tensor factors)")
    f.add_argument("--mus", default="1,sqrt(2)", help="axis scales for hyperplane data")
    f.add_argument("--T", default="1")
    f.add_argument("--grid", choices=("quadrature", "uniform", "vandermonde"), default="quadrature")
    f.add_argument("--points", type=int, default=401, help="uniform grid size")
    f.add_argument("--epsilon", type=float, default=0.0, help="sup-norm noise level")
    f.add_argument("--out", default=None)
    _common_recovery(f)

    r = sub.add_parser("recover", help="invert a measurement written by 'forward'")
    r.add_argument("--channel", choices=("series", "point", "flux", "tensor"), default="point")
    r.add_argument("--method", choices=METHODS, default="biortho")
    r.add_argument("--data", required=False, help="sample CSV (or hyperplane JSON for tensor)")
    r.add_argument("--theta", type=float, default=1.0)
    r.add_argument("--m", type=float, default=1.0)
    r.add_argument("--beta", type=float, default=1.0, help="flux regularity")
    r.add_argument("--eta", type=float, default=1e-3, help="tensor factor sup-norm threshold")
    r.add_argument("--epsilon", type=float, default=None, help="declared noise level")
    r.add_argument("--C", type=float, default=None, help="calibrated truncation constant")
    r.add_argument("--bound-constant", type=float, default=1.0)
    r.add_argument("--alpha-w", type=float, default=1.0)
    r.add_argument("--beta-w", type=float, default=None)
    r.add_argument("--window", type=float, nargs=2, action="append", default=None,
                   metavar=("LO", "HI"), help="measurement set B (repeatable)")
    r.add_argument("--out", default=None)
    _common_recovery(r)

    s = sub.add_parser("sensor-check", help="certify k|sin(k x0/mu)| > 0 for k <= K")
    s.add_argument("--strategy", choices=("golden", "silver", "explicit"), default="golden")
    s.add_argument("--mu", default="1")
    s.add_argument("--x0", default=None)
    s.add_argument("--K", type=int, default=100000)
    s.add_argument("--reduction-bits", type=int, default=None)
    s.add_argument("--out", default=None)

    e = sub.add_parser("experiment", help="run a noise sweep from --config")
    e.add_argument("--out", default=None, help="output prefix for .csv/.json")
    e.add_argument("--models", nargs="*", default=["log"],
                   choices=("log", "doublelog", "holder"))
    e.add_argument("--workers", type=int, default=None)

    ft = sub.add_parser("fit", help="fit a stability rate to exported records")
    ft.add_argument("--records", required=False)
    ft.add_argument("--model", choices=("log", "doublelog", "holder"), default="log")
    ft.add_argument("--out", default=None)
    return p, {"forward": f, "recover": r, "sensor-check": s, "experiment": e, "fit": ft}


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    config = None
    if args.config:
        config = json.loads(Path(args.config).read_text())
        if args.command != "experiment":
            sp = subs[args.command]
            known = {a.dest for a in sp._actions}
            extra = set(config) - known
            if extra:
                parser.error(f"unknown config keys for {args.command}: {sorted(extra)}")
            sp.set_defaults(**config)
            args = parser.parse_args(argv)
    if args.precision_bits is not None:
        set_bits(args.precision_bits)
    try:
        if args.command == "forward":
            return cmd_forward(args)
        if args.command == "recover":
            if not args.data:
                parser.error("recover needs --data")
            return cmd_recover(args)
        if args.command == "sensor-check":
            return cmd_sensor_check(args)
        if args.command == "experiment":
            return cmd_experiment(args, config)
        if not args.records:
            parser.error("fit needs --records")
        return cmd_fit(args)
    except (DirichletHeatError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
