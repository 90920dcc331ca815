"""Sensor points x0 with |sin(k x0/mu)| >= d0/k and the coefficient map at x0.

Writing x0 = mu*pi*r, the scan needs the distance from k*r to the nearest
integer. It is computed exactly from a fixed-point copy of r (mod 1), so
near-zero sines are resolved without floating-point argument reduction.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, replace

from mpmath import mp

from . import kernels
from .errors import IllConditionedError, SensorError
from .forward import InitialDatum
from .precision import mpf_to_str
from .sequences import CoefficientSequence

_RATIO_BITS = 512


@dataclass(frozen=True)
class SensorPoint:
    """x0 in (0, mu*pi) with its ratio r = x0/(mu*pi) kept at high precision."""

    x0: object
    mu: object
    strategy: str
    ratio: object
    K: int | None = None
    d0_empirical: float | None = None
    argmin: int | None = None
    verified: bool = False

    def to_json(self) -> dict:
        return {"x0": mpf_to_str(self.x0), "mu": mpf_to_str(self.mu), "strategy": self.strategy,
                "ratio": mpf_to_str(self.ratio, _RATIO_BITS), "K": self.K,
                "d0_empirical": self.d0_empirical, "argmin": self.argmin,
                "verified": self.verified}

    def sine(self, k: int):
        """sin(k x0 / mu) = sin(pi k r) at the current precision."""
        return mp.sinpi(k * self.ratio)


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _names():
    return {"pi": mp.pi, "e": mp.e, "phi": mp.phi, "golden": (mp.sqrt(5) - 1) / 2,
            "silver": mp.sqrt(2) - 1}


_FUNCS = {"sqrt": lambda x: mp.sqrt(x), "sin": lambda x: mp.sin(x), "cos": lambda x: mp.cos(x),
          "exp": lambda x: mp.exp(x), "log": lambda x: mp.log(x)}


def parse_expression(text: str, bits: int = _RATIO_BITS):
    """Evaluate an arithmetic expression such as ``pi*(sqrt(5)-1)/2`` at ``bits``.

    Only numbers, + - * / **, the constants pi, e, phi, golden, silver and
    the functions sqrt, sin, cos, exp, log are accepted.
    """
    tree = ast.parse(str(text).strip(), mode="eval")
    with mp.workprec(bits):
        names = _names()

        def ev(node):
            if isinstance(node, ast.Expression):
                return ev(node.body)
            if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
                return mp.mpf(node.value) if isinstance(node.value, int) else mp.mpf(repr(node.value))
            if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
                return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
            if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
                return _UNARY[type(node.op)](ev(node.operand))
            if isinstance(node, ast.Name) and node.id in names:
                return names[node.id]
            if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                    and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
                return _FUNCS[node.func.id](ev(node.args[0]))
            raise ValueError(f"unsupported expression element: {ast.dump(node)[:60]}")

        return +ev(tree)


def propose_point(strategy: str = "golden", mu=1, x0=None) -> SensorPoint:
    """Unverified sensor point.

    ``golden``: x0 = mu*pi*(sqrt5 - 1)/2; ``silver``: x0 = mu*pi*(sqrt2 - 1);
    ``explicit``: ``x0`` given as a number or an expression string.
    """
    with mp.workprec(_RATIO_BITS):
        mu_v = parse_expression(mu) if isinstance(mu, str) else mp.mpf(mu)
        if mu_v <= 0:
            raise ValueError("mu must be positive")
        if strategy == "golden":
            r = (mp.sqrt(5) - 1) / 2
        elif strategy == "silver":
            r = mp.sqrt(2) - 1
        elif strategy == "explicit":
            if x0 is None:
                raise ValueError("explicit strategy needs x0")
            xv = parse_expression(x0) if isinstance(x0, str) else mp.mpf(x0)
            r = xv / (mu_v * mp.pi)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        if not 0 < r < 1:
            raise SensorError("x0 must lie in (0, mu*pi)")
        x = mu_v * mp.pi * r
    return SensorPoint(+x, +mu_v, strategy, r)


def fixed_point_ratio(r, bits: int) -> int:
    """floor(frac(r) * 2^bits) from a high-precision r."""
    with mp.workprec(bits + 64):
        frac = r - mp.floor(r)
        return int(mp.floor(mp.ldexp(frac, bits)))


def reduction_bits(K: int) -> int:
    """Fixed-point width for a scan up to K: at least 2 log2 K + 64, and 128 minimum."""
    need = 2 * max(1, int(K)).bit_length() + 64
    return 128 if need <= 128 else 64 * math.ceil(need / 64)


def verify_point(pt: SensorPoint, K: int, bits: int | None = None, backend: str | None = None) -> SensorPoint:
    """Scan min_{k <= K} k |sin(k x0 / mu)|; pass iff the minimum is positive.

    Returns a copy of ``pt`` with ``K``, ``d0_empirical``, ``argmin`` and
    ``verified`` filled in. Distances below the fixed-point resolution count
    as zero, so a failing point is never certified.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    need = 2 * K.bit_length() + 16
    if bits is None:
        bits = reduction_bits(K)
    elif bits < need:
        raise IllConditionedError(
            f"{bits}-bit argument reduction cannot resolve sines up to K = {K}; "
            f"use at least {need} bits", required_bits=need)
    if bits + 64 > _RATIO_BITS + 64 and pt.strategy == "explicit":
        raise IllConditionedError(f"explicit ratio stored with {_RATIO_BITS} bits",
                                  required_bits=bits)
    r_fixed = fixed_point_ratio(pt.ratio, bits)
    value, arg = kernels.sensor_scan(r_fixed, bits, K, backend)
    ok = value > 0
    return replace(pt, K=K, d0_empirical=float(value), argmin=int(arg), verified=bool(ok))


def _require_verified(pt: SensorPoint):
    if not pt.verified:
        raise SensorError("sensor point is not verified (run verify_point first)"
                          if pt.K is None else
                          f"sensor point failed verification at k = {pt.argmin}")


def mode_to_series(f: InitialDatum, pt: SensorPoint) -> CoefficientSequence:
    """a_k = sin(k x0 / mu) fhat_k."""
    _require_verified(pt)
    return CoefficientSequence(tuple(pt.sine(k) * c for k, c in enumerate(f.coeffs, start=1)))


def series_to_mode(a: CoefficientSequence, pt: SensorPoint, regularity=None) -> InitialDatum:
    """fhat_k = a_k / sin(k x0 / mu), only for modes within the verified range."""
    _require_verified(pt)
    n = a.support
    if n > pt.K:
        raise SensorError(f"support {n} exceeds the verified range K = {pt.K}")
    out = []
    for k in range(1, len(a) + 1):
        if k > n:
            out.append(mp.zero)
            continue
        out.append(a[k] / pt.sine(k))
    return InitialDatum(CoefficientSequence(tuple(out)), pt.mu, regularity)


def amplification(pt: SensorPoint, k: int) -> float:
    """Certified bound k / d0_empirical on |fhat_k| / |a_k|."""
    _require_verified(pt)
    return k / pt.d0_empirical
