"""Exponent sequences, coefficient sequences and weighted sequence norms.

Indices are 1-based throughout: ``a[1]`` is the first coefficient. Values
are stored as :class:`mpmath.mpf` tuples and the containers are immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from mpmath import mp

from .errors import StructuralError
from .precision import mpf_to_str


@dataclass(frozen=True)
class AsymptoticParams:
    """lambda_n = K (n + shift)^beta + o(n^(beta-1))."""

    K: float
    shift: float
    beta: float


@dataclass(frozen=True)
class GapParams:
    """Gap and growth constants: gap_i >= d/(i+1)^beta0 and lambda_i <= c i^beta1."""

    beta0: float
    beta1: float
    c: float
    d: float

    @property
    def beta(self):
        return self.beta0 + self.beta1

    @property
    def c_star(self):
        return min(self.d / self.c, 1.0)


@dataclass(frozen=True)
class EigenvalueSequence:
    """Strictly increasing positive exponents lambda_1 < lambda_2 < ...

    Use :meth:`power` for lambda_k = (k/mu)^(2 alpha) or :meth:`explicit` for
    a literal list.
    """

    values: tuple
    family: str = "explicit"
    alpha: object = None
    mu: object = None
    asymptotic: AsymptoticParams | None = None
    gap: GapParams | None = None

    def __post_init__(self):
        _check_structure(self.values)

    @classmethod
    def power(cls, alpha, mu=1, count=32, gap: GapParams | None = None):
        alpha, mu = mp.mpf(alpha), mp.mpf(mu)
        if alpha <= 0 or mu <= 0:
            raise ValueError("alpha and mu must be positive")
        values = tuple((mp.mpf(k) / mu) ** (2 * alpha) for k in range(1, int(count) + 1))
        asym = None
        if 2 * alpha > 1:
            asym = AsymptoticParams(float(mu ** (-2 * alpha)), 0.0, float(2 * alpha))
        return cls(values, "power", alpha, mu, asym, gap)

    @classmethod
    def explicit(cls, values: Iterable, asymptotic=None, gap=None):
        return cls(tuple(mp.mpf(v) for v in values), "explicit", None, None, asymptotic, gap)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k: int):
        """1-based access."""
        if k < 1:
            raise IndexError("indices start at 1")
        return self.values[k - 1]

    def value(self, k: int):
        """lambda_k recomputed at the current precision when the family allows it."""
        if self.family == "power":
            return (mp.mpf(k) / self.mu) ** (2 * self.alpha)
        return self[k]

    def prefix(self, n: int) -> list:
        """[lambda_1, ..., lambda_n] at the current precision."""
        if n > len(self):
            raise IndexError(f"sequence has only {len(self)} stored values")
        return [self.value(k) for k in range(1, n + 1)]

    def extend(self, count: int) -> "EigenvalueSequence":
        if self.family != "power":
            raise StructuralError("only parametric families can be extended")
        return EigenvalueSequence.power(self.alpha, self.mu, count, self.gap)

    @property
    def growth_exponent(self):
        """beta with lambda_n ~ K n^beta, when known."""
        if self.family == "power":
            return float(2 * self.alpha)
        if self.asymptotic is not None:
            return self.asymptotic.beta
        return None

    def default_gap(self) -> GapParams:
        """Declared gap constants, or the analytic ones for a power family."""
        if self.gap is not None:
            return self.gap
        if self.family != "power":
            raise StructuralError("explicit sequences need declared gap constants")
        two_a = float(2 * self.alpha)
        scale = float(self.mu ** (-2 * self.alpha))
        if two_a <= 1:
            # (n+1)^(2a) - n^(2a) >= 2a / (n+1)^(1-2a)
            return GapParams(beta0=1 - two_a, beta1=two_a, c=scale, d=two_a * scale)
        return GapParams(beta0=0.0, beta1=two_a, c=scale,
                         d=float(self.value(2) - self.value(1)))

    def to_json(self) -> dict:
        if self.family == "power":
            return {"family": "power", "alpha": _num(self.alpha), "mu": _num(self.mu),
                    "count": len(self)}
        return {"family": "explicit", "values": [mpf_to_str(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj) -> "EigenvalueSequence":
        if isinstance(obj, str):
            obj = json.loads(obj)
        gap = GapParams(**obj["gap"]) if obj.get("gap") else None
        if obj["family"] == "power":
            return cls.power(_parse(obj["alpha"]), _parse(obj.get("mu", 1)),
                             int(obj.get("count", 32)), gap)
        if obj["family"] == "explicit":
            asym = AsymptoticParams(**obj["asymptotic"]) if obj.get("asymptotic") else None
            return cls.explicit([_parse(v) for v in obj["values"]], asym, gap)
        raise ValueError(f"unknown family {obj['family']!r}")


def _num(x):
    f = float(x)
    return f if mp.mpf(f) == x else mpf_to_str(x)


def _parse(v):
    return mp.mpf(v) if isinstance(v, str) else v


def _check_structure(values: Sequence) -> None:
    prev = None
    for i, v in enumerate(values, start=1):
        if v <= 0:
            raise StructuralError(f"lambda_{i} = {v} is not positive")
        if prev is not None and not v > prev:
            raise StructuralError(f"sequence not strictly increasing at index {i}")
        prev = v


@dataclass(frozen=True)
class CoefficientSequence:
    """Finitely supported real sequence a = (a_1, a_2, ...)."""

    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(mp.mpf(v) for v in self.entries))

    @classmethod
    def unit(cls, k: int, length: int | None = None):
        n = max(k, length or k)
        return cls(tuple(1 if i == k else 0 for i in range(1, n + 1)))

    @classmethod
    def zeros(cls, n: int):
        return cls((0,) * n)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k: int):
        if k < 1:
            raise IndexError("indices start at 1")
        return self.entries[k - 1] if k <= len(self.entries) else mp.zero

    def __iter__(self):
        return iter(self.entries)

    @property
    def support(self) -> int:
        """Largest index with a nonzero entry (0 for the zero sequence)."""
        for i in range(len(self.entries), 0, -1):
            if self.entries[i - 1] != 0:
                return i
        return 0

    def padded(self, n: int) -> "CoefficientSequence":
        if n <= len(self):
            return CoefficientSequence(self.entries[:n])
        return CoefficientSequence(self.entries + (mp.zero,) * (n - len(self)))

    def scale(self, s) -> "CoefficientSequence":
        s = mp.mpf(s)
        return CoefficientSequence(tuple(s * v for v in self.entries))

    def __add__(self, other):
        n = max(len(self), len(other))
        return CoefficientSequence(tuple(self[k] + other[k] for k in range(1, n + 1)))

    def __sub__(self, other):
        n = max(len(self), len(other))
        return CoefficientSequence(tuple(self[k] - other[k] for k in range(1, n + 1)))

    def norm(self, kind="l2"):
        return norm(self, kind)

    def to_strings(self):
        return [mpf_to_str(v) for v in self.entries]


@dataclass(frozen=True)
class SequenceNormKind:
    """One of l1, l2, linf, h_theta, l1_theta, l1_exp with its parameters."""

    tag: str
    theta: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.tag not in ("l1", "l2", "linf", "h_theta", "l1_theta", "l1_exp"):
            raise ValueError(f"unknown norm {self.tag!r}")
        if self.tag in ("h_theta", "l1_theta") and not (self.theta is not None and self.theta > 0):
            raise ValueError(f"{self.tag} needs theta > 0")
        if self.tag == "l1_exp" and not (self.alpha and self.alpha > 0 and self.beta and self.beta > 0):
            raise ValueError("l1_exp needs alpha > 0 and beta > 0")

    @classmethod
    def h(cls, theta):
        return cls("h_theta", theta=theta)

    @classmethod
    def l1_weighted(cls, theta):
        return cls("l1_theta", theta=theta)

    @classmethod
    def l1_exp_weighted(cls, alpha, beta):
        return cls("l1_exp", alpha=alpha, beta=beta)


def norm(a: CoefficientSequence, kind="l2"):
    """Exact norm of a finitely supported sequence.

    ``kind`` is a :class:`SequenceNormKind` or one of the plain tags
    ``"l1"``, ``"l2"``, ``"linf"``.
    """
    if isinstance(kind, str):
        kind = SequenceNormKind(kind)
    vals = a.entries
    tag = kind.tag
    if tag == "l1":
        return mp.fsum(abs(v) for v in vals)
    if tag == "l2":
        return mp.sqrt(mp.fsum(v * v for v in vals))
    if tag == "linf":
        return max((abs(v) for v in vals), default=mp.zero)
    if tag == "h_theta":
        th = mp.mpf(kind.theta)
        return mp.sqrt(mp.fsum((1 + mp.mpf(k) ** 2) ** th * v * v
                               for k, v in enumerate(vals, start=1)))
    if tag == "l1_theta":
        th = mp.mpf(kind.theta)
        return mp.fsum(mp.mpf(k) ** th * abs(v) for k, v in enumerate(vals, start=1))
    al, be = mp.mpf(kind.alpha), mp.mpf(kind.beta)
    return mp.fsum(mp.exp(al * mp.mpf(k) ** be) * abs(v) for k, v in enumerate(vals, start=1))


@dataclass(frozen=True)
class GapReport:
    passed: bool
    d_star: object
    c_star: object
    params: GapParams
    upto: int


def validate_gap(seq: EigenvalueSequence, upto: int | None = None,
                 params: GapParams | None = None) -> GapReport:
    """Check the gap/growth condition on the stored prefix.

    Returns the largest ``d`` and smallest ``c`` for which the condition
    holds on indices ``<= upto`` together with pass/fail against ``params``
    (default: the sequence's declared or analytic constants).
    """
    vals = seq.values
    upto = len(vals) if upto is None else int(upto)
    if upto > len(vals):
        raise IndexError("upto exceeds stored length")
    _check_structure(vals[:upto])
    params = params or seq.default_gap()
    b0, b1 = mp.mpf(params.beta0), mp.mpf(params.beta1)
    d_star = min((vals[i] - vals[i - 1]) * mp.mpf(i + 1) ** b0 for i in range(1, upto)) \
        if upto > 1 else mp.inf
    c_star = max(vals[i - 1] / mp.mpf(i) ** b1 for i in range(1, upto + 1))
    # small relative slack so that exactly attained constants pass
    slack = mp.ldexp(1, -mp.prec // 2)
    passed = bool(d_star >= mp.mpf(params.d) * (1 - slack)
                  and c_star <= mp.mpf(params.c) * (1 + slack))
    return GapReport(passed, d_star, c_star, params, upto)


def reciprocal_sum_class(seq: EigenvalueSequence) -> str:
    """``"summable"``, ``"divergent"`` or ``"unknown"`` for sum 1/lambda_k."""
    beta = seq.growth_exponent if seq.family == "power" else (
        seq.asymptotic.beta if seq.asymptotic is not None else None)
    if beta is None:
        return "unknown"
    return "summable" if beta > 1 else "divergent"


def reciprocal_sum_bound(seq: EigenvalueSequence):
    """Analytic bound mu^(2 alpha) zeta(2 alpha) on sum 1/lambda_k (summable power family)."""
    if seq.family != "power" or 2 * seq.alpha <= 1:
        raise ValueError("bound available only for summable power families")
    return seq.mu ** (2 * seq.alpha) * mp.zeta(2 * seq.alpha)
