"""Hoelder-stable recovery through a Vandermonde system.

Sampling F at t = 0, tau, ..., (N-1) tau gives V A = B with V[j, n] = x_n^j
and nodes x_n = exp(-tau lambda_n). The system is solved by the Bjorck-Pereyra
recurrences in O(N^2) without forming an inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp

from .biortho import RecoveryReport
from .errors import GapConditionError, IllConditionedError, MissingSampleError
from .forward import DirichletSample
from .precision import get_bits
from .sequences import CoefficientSequence, EigenvalueSequence, GapParams, validate_gap


@dataclass(frozen=True)
class VandermondeSystem:
    nodes: tuple
    rhs: tuple
    inv_norm_bound: object
    tau: object = 1
    lambdas: tuple = ()

    @property
    def N(self):
        return len(self.nodes)

    def matrix(self):
        return mp.matrix([[x ** j for x in self.nodes] for j in range(self.N)])

    def residual(self, A):
        """max_j |sum_n x_n^j A_n - B_j|."""
        worst = mp.zero
        for j in range(self.N):
            v = mp.fsum(a * x ** j for a, x in zip(A, self.nodes))
            worst = max(worst, abs(v - self.rhs[j]))
        return worst


def inverse_norm_bound(nodes, literal: bool = False):
    """Entrywise-sum bound on V^-1: sum_j prod_{i != j} (1 + |x_i|)/|x_i - x_j|.

    For positive nodes this is the exact value of sum |w_ij|. ``literal``
    uses (1 + |x_j|) in the numerator instead; that variant is smaller and
    is kept only for comparison.
    """
    total = mp.zero
    for j, xj in enumerate(nodes):
        p = mp.one
        for i, xi in enumerate(nodes):
            if i != j:
                num = 1 + abs(xj) if literal else 1 + abs(xi)
                p *= num / abs(xi - xj)
        total += p
    return total


def log_inverse_norm_bound(lam, N: int, tau=1) -> float:
    """ln of :func:`inverse_norm_bound` for the first N nodes."""
    lams = lam.prefix(N) if isinstance(lam, EigenvalueSequence) else [mp.mpf(v) for v in lam[:N]]
    nodes = [mp.exp(-mp.mpf(tau) * v) for v in lams]
    return float(mp.log(inverse_norm_bound(nodes)))


def _values(F, times):
    if isinstance(F, DirichletSample):
        out = []
        for t in times:
            v = F.lookup(t)
            if v is None:
                raise MissingSampleError(f"sample has no value at t = {mp.nstr(t, 10)}")
            out.append(v)
        return out
    if isinstance(F, (list, tuple)):
        if len(F) < len(times):
            raise MissingSampleError(f"need {len(times)} samples, got {len(F)}")
        return [mp.mpf(v) for v in F[:len(times)]]
    return [mp.mpf(F(t)) for t in times]


def build_system(lam, N: int, F, tau=1) -> VandermondeSystem:
    """Assemble nodes exp(-tau lambda_n) and right side F(j tau), j < N.

    ``F`` is an evaluator, a list of the N values, or a sample containing
    the times j*tau.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    tau = mp.mpf(tau)
    lams = tuple(lam.prefix(N) if isinstance(lam, EigenvalueSequence) else [mp.mpf(v) for v in lam[:N]])
    nodes = tuple(mp.exp(-tau * v) for v in lams)
    rhs = tuple(_values(F, [j * tau for j in range(N)]))
    return VandermondeSystem(nodes, rhs, inverse_norm_bound(nodes), tau, lams)


def solve_primal(sys: VandermondeSystem) -> CoefficientSequence:
    """Bjorck-Pereyra solve of sum_n x_n^j a_n = b_j, j = 0..N-1."""
    x = list(sys.nodes)
    n = len(x) - 1
    gap = min((abs(x[i] - x[j]) for i in range(n + 1) for j in range(i)), default=mp.one)
    if gap <= mp.ldexp(max(abs(v) for v in x), -mp.prec + 4):
        raise IllConditionedError("Vandermonde nodes coincide at working precision",
                                  required_bits=mp.prec + int(-mp.log(gap, 2)) + 32)
    b = [mp.mpf(v) for v in sys.rhs]
    for k in range(n):
        for i in range(n, k, -1):
            b[i] -= x[k] * b[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            b[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            b[i] -= b[i + 1]
    return CoefficientSequence(tuple(b))


def select_N_holder(epsilon, C, c, beta1, beta, m=1, N0: int = 1, N_max: int = 20) -> int:
    """argmin over N0 <= N <= N_max of exp(C N^beta1) eps + m exp(-c N^beta).

    Ties go to the smaller N.
    """
    eps = mp.mpf(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if beta <= beta1:
        raise ValueError("need beta > beta1")
    best, arg = None, N0
    for N in range(N0, N_max + 1):
        v = holder_objective(N, eps, C, c, beta1, beta, m)
        if best is None or v < best:
            best, arg = v, N
    return arg


def select_N_bound(epsilon, log_bounds, c, beta, m=1, N0: int = 1) -> int:
    """argmin over N of B_N eps + m exp(-c N^beta) with the computed bounds B_N.

    ``log_bounds[N-1]`` is ln of the inverse-norm bound of the N-node
    system. Ties go to the smaller N.
    """
    eps = mp.mpf(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    best, arg = None, N0
    for N in range(N0, len(log_bounds) + 1):
        v = mp.exp(log_bounds[N - 1]) * eps + mp.mpf(m) * mp.exp(-mp.mpf(c) * mp.mpf(N) ** beta)
        if best is None or v < best:
            best, arg = v, N
    return arg


def holder_objective(N, eps, C, c, beta1, beta, m=1):
    N = mp.mpf(N)
    return mp.exp(mp.mpf(C) * N ** beta1) * eps + mp.mpf(m) * mp.exp(-mp.mpf(c) * N ** beta)


def calibrate_C(lam, N_max: int, beta1: float, tau=1) -> float:
    """Envelope max_{N <= N_max} ln(inv_norm_bound_N) / N^beta1."""
    best = 0.0
    for N in range(1, N_max + 1):
        best = max(best, log_inverse_norm_bound(lam, N, tau) / N ** beta1)
    return best


@dataclass
class HolderConfig:
    """Knobs for :func:`recover_holder`.

    ``N`` fixes the system size and skips the selection. ``noise_level`` 0
    or None on an evaluator means exact data; the selection then uses the
    rounding floor 2^-bits. ``selection`` "bound" balances the computed
    inverse-norm bound of each candidate system against the prior tail;
    "envelope" uses exp(C N^beta1) with ``C`` (None calibrates it as the
    envelope of the computed bounds).
    """

    noise_level: object = None
    N: int | None = None
    N0: int = 1
    N_max: int = 20
    tau: object = 1
    C: float | None = None
    c: float | None = None
    precision_bits: int | None = None
    bound_constant: float = 1.0
    gap: GapParams | None = None
    check_gap: bool = True
    guard_bits: int = 32
    selection: str = "bound"


def recover_holder(F, lam: EigenvalueSequence, m, alpha_w, beta_w,
                   config: HolderConfig | None = None) -> RecoveryReport:
    """Select N, solve the Vandermonde system, zero-pad the tail."""
    cfg = config or HolderConfig()
    bits = int(cfg.precision_bits or get_bits())
    gap = cfg.gap or lam.default_gap()
    beta1 = gap.beta1
    if beta_w <= beta1:
        raise ValueError(f"the weighted prior needs beta > beta1 = {beta1}")
    N_max = min(cfg.N_max, len(lam))
    if cfg.check_gap:
        rep = validate_gap(lam, N_max, gap)
        if not rep.passed:
            raise GapConditionError(
                f"gap condition fails on the first {N_max} exponents: d* = {mp.nstr(rep.d_star, 5)}, "
                f"c* = {mp.nstr(rep.c_star, 5)}")
    with mp.workprec(bits):
        m = mp.mpf(m)
        declared = cfg.noise_level
        if declared is None and isinstance(F, DirichletSample):
            declared = F.noise_level
        eps_raw = mp.mpf(declared or 0)
        eps = max(eps_raw, mp.ldexp(m if m > 0 else 1, -bits))
        C = cfg.C if cfg.C is not None else calibrate_C(lam, N_max, beta1, cfg.tau)
        c = float(alpha_w) if cfg.c is None else cfg.c
        if cfg.N is not None:
            N = int(cfg.N)
        elif cfg.selection == "bound":
            logs = [log_inverse_norm_bound(lam, n, cfg.tau) for n in range(1, N_max + 1)]
            N = select_N_bound(eps, logs, c, beta_w, m, cfg.N0)
        elif cfg.selection == "envelope":
            N = select_N_holder(eps, C, c, beta1, beta_w, m, cfg.N0, N_max)
        else:
            raise ValueError(f"unknown selection {cfg.selection!r}")
        log2_bound = log_inverse_norm_bound(lam, N, cfg.tau) / math.log(2)
    solve_bits = bits + max(0, int(math.ceil(log2_bound))) + cfg.guard_bits
    with mp.workprec(solve_bits):
        sys = build_system(lam, N, F, cfg.tau)
        A = solve_primal(sys)
        residual = sys.residual(A)
        lhs = A.norm("l1")
        rhs_sup = max(abs(v) for v in sys.rhs)
        limit = sys.inv_norm_bound * rhs_sup
        if lhs > limit * (1 + mp.ldexp(1, -bits // 2)) + mp.ldexp(1, -bits):
            raise RuntimeError(f"||A||_1 = {mp.nstr(lhs, 8)} exceeds the inverse-norm bound "
                               f"{mp.nstr(limit, 8)}")
        literal = inverse_norm_bound(sys.nodes, literal=True)
    with mp.workprec(bits):
        estimate = CoefficientSequence(tuple(+a for a in A.entries))
        if cfg.selection == "bound":
            obj = +sys.inv_norm_bound * eps + m * mp.exp(-mp.mpf(c) * mp.mpf(N) ** beta_w)
        else:
            obj = holder_objective(N, eps, C, c, beta1, beta_w, m)
        gamma = float(mp.log(obj) / mp.log(eps)) if eps < 1 and obj < 1 else 0.0
        bound = mp.mpf(cfg.bound_constant) * obj
        diag = {"epsilon": eps, "epsilon_declared": eps_raw, "C": C, "c": c, "gamma": gamma,
                "inv_norm_bound": +sys.inv_norm_bound, "inv_norm_bound_literal": +literal,
                "l1_estimate": +lhs, "bound_rhs": +limit, "residual": +residual,
                "solve_bits": solve_bits, "tau": +sys.tau}
    return RecoveryReport("vandermonde", estimate, N, bound, diag)
