"""Root solvers: affinity dimension, shrinking-target s0, recurrence r0.

All three are zeros of strictly decreasing functions built from pressure
estimates, so bisection applies. A probe sign counts as certain only when the
pressure brackets make the function uniformly one-signed at that t; when the
brackets cannot decide at the deepest allowed word length, the solver narrows
with asymptotically exact point estimates instead and keeps the certified
bracket separately in the diagnostics. The bracket gap from a buffer
certificate shrinks like K/(n + K), so near the root point-estimate narrowing
is the normal case, not the exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .condition import CertifyPlan
from .errors import BudgetExceededError, HypothesisViolationError
from .numerics import aitken
from .pressure import (DEFAULT_SUM_BUDGET, PressureBracket, Rigor,
                       alpha_estimate, beta_estimate, log_phi_sum,
                       pressure2_estimate, pressure_bracket)
from .svf import AffineIFS, gamma_bounds
from .symbolic import (DegenerateTargets, ExplicitTargets, LinearFloorRule,
                       LinearPatternTargets, ReturnRule, TargetSequence)

RATE_ZERO_THRESHOLD = 0.05
RATE_INF_THRESHOLD = 20.0


@dataclass(frozen=True)
class DimensionResult:
    """Root bracket plus the reported dimension min(d, root).

    positive_lebesgue records whether the bracket's lower end exceeds the
    ambient dimension, the regime where the projected set has positive
    Lebesgue measure for almost every translation.
    """

    kind: str
    root_lo: float
    root_hi: float
    reported: float
    positive_lebesgue: bool
    rigor: Rigor
    tolerance_met: bool
    diagnostics: dict

    @property
    def root_mid(self) -> float:
        return 0.5 * (self.root_lo + self.root_hi)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "root_bracket": [self.root_lo, self.root_hi],
            "reported": self.reported,
            "positive_lebesgue": self.positive_lebesgue,
            "rigor": self.rigor.value,
            "tolerance_met": self.tolerance_met,
            "diagnostics": self.diagnostics,
        }

    def csv_row(self) -> dict:
        return {
            "kind": self.kind,
            "root_lo": self.root_lo,
            "root_hi": self.root_hi,
            "reported": self.reported,
            "positive_lebesgue": self.positive_lebesgue,
            "rigor": self.rigor.value,
            "tolerance_met": self.tolerance_met,
        }


def upper_seed(ifs: AffineIFS) -> float:
    """Bisection seed d + log N/|log gamma_max|; the sign there is certain."""
    gb = gamma_bounds(ifs)
    if gb.gamma_max >= 1.0:
        raise ValueError("solvers require a contracting system (gamma_max < 1)")
    return ifs.d + math.log(ifs.N) / abs(math.log(gb.gamma_max))


class _SignProblem:
    """Shared bisection machinery over bracketed, strictly decreasing functions."""

    def __init__(self, ifs, plan: CertifyPlan | None, min_depth: int,
                 max_depth: int, budget: int, workers: int):
        self.ifs = ifs
        self.plan = plan
        self.min_depth = min_depth
        depth_cap = int(math.floor(math.log(budget) / math.log(ifs.N)))
        self.max_depth = max(1, min(max_depth, depth_cap))
        self.budget = budget
        self.workers = workers
        self.certs: dict[float, object] = {}
        self.depth = min(min_depth, self.max_depth)
        self.depths_used: set[int] = set()
        self.heuristic_used = False
        self.evaluations = 0

    def cert_for(self, t: float):
        if self.plan is None:
            return None
        if t not in self.certs:
            self.certs[t] = self.plan.certificate_for(self.ifs, t)
        return self.certs[t]

    # subclasses: f_bracket(t, n) -> (lo, hi); f_point(t, n) -> float

    def sign_at(self, t: float):
        """(sign, certain) with depth escalation before giving up on rigor."""
        for n in range(self.depth, self.max_depth + 1):
            self.depths_used.add(n)
            self.evaluations += 1
            lo, hi = self.f_bracket(t, n)
            if lo > 0.0:
                self.depth = n
                return 1, True
            if hi < 0.0:
                self.depth = n
                return -1, True
        self.heuristic_used = True
        value = self.f_point(t, self.max_depth)
        if value > 0.0:
            return 1, False
        if value < 0.0:
            return -1, False
        return 0, False

    def pressure_point(self, t: float, n: int) -> float:
        depths = [m for m in (n - 2, n - 1, n) if m >= 1]
        vals = [log_phi_sum(self.ifs, t, m, 1, self.budget, self.workers) / m
                for m in depths]
        return vals[-1] if len(vals) < 3 else aitken(*vals)

    def pressure2_point(self, t: float, n: int) -> float:
        depths = [m for m in (n - 2, n - 1, n) if m >= 1]
        vals = [-log_phi_sum(self.ifs, t, m, 2, self.budget, self.workers) / m
                for m in depths]
        return vals[-1] if len(vals) < 3 else aitken(*vals)


class _AffinityProblem(_SignProblem):
    def f_bracket(self, t, n):
        br = pressure_bracket(self.ifs, t, n, self.cert_for(t),
                              budget=self.budget, workers=self.workers)
        return br.lower, br.upper

    def f_point(self, t, n):
        return self.pressure_point(t, n)


class _ShrinkingProblem(_SignProblem):
    def __init__(self, ifs, spec, k_burn, k_max, length_budget, **kw):
        super().__init__(ifs, **kw)
        self.spec = spec
        self.k_burn = k_burn
        self.k_max = k_max
        self.length_budget = length_budget
        self.alphas: dict[float, object] = {}

    def alpha_at(self, t: float):
        if t not in self.alphas:
            self.alphas[t] = alpha_estimate(self.ifs, self.spec, t,
                                            self.k_burn, self.k_max,
                                            self.length_budget)
        return self.alphas[t]

    def f_bracket(self, t, n):
        br = pressure_bracket(self.ifs, t, n, self.cert_for(t),
                              budget=self.budget, workers=self.workers)
        a = self.alpha_at(t).value
        return br.lower - a, br.upper - a

    def f_point(self, t, n):
        return self.pressure_point(t, n) - self.alpha_at(t).value


class _RecurrenceProblem(_SignProblem):
    def __init__(self, ifs, beta, **kw):
        super().__init__(ifs, **kw)
        self.beta = float(beta)

    def f_bracket(self, t, n):
        cert = self.cert_for(t)
        p = pressure_bracket(self.ifs, t, n, cert,
                             budget=self.budget, workers=self.workers)
        p2 = pressure2_estimate(self.ifs, t, n, cert,
                                budget=self.budget, workers=self.workers)
        b = self.beta
        return (1 - b) * p.lower - b * p2.upper, (1 - b) * p.upper - b * p2.lower

    def f_point(self, t, n):
        b = self.beta
        return (1 - b) * self.pressure_point(t, n) - b * self.pressure2_point(t, n)


def _bisect(problem: _SignProblem, tol: float, seed: float):
    lo, hi = 0.0, seed
    cert_lo, cert_hi = 0.0, seed
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # float resolution exhausted
        sign, certain = problem.sign_at(mid)
        if sign > 0:
            lo = mid
            if certain:
                cert_lo = mid
        elif sign < 0:
            hi = mid
            if certain:
                cert_hi = mid
        else:
            lo = hi = mid
            break
    return lo, hi, cert_lo, cert_hi


def _result(kind: str, ifs, problem, lo, hi, cert_lo, cert_hi, tol,
            extra_diag=None) -> DimensionResult:
    mid = 0.5 * (lo + hi)
    reported = min(float(ifs.d), max(0.0, mid))
    diagnostics = {
        "depths": sorted(problem.depths_used),
        "certified_bracket": [cert_lo, cert_hi],
        "heuristic_narrowing": problem.heuristic_used,
        "evaluations": problem.evaluations,
        "certificates": {f"{t:.12g}": c.content_hash()
                         for t, c in problem.certs.items()},
    }
    if extra_diag:
        diagnostics.update(extra_diag)
    rigor = Rigor.RIGOROUS_BOTH if problem.plan is not None else Rigor.RIGOROUS_UPPER_ONLY
    return DimensionResult(
        kind=kind,
        root_lo=lo,
        root_hi=hi,
        reported=reported,
        positive_lebesgue=bool(lo > ifs.d),
        rigor=rigor,
        tolerance_met=bool(hi - lo <= tol),
        diagnostics=diagnostics,
    )


def solve_affinity(ifs: AffineIFS, tol: float = 1e-3, max_depth: int = 12,
                   certify_plan: CertifyPlan | None = None, min_depth: int = 3,
                   budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> DimensionResult:
    """Bracket the root of P(t) = 0 (the affinity dimension)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    seed = upper_seed(ifs)
    problem = _AffinityProblem(ifs, plan=certify_plan, min_depth=min_depth,
                               max_depth=max_depth, budget=budget, workers=workers)
    lo, hi, clo, chi = _bisect(problem, tol, seed)
    return _result("affinity", ifs, problem, lo, hi, clo, chi, tol)


def _declared_rate(spec: TargetSequence):
    if isinstance(spec, (LinearPatternTargets, DegenerateTargets)):
        return spec.declared_rate, False, None
    # explicit list: estimate liminf of |target_k|/k from the tail minimum
    count = spec.max_index
    ratios = [spec.length(k) / k for k in range(1, count + 1)]
    tail = ratios[len(ratios) // 2:]
    estimate = min(tail)
    if estimate < RATE_ZERO_THRESHOLD:
        rate = 0.0
    elif estimate > RATE_INF_THRESHOLD:
        rate = math.inf
    else:
        rate = estimate
    return rate, True, estimate


def solve_shrinking(ifs: AffineIFS, spec: TargetSequence, tol: float = 1e-3,
                    max_depth: int = 12, certify_plan: CertifyPlan | None = None,
                    min_depth: int = 3, k_burn: int = 32, k_max: int = 256,
                    length_budget: int = 10**5,
                    budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> DimensionResult:
    """Bracket s0 = inf{t > 0 : P(t) <= alpha(t)} for the target sequence.

    Degenerate length rates route first: rate 0 forces alpha identically 0
    (the root is the affinity dimension); infinite rate forces dimension 0.
    Declared rates are trusted; rates estimated from explicit lists are
    flagged in the diagnostics.
    """
    rate, estimated, raw_estimate = _declared_rate(spec)
    flags = []
    if estimated:
        flags.append("rate_estimated_from_data")
        near = (abs(raw_estimate - RATE_ZERO_THRESHOLD) < RATE_ZERO_THRESHOLD
                or RATE_INF_THRESHOLD / 2 < raw_estimate < RATE_INF_THRESHOLD * 2)
        if near:
            flags.append("classification_ambiguous")
    if rate == math.inf:
        return DimensionResult(
            kind="shrinking_target", root_lo=0.0, root_hi=0.0, reported=0.0,
            positive_lebesgue=False, rigor=Rigor.RIGOROUS_BOTH, tolerance_met=True,
            diagnostics={"classification": "target_rate_infinite", "flags": flags},
        )
    if rate == 0:
        base = solve_affinity(ifs, tol, max_depth, certify_plan,
                              min_depth, budget, workers)
        diag = dict(base.diagnostics)
        diag["classification"] = "target_rate_zero_alpha_vanishes"
        diag["flags"] = flags
        return DimensionResult("shrinking_target", base.root_lo, base.root_hi,
                               base.reported, base.positive_lebesgue, base.rigor,
                               base.tolerance_met, diag)
    if isinstance(spec, ExplicitTargets):
        k_max = min(k_max, spec.max_index)
        k_burn = min(k_burn, max(1, k_max // 2))
        flags.append("finite_target_list")
    seed = upper_seed(ifs)
    problem = _ShrinkingProblem(ifs, spec, k_burn, k_max, length_budget,
                                plan=certify_plan, min_depth=min_depth,
                                max_depth=max_depth, budget=budget, workers=workers)
    lo, hi, clo, chi = _bisect(problem, tol, seed)
    trends = {f"{t:.12g}": a.trend for t, a in problem.alphas.items()}
    if any(tr < -1e-6 for tr in trends.values()):
        flags.append("alpha_terms_still_decreasing")
    extra = {"classification": "target_rate_finite", "flags": flags,
             "alpha_window": [problem.k_burn, problem.k_max],
             "alpha_trends": trends}
    return _result("shrinking_target", ifs, problem, lo, hi, clo, chi, tol, extra)


def solve_recurrence(ifs: AffineIFS, rule: ReturnRule, tol: float = 1e-3,
                     max_depth: int = 12, certify_plan: CertifyPlan | None = None,
                     min_depth: int = 3, n_burn: int = 1, n_max: int = 1000,
                     budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> DimensionResult:
    """Bracket the root r0 of (1 - beta) P(t) = beta P2(t).

    The recurrence rate beta = liminf psi(n)/n must be < 1; that hypothesis is
    hard (the buffer construction becomes self-referential at rate 1), so
    beta >= 1 raises instead of degrading.
    """
    if isinstance(rule, LinearFloorRule):
        beta_exact = rule.beta_exact
        if beta_exact >= 1:
            raise HypothesisViolationError(
                f"recurrence rate beta = {beta_exact} >= 1; the root equation "
                "only applies for beta < 1"
            )
        beta = float(beta_exact)
    else:
        beta = beta_estimate(rule, n_burn, n_max)
        if beta >= 1:
            raise HypothesisViolationError(
                f"estimated recurrence rate beta = {beta} >= 1; the root "
                "equation only applies for beta < 1"
            )
    if beta == 0.0:
        base = solve_affinity(ifs, tol, max_depth, certify_plan,
                              min_depth, budget, workers)
        diag = dict(base.diagnostics)
        diag["classification"] = "beta_zero_reduces_to_affinity"
        diag["beta"] = 0.0
        return DimensionResult("recurrence", base.root_lo, base.root_hi,
                               base.reported, base.positive_lebesgue, base.rigor,
                               base.tolerance_met, diag)
    seed = upper_seed(ifs)
    problem = _RecurrenceProblem(ifs, beta, plan=certify_plan, min_depth=min_depth,
                                 max_depth=max_depth, budget=budget, workers=workers)
    lo, hi, clo, chi = _bisect(problem, tol, seed)
    return _result("recurrence", ifs, problem, lo, hi, clo, chi, tol,
                   {"beta": beta})
