"""Pressure, square pressure, inverse lower pressure and their bracket semantics.

The word sums S_n(t) = sum over length-n words of phi^t(A_w) are subadditive
in log, so a_n/n is always a rigorous upper bound for the pressure P(t).
Matching lower bounds need the buffer certificate: near-supermultiplicativity
across a length-K connecting word gives (a_n + log C)/(n + K) <= P(t) by a
Fekete argument with gaps. The square pressure carries the opposite sign
convention (increasing in t, value -log N at 0), so there the subadditive
side is the *lower* end of the bracket.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .condition import BufferCertificate, require_matching
from .errors import BudgetExceededError
from .numerics import aitken, combine_logsumexp, least_squares_slope, logsumexp
from .svf import AffineIFS, log_phi_from_sv_logs, scaled_word_product
from .symbolic import (DegenerateTargets, ExplicitTargets, LinearFloorRule,
                       LinearPatternTargets, ReturnRule, TargetSequence, Word)

DEFAULT_SUM_BUDGET = 10**7
_CHUNK = 1 << 17
_SV_CACHE_LIMIT = 1 << 20
_sv_cache: OrderedDict[tuple[str, int], np.ndarray] = OrderedDict()


class Rigor(str, Enum):
    """How much of a bracket is backed by an inequality rather than a guess.

    RIGOROUS_BOTH: both ends hold (lower end conditional on the certificate).
    RIGOROUS_UPPER_ONLY: only the subadditivity-backed end holds; that end is
    the upper one for the pressure and the lower one for the square pressure.
    HEURISTIC: the non-rigorous end is a finite extrapolation, clearly labeled.
    """

    RIGOROUS_BOTH = "rigorous_both"
    RIGOROUS_UPPER_ONLY = "rigorous_upper_only"
    HEURISTIC = "heuristic"


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass(frozen=True)
class PressureBracket:
    """Interval estimate [lower, upper] for P(t) or P2(t) at depth n."""

    t: float
    lower: float
    upper: float
    depth: int
    rigor: Rigor
    kind: str = "pressure"  # or "square_pressure"
    certificate_hash: str | None = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"bracket lower {self.lower} exceeds upper {self.upper}")

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "lower": _json_float(self.lower),
            "upper": _json_float(self.upper),
            "depth": self.depth,
            "rigor": self.rigor.value,
            "kind": self.kind,
            "certificate": self.certificate_hash,
        }


def _iter_word_sv_logs(ifs: AffineIFS, n: int, workers: int = 1):
    """Yield (chunk of log singular values) over all length-n words, in order."""
    d = ifs.d
    mats = ifs.matrices
    total = ifs.N**n

    def extend_all(base: np.ndarray, depth: int) -> np.ndarray:
        # base: (m, d, d) -> products extended by every word of given depth
        out = base
        for _ in range(depth):
            out = np.einsum("mij,njk->mnik", out, mats).reshape(-1, d, d)
        return out

    if total <= _CHUNK:
        prods = extend_all(np.eye(d)[None, :, :], n)
        yield np.log(np.linalg.svd(prods, compute_uv=False))
        return
    prefix_len = 1
    while ifs.N ** (n - prefix_len) > _CHUNK:
        prefix_len += 1
    prefixes = list(itertools.product(range(ifs.N), repeat=prefix_len))

    def work(prefix):
        base = np.eye(d)
        for idx in prefix:
            base = base @ mats[idx]
        prods = extend_all(base[None, :, :], n - prefix_len)
        return np.log(np.linalg.svd(prods, compute_uv=False))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(work, prefixes)
    else:
        for prefix in prefixes:
            yield work(prefix)


def word_sv_log_table(ifs: AffineIFS, n: int, budget: int = DEFAULT_SUM_BUDGET,
                      workers: int = 1) -> np.ndarray | None:
    """All length-n word log singular values, or None if too large to cache."""
    if n < 1:
        raise ValueError("depth must be at least 1")
    total = ifs.N**n
    if total > budget:
        raise BudgetExceededError(f"{ifs.N}^{n} = {total} words exceeds budget {budget}")
    if total > _SV_CACHE_LIMIT:
        return None
    key = (ifs.cache_key, n)
    if key in _sv_cache:
        _sv_cache.move_to_end(key)
        return _sv_cache[key]
    table = np.concatenate(list(_iter_word_sv_logs(ifs, n, workers)), axis=0)
    _sv_cache[key] = table
    if len(_sv_cache) > 24:
        _sv_cache.popitem(last=False)
    return table


def log_phi_sum(ifs: AffineIFS, t: float, n: int, power: int = 1,
                budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> float:
    """log sum over length-n words of phi^t(A_w)^power, by stable accumulation.

    The reduction order is fixed (lexicographic chunks), so results are
    bit-reproducible for a fixed depth regardless of worker count.
    """
    table = word_sv_log_table(ifs, n, budget, workers)
    if table is not None:
        return logsumexp(power * log_phi_from_sv_logs(table, t))
    acc = -math.inf
    for chunk in _iter_word_sv_logs(ifs, n, workers):
        acc = combine_logsumexp(acc, logsumexp(power * log_phi_from_sv_logs(chunk, t)))
    return acc


def pressure_upper(ifs: AffineIFS, t: float, n: int,
                   budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> float:
    """a_n/n with a_n = log S_n(t); a rigorous upper bound of P(t) at every n."""
    return log_phi_sum(ifs, t, n, 1, budget, workers) / n


def pressure_lower(ifs: AffineIFS, t: float, n: int,
                   cert: BufferCertificate | None = None,
                   budget: int = DEFAULT_SUM_BUDGET, workers: int = 1) -> float:
    """Lower bound (a_n + log C)/(n + K), conditional on the certificate.

    Without a certificate this falls back to the Aitken extrapolation of
    a_m/m over three consecutive depths; that value is heuristic, never
    rigorous, and solvers do not use it unless asked.
    """
    if cert is not None:
        require_matching(cert, t)
        a_n = log_phi_sum(ifs, t, n, 1, budget, workers)
        return (a_n + math.log(cert.C_hat)) / (n + cert.K)
    depths = [m for m in (n - 2, n - 1, n) if m >= 1]
    values = [log_phi_sum(ifs, t, m, 1, budget, workers) / m for m in depths]
    if len(values) < 3:
        return values[-1]
    return aitken(*values)


def pressure_bracket(ifs: AffineIFS, t: float, n: int,
                     cert: BufferCertificate | None = None,
                     heuristic_lower: bool = False,
                     budget: int = DEFAULT_SUM_BUDGET,
                     workers: int = 1) -> PressureBracket:
    upper = pressure_upper(ifs, t, n, budget, workers)
    if cert is not None:
        require_matching(cert, t)
        lower = (upper * n + math.log(cert.C_hat)) / (n + cert.K)
        return PressureBracket(t, min(lower, upper), upper, n, Rigor.RIGOROUS_BOTH,
                               certificate_hash=cert.content_hash())
    if heuristic_lower:
        lower = pressure_lower(ifs, t, n, None, budget, workers)
        return PressureBracket(t, min(lower, upper), upper, n, Rigor.HEURISTIC)
    return PressureBracket(t, -math.inf, upper, n, Rigor.RIGOROUS_UPPER_ONLY)


def pressure2_estimate(ifs: AffineIFS, t: float, n: int,
                       cert: BufferCertificate | None = None,
                       budget: int = DEFAULT_SUM_BUDGET,
                       workers: int = 1) -> PressureBracket:
    """Bracket for the square pressure P2(t) = lim -(1/n) log sum phi^t(A_w)^2.

    (phi^t)^2 is submultiplicative, so b_n = -(1/n) log of the squared sum is
    superadditively controlled and is a rigorous LOWER bound of P2 at every n.
    A certificate yields the mirrored upper bound (n b_n - 2 log C)/(n + K).
    """
    b_n = -log_phi_sum(ifs, t, n, 2, budget, workers) / n
    if cert is not None:
        require_matching(cert, t)
        upper = (n * b_n - 2.0 * math.log(cert.C_hat)) / (n + cert.K)
        return PressureBracket(t, b_n, max(b_n, upper), n, Rigor.RIGOROUS_BOTH,
                               kind="square_pressure",
                               certificate_hash=cert.content_hash())
    return PressureBracket(t, b_n, math.inf, n, Rigor.RIGOROUS_UPPER_ONLY,
                           kind="square_pressure")


@dataclass(frozen=True)
class AlphaEstimate:
    """Running-minimum estimate of the inverse lower pressure at exponent t.

    value = min over k in [k_burn, k_max] of -(1/k) log phi^t(A_{target_k}).
    A liminf cannot be certified from finite data; `trend` is the
    least-squares slope of the tail half of the term sequence, and callers
    should warn when it is still decreasing at k_max. closed_form carries the
    exact limit rate*t*log(1/r) when the pattern product is conformal.
    """

    t: float
    value: float
    k_burn: int
    k_max: int
    trend: float
    closed_form: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "value": self.value,
            "k_burn": self.k_burn,
            "k_max": self.k_max,
            "trend": self.trend,
            "closed_form": self.closed_form,
        }


_profile_cache: OrderedDict[tuple, np.ndarray] = OrderedDict()


def _cyclic_prefix_sv_logs(ifs: AffineIFS, pattern: Word, max_len: int) -> np.ndarray:
    """Log singular values of every prefix (length 1..max_len) of the cyclic word."""
    key = (ifs.cache_key, pattern.letters, max_len)
    cached = _profile_cache.get(key)
    if cached is not None and cached.shape[0] >= max_len:
        return cached
    out = np.empty((max_len, ifs.d))
    matrix = np.eye(ifs.d)
    log_scale = 0.0
    m = len(pattern)
    for i in range(max_len):
        matrix = matrix @ ifs.matrix(pattern.letters[i % m])
        norm = float(np.linalg.norm(matrix))
        if norm < 1e-120:
            matrix /= norm
            log_scale += math.log(norm)
        out[i] = np.log(np.linalg.svd(matrix, compute_uv=False)) + log_scale
    _profile_cache[key] = out
    if len(_profile_cache) > 16:
        _profile_cache.popitem(last=False)
    return out


def alpha_terms(ifs: AffineIFS, spec: TargetSequence, t: float, k_burn: int,
                k_max: int, length_budget: int = 10**5) -> np.ndarray:
    """Terms -(1/k) log phi^t(A_{target_k}) for k in [k_burn, k_max]."""
    if k_burn < 1 or k_max < k_burn:
        raise ValueError("need 1 <= k_burn <= k_max")
    ks = np.arange(k_burn, k_max + 1)
    if isinstance(spec, (LinearPatternTargets, DegenerateTargets)):
        lengths = np.array([spec.length(int(k)) for k in ks])
        max_len = int(lengths.max())
        if max_len > length_budget:
            raise BudgetExceededError(
                f"target cylinder length {max_len} exceeds budget {length_budget}"
            )
        pattern = spec.pattern
        profile = _cyclic_prefix_sv_logs(ifs, pattern, max_len)
        log_phis = log_phi_from_sv_logs(profile[lengths - 1], t)
        return -log_phis / ks
    if isinstance(spec, ExplicitTargets):
        if k_max > spec.max_index:
            raise IndexError(
                f"explicit target list has {spec.max_index} entries, need {k_max}"
            )
        terms = np.empty(len(ks))
        for pos, k in enumerate(ks):
            word = spec.word(int(k))
            if len(word) > length_budget:
                raise BudgetExceededError("target cylinder length exceeds budget")
            matrix, scale = scaled_word_product(ifs, word)
            logs = np.log(np.linalg.svd(matrix, compute_uv=False)) + scale
            terms[pos] = -float(log_phi_from_sv_logs(logs, t)) / k
        return terms
    raise TypeError(f"unsupported target sequence {type(spec).__name__}")


def alpha_estimate(ifs: AffineIFS, spec: TargetSequence, t: float,
                   k_burn: int = 1, k_max: int = 256,
                   length_budget: int = 10**5) -> AlphaEstimate:
    """Finite-k inverse lower pressure with a tail-trend diagnostic."""
    if t == 0:
        return AlphaEstimate(0.0, 0.0, k_burn, k_max, 0.0, 0.0)
    terms = alpha_terms(ifs, spec, t, k_burn, k_max, length_budget)
    value = float(terms.min())
    tail_start = max(0, len(terms) // 2)
    trend = least_squares_slope(
        np.arange(k_burn + tail_start, k_max + 1), terms[tail_start:]
    )
    closed = _alpha_closed_form(ifs, spec, t)
    return AlphaEstimate(t, value, k_burn, k_max, trend, closed)


def _alpha_closed_form(ifs: AffineIFS, spec: TargetSequence, t: float) -> float | None:
    # exact limit when the pattern product is conformal: rate * t * per-symbol rate
    if not isinstance(spec, LinearPatternTargets):
        return None
    matrix, scale = scaled_word_product(ifs, spec.pattern)
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] <= 0 or (sv[0] - sv[-1]) / sv[0] > 1e-9:
        return None
    per_symbol = -(math.log(sv[0]) + scale) / len(spec.pattern)
    return float(spec.rate) * t * per_symbol


def beta_estimate(rule: ReturnRule, n_burn: int = 1, n_max: int = 1000) -> float:
    """min over [n_burn, n_max] of psi(n)/n; exact for linear-floor rules."""
    if n_burn < 1 or n_max < n_burn:
        raise ValueError("need 1 <= n_burn <= n_max")
    if isinstance(rule, LinearFloorRule):
        return float(rule.rate)
    top = min(n_max, rule.max_index) if rule.max_index is not None else n_max
    return min(rule.value(n) / n for n in range(n_burn, top + 1))
