"""Empirical certification of the buffer-word concatenation bound.

The bound being certified: for the exponent s there are constants C > 0 and a
buffer length K such that for any two words i, j some connecting word kappa of
length exactly K gives phi^s(A_{i kappa j}) >= C phi^s(A_i) phi^s(A_j).
Existence is guaranteed for fully proximal, fully strongly irreducible
families, but no algorithm computes (C, K) over all pairs; the certificate
here is explicitly EMPIRICAL: an infimum over exhaustively enumerated short
pairs plus seeded random long pairs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, CertificateMismatchError
from .svf import AffineIFS, log_phi_from_sv_logs, scaled_word_product
from .symbolic import Word, enumerate_words, format_word

DEFAULT_PAIR_BUDGET = 10**7


def _word_log_phi(ifs, word, t, prefix=None):
    # log phi^t of A_word, optionally continuing from a scaled prefix product.
    # The singular-value exponents of phi^t always total t, so a scalar
    # rescaling by exp(c) shifts log phi^t by exactly t*c.
    if len(word) == 0 and prefix is None:
        return 0.0
    if prefix is None:
        matrix, scale = scaled_word_product(ifs, word)
    else:
        matrix, scale = prefix
        for letter in word:
            matrix = matrix @ ifs.matrix(letter)
            norm = float(np.linalg.norm(matrix))
            if norm < 1e-120:
                matrix = matrix / norm
                scale += math.log(norm)
    sv = np.linalg.svd(matrix, compute_uv=False)
    return float(log_phi_from_sv_logs(np.log(sv), t)) + t * scale


@dataclass(frozen=True)
class BufferCertificate:
    """Empirically certified constants for the concatenation lower bound.

    C_hat is the infimum over all tested pairs (i, j) of the best achievable
    ratio max_kappa phi^s(A_{i kappa j}) / (phi^s(A_i) phi^s(A_j)). Exhaustive
    only up to tested_len; longer pairs are sampled.
    """

    s: float
    K: int
    C_hat: float
    tested_len: int
    sampled_pairs: int
    worst_pair: tuple[Word, Word]
    label: str = "empirical"

    def content_hash(self) -> str:
        payload = json.dumps(
            {
                "s": self.s,
                "K": self.K,
                "C_hat": self.C_hat,
                "tested_len": self.tested_len,
                "sampled_pairs": self.sampled_pairs,
                "worst_pair": [list(self.worst_pair[0]), list(self.worst_pair[1])],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_json_dict(self, alphabet_size: int | None = None) -> dict:
        return {
            "s": self.s,
            "K": self.K,
            "C_hat": self.C_hat,
            "log_C_hat": math.log(self.C_hat) if self.C_hat > 0 else None,
            "tested_len": self.tested_len,
            "sampled_pairs": self.sampled_pairs,
            "worst_pair": [format_word(w, alphabet_size) for w in self.worst_pair],
            "label": self.label,
            "hash": self.content_hash(),
        }


def buffer_search(ifs: AffineIFS, s: float, buffer_len: int, left: Word, right: Word,
                  budget: int = DEFAULT_PAIR_BUDGET,
                  _left_product=None) -> tuple[Word, float]:
    """Best buffer word: maximize phi^s(A_{left kappa right}) over kappa of length K.

    Returns (kappa, log_ratio) where log_ratio = log of the ratio against
    phi^s(A_left) phi^s(A_right). Ties keep the lexicographically first kappa.
    With K = 0 the ratio is at most 1 by submultiplicativity.
    """
    if buffer_len < 0:
        raise ValueError("buffer length must be non-negative")
    if ifs.N**buffer_len > budget:
        raise BudgetExceededError(
            f"{ifs.N}^{buffer_len} buffer words exceed budget {budget}"
        )
    left_mat, left_scale = _left_product if _left_product is not None \
        else scaled_word_product(ifs, left)
    sv_left = np.linalg.svd(left_mat, compute_uv=False)
    base = float(log_phi_from_sv_logs(np.log(sv_left), s)) + s * left_scale
    base += _word_log_phi(ifs, right, s)
    best_kappa = None
    best_log_ratio = -math.inf
    for kappa in enumerate_words(ifs.N, buffer_len, budget):
        log_val = _word_log_phi(ifs, kappa + right, s, prefix=(left_mat.copy(), left_scale))
        log_ratio = log_val - base
        if log_ratio > best_log_ratio:
            best_log_ratio = log_ratio
            best_kappa = kappa
    return best_kappa, best_log_ratio


def certify(ifs: AffineIFS, s: float, buffer_len: int, exhaustive_len: int = 3,
            random_pairs: int = 32, rng_seed: int = 0,
            budget: int = DEFAULT_PAIR_BUDGET) -> BufferCertificate:
    """Empirical constant: minimize the best buffer ratio over word pairs.

    All pairs with both lengths <= exhaustive_len are enumerated; random_pairs
    additional pairs with lengths up to 4*exhaustive_len probe the asymptotic
    alignment of singular directions, which is where the bound degrades.
    Deterministic for a fixed seed.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if exhaustive_len < 1:
        raise ValueError("exhaustive_len must be at least 1")
    pool: list[Word] = []
    for n in range(1, exhaustive_len + 1):
        pool.extend(enumerate_words(ifs.N, n, budget))
    total = len(pool) ** 2 * max(1, ifs.N**buffer_len)
    if total > budget:
        raise BudgetExceededError(
            f"certification would evaluate ~{total} products, budget {budget}"
        )
    rng = np.random.default_rng(rng_seed)
    sampled: list[tuple[Word, Word]] = []
    for _ in range(random_pairs):
        pair = []
        for _side in range(2):
            length = int(rng.integers(exhaustive_len + 1, 4 * exhaustive_len + 1))
            letters = tuple(int(x) for x in rng.integers(1, ifs.N + 1, size=length))
            pair.append(Word(letters))
        sampled.append((pair[0], pair[1]))

    best_log_c = math.inf
    worst_pair = (pool[0], pool[0])
    for left in pool:
        left_product = scaled_word_product(ifs, left)
        for right in pool:
            _, log_ratio = buffer_search(ifs, s, buffer_len, left, right,
                                         budget, _left_product=left_product)
            if log_ratio < best_log_c:
                best_log_c = log_ratio
                worst_pair = (left, right)
    for left, right in sampled:
        _, log_ratio = buffer_search(ifs, s, buffer_len, left, right, budget)
        if log_ratio < best_log_c:
            best_log_c = log_ratio
            worst_pair = (left, right)
    return BufferCertificate(
        s=float(s),
        K=buffer_len,
        C_hat=math.exp(best_log_c),
        tested_len=exhaustive_len,
        sampled_pairs=len(sampled),
        worst_pair=worst_pair,
    )


def certify_escalating(ifs: AffineIFS, s: float, k_max: int = 4,
                       floor: float = 1e-6, exhaustive_len: int = 3,
                       random_pairs: int = 32, rng_seed: int = 0,
                       budget: int = DEFAULT_PAIR_BUDGET) -> BufferCertificate:
    """Try K = 1, 2, ..., k_max and keep the smallest K with C_hat above floor.

    Small K is preferred because the pressure lower bound (a_n + log C)/(n + K)
    degrades with K. If no K reaches the floor the best certificate found is
    returned; callers should compare C_hat against their own floor.
    """
    best = None
    for buffer_len in range(1, k_max + 1):
        cert = certify(ifs, s, buffer_len, exhaustive_len, random_pairs,
                       rng_seed, budget)
        if cert.C_hat > floor:
            return cert
        if best is None or cert.C_hat > best.C_hat:
            best = cert
    return best


@dataclass(frozen=True)
class CertifyPlan:
    """How solvers obtain a certificate at each probed exponent.

    The certified constant depends on the exponent s, so root solvers cannot
    reuse one certificate across bisection probes; they re-certify with these
    parameters at every probed value and record each certificate's hash.
    """

    K: int | None = None  # fixed buffer length; None = escalate to k_max
    k_max: int = 4
    floor: float = 1e-6
    exhaustive_len: int = 3
    random_pairs: int = 16
    rng_seed: int = 0
    budget: int = DEFAULT_PAIR_BUDGET

    def certificate_for(self, ifs: AffineIFS, s: float) -> BufferCertificate:
        if self.K is not None:
            return certify(ifs, s, self.K, self.exhaustive_len,
                           self.random_pairs, self.rng_seed, self.budget)
        return certify_escalating(ifs, s, self.k_max, self.floor,
                                  self.exhaustive_len, self.random_pairs,
                                  self.rng_seed, self.budget)


def require_matching(cert: BufferCertificate, s: float, tol: float = 1e-12):
    """Certificates are per-exponent; reject a mismatched one."""
    if cert is None:
        raise CertificateMismatchError("a buffer certificate is required")
    if abs(cert.s - s) > tol * max(1.0, abs(s)):
        raise CertificateMismatchError(
            f"certificate was computed at s = {cert.s}, requested {s}"
        )
