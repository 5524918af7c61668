"""Affine systems, singular values and the interpolated singular value function.

phi^t of a d x d matrix multiplies the top floor(t) singular values and a
fractional power of the next one (determinant power for t >= d). All
accumulation happens on logarithms: products over words of length 40+
underflow doubles, their logs do not. `phi`/`phi_word` are the explicit
exponentiation accessors of the log-domain primitives.
"""

from __future__ import annotations

import hashlib
import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .symbolic import Word

SINGULAR_FLOOR = 1e-300
_RESCALE_LO = 1e-120
_RESCALE_HI = 1e120


class ContractivityWarning(UserWarning):
    """Emitted when a system violates the operator-norm < 1/2 hypothesis."""


@dataclass(frozen=True)
class GammaBounds:
    """Extremes gamma_min = min_i alpha_d(A_i), gamma_max = max_i alpha_1(A_i)."""

    gamma_min: float
    gamma_max: float


class AffineIFS:
    """A self-affine iterated function system x -> A_i x + t_i, i = 1..N.

    Matrices must be non-singular. The maps should be contractions; the
    stricter norm < 1/2 hypothesis needed by the almost-sure dimension
    results is checked and reported as a warning, never an error.
    """

    def __init__(self, matrices, translations=None, *, det_tol=1e-12):
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("matrices must have shape (N, d, d)")
        n_maps, d, _ = mats.shape
        if n_maps < 2:
            raise ValueError("an IFS needs at least two maps")
        if translations is None:
            trans = np.zeros((n_maps, d))
        else:
            trans = np.asarray(translations, dtype=float)
        if trans.shape != (n_maps, d):
            raise ValueError(f"translations must have shape ({n_maps}, {d})")
        dets = np.linalg.det(mats)
        if np.min(np.abs(dets)) <= det_tol:
            raise SingularityError("every matrix must be non-singular")
        sv = np.linalg.svd(mats, compute_uv=False)  # (N, d), descending
        mats.setflags(write=False)
        trans.setflags(write=False)
        self.matrices = mats
        self.translations = trans
        self.N = n_maps
        self.d = d
        self._singular_values = sv
        self.contractive_half = bool(np.all(sv[:, 0] < 0.5))
        self.cache_key = hashlib.sha1(mats.tobytes() + trans.tobytes()).hexdigest()
        if not self.contractive_half:
            worst = float(np.max(sv[:, 0]))
            warnings.warn(
                f"max operator norm {worst:.6g} is not < 1/2; dimension formulas "
                "are computed but the almost-sure attainment hypothesis fails",
                ContractivityWarning,
                stacklevel=2,
            )

    def matrix(self, letter: int) -> np.ndarray:
        if letter < 1 or letter > self.N:
            raise ValueError(f"letter {letter} outside alphabet 1..{self.N}")
        return self.matrices[letter - 1]

    def map_singular_values(self) -> np.ndarray:
        """Per-map singular values, shape (N, d), descending."""
        return self._singular_values

    def __eq__(self, other):
        return isinstance(other, AffineIFS) and self.cache_key == other.cache_key

    def __hash__(self):
        return hash(self.cache_key)

    def __repr__(self):
        return f"AffineIFS(N={self.N}, d={self.d})"

    @classmethod
    def from_ratio(cls, d: int, n_maps: int, ratio: float, translations=None) -> "AffineIFS":
        """Equal similarities ratio*Id in dimension d."""
        mats = np.stack([ratio * np.eye(d)] * n_maps)
        return cls(mats, translations)

    @classmethod
    def from_diagonals(cls, diagonals, translations=None) -> "AffineIFS":
        mats = np.stack([np.diag(np.asarray(v, dtype=float)) for v in diagonals])
        return cls(mats, translations)


def rotation_scale(angle_deg: float, scale: float) -> np.ndarray:
    a = math.radians(angle_deg)
    return scale * np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def singular_values(matrix) -> np.ndarray:
    """Descending singular values; raises if the smallest underflows."""
    sv = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if not np.all(np.isfinite(sv)) or sv[-1] < SINGULAR_FLOOR:
        raise SingularityError("singular values underflow working precision")
    return sv


def log_phi_from_sv_logs(sv_logs, t: float):
    """phi^t in log domain from log singular values (last axis descending)."""
    logs = np.asarray(sv_logs, dtype=float)
    d = logs.shape[-1]
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.zeros(logs.shape[:-1])
    if t >= d:
        return (t / d) * logs.sum(axis=-1)
    k = int(math.floor(t))
    out = logs[..., :k].sum(axis=-1)
    frac = t - k
    if frac > 0:
        out = out + frac * logs[..., k]
    return out


def log_phi(matrix, t: float) -> float:
    """log phi^t(A)."""
    sv = singular_values(matrix)
    return float(log_phi_from_sv_logs(np.log(sv), t))


def phi(matrix, t: float) -> float:
    """phi^t(A); exponentiation accessor for log_phi."""
    return math.exp(log_phi(matrix, t))


class ProductCache:
    """Prefix -> (scaled product, log scale) cache for word matrix products.

    Stores matrices (not phi values) so singular-value and compound-norm
    consumers share the work. Keys carry the system fingerprint alongside the
    letters, so one cache serves many systems. Concurrent reads are safe;
    insertion takes a lock. When over capacity the longest words are evicted
    first: short prefixes are shared by the most words.
    """

    def __init__(self, capacity: int = 10**6):
        self.capacity = capacity
        self._data: dict[tuple, tuple[np.ndarray, float]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, system_key, letters):
        entry = self._data.get((system_key, letters))
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def put(self, system_key, letters, matrix, log_scale):
        with self._lock:
            if len(self._data) >= self.capacity:
                self._evict()
            self._data[(system_key, letters)] = (matrix, log_scale)

    def _evict(self):
        # drop the longest tenth; caller holds the lock
        keys = sorted(self._data, key=lambda k: len(k[1]), reverse=True)
        for key in keys[: max(1, len(keys) // 10)]:
            del self._data[key]

    def __len__(self):
        return len(self._data)


_DEFAULT_CACHE = ProductCache()


def scaled_word_product(ifs: AffineIFS, word: Word, cache: ProductCache | None = _DEFAULT_CACHE):
    """(M, log_scale) with A_word = M * exp(log_scale), M kept in float range.

    Rescaling by the Frobenius norm keeps products over very long words
    representable; correctness never depends on a cache hit.
    """
    letters = tuple(word)
    matrix = np.eye(ifs.d)
    log_scale = 0.0
    start = 0
    if cache is not None:
        for k in range(len(letters), 0, -1):
            entry = cache.get(ifs.cache_key, letters[:k])
            if entry is not None:
                matrix, log_scale = entry[0], entry[1]
                start = k
                break
    for k in range(start, len(letters)):
        matrix = matrix @ ifs.matrix(letters[k])
        norm = float(np.linalg.norm(matrix))
        if norm == 0.0 or not math.isfinite(norm):
            raise SingularityError("word product left floating-point range")
        if norm < _RESCALE_LO or norm > _RESCALE_HI:
            matrix = matrix / norm
            log_scale += math.log(norm)
        if cache is not None:
            cache.put(ifs.cache_key, letters[: k + 1], matrix, log_scale)
    return matrix, log_scale


def word_matrix(ifs: AffineIFS, word: Word) -> np.ndarray:
    """Raw left-to-right product A_{w1} ... A_{wn}; may underflow for long words."""
    matrix, log_scale = scaled_word_product(ifs, word, cache=None)
    return matrix * math.exp(log_scale)


def word_sv_logs(ifs: AffineIFS, word: Word, cache: ProductCache | None = _DEFAULT_CACHE) -> np.ndarray:
    """Log singular values of A_word, descending."""
    matrix, log_scale = scaled_word_product(ifs, word, cache)
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[-1] <= 0 or not np.all(np.isfinite(sv)):
        raise SingularityError("word product is numerically singular")
    return np.log(sv) + log_scale


def log_phi_word(ifs: AffineIFS, word: Word, t: float,
                 cache: ProductCache | None = _DEFAULT_CACHE) -> float:
    """log phi^t(A_word); the empty word gives log phi^t(Id) = 0."""
    if len(word) == 0:
        return 0.0
    return float(log_phi_from_sv_logs(word_sv_logs(ifs, word, cache), t))


def phi_word(ifs: AffineIFS, word: Word, t: float,
             cache: ProductCache | None = _DEFAULT_CACHE) -> float:
    """phi^t(A_word); exponentiation accessor for log_phi_word."""
    return math.exp(log_phi_word(ifs, word, t, cache))


def gamma_bounds(ifs: AffineIFS) -> GammaBounds:
    """The sandwich constants: gamma_min^(t n) <= phi^t(A_w) <= gamma_max^(t n)."""
    sv = ifs.map_singular_values()
    return GammaBounds(gamma_min=float(np.min(sv[:, -1])), gamma_max=float(np.max(sv[:, 0])))
