"""Finite-depth lower-bound measures, energy sums, sampling and box counts.

The measure tree materializes the nested word families behind the lower-bound
measure: level 0 is all words of a base length p0, and each later level
extends every word by a searched buffer of length K followed by a block,
which is either free (all words of length p), the padded target cylinder at a
scheduled position, or (in recurrence mode) the word's own prefix. Level
weights multiply phi^s over the blocks only and are normalized per level.

The published construction requires schedule positions growing like 2^n,
which is unreachable at any materializable depth; the tree keeps the
divisibility bookkeeping exact (every scheduled position is congruent to
p0 + K modulo K + p) and records which growth inequalities the clipped
schedule actually satisfies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .condition import BufferCertificate, buffer_search
from .errors import BudgetExceededError, ScheduleError
from .numerics import logsumexp
from .svf import AffineIFS, log_phi_from_sv_logs
from .symbolic import (ReturnRule, TargetSequence, Word, enumerate_words,
                       format_word, pad_target)


@dataclass(frozen=True)
class ShrinkingTargetMode:
    spec: TargetSequence

    name = "shrinking_target"


@dataclass(frozen=True)
class RecurrenceMode:
    rule: ReturnRule

    name = "recurrence"


@dataclass
class TreeWord:
    """One cylinder of a measure-tree level with its scaled matrix product."""

    letters: tuple[int, ...]
    blocks: tuple[Word, ...]
    buffers: tuple[Word, ...]
    log_block_sum: float  # sum of log phi^s over blocks
    log_weight: float
    sv_logs: np.ndarray  # log singular values of the whole-word product
    matrix: np.ndarray
    log_scale: float


@dataclass
class MeasureLevel:
    n: int
    words: list[TreeWord]
    log_norm: float
    scheduled_position: int | None  # m such that the level block starts at m+1
    block_kind: str  # "free", "target", "recurrence"


@dataclass
class MeasureTree:
    ifs: AffineIFS
    s: float
    p: int
    p0: int
    K: int
    mode: object
    levels: list[MeasureLevel]
    schedule: list[int]
    growth_sum_ok: list[bool]
    growth_sparse_ok: list[bool]
    clipped: bool
    certificate_hash: str
    min_realized_log_ratio: float

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level_weights(self, n: int) -> np.ndarray:
        return np.exp([w.log_weight for w in self.levels[n].words])

    def to_json_records(self) -> list[dict]:
        out = []
        for level in self.levels:
            for w in level.words:
                out.append({
                    "level": level.n,
                    "word": format_word(Word(w.letters), self.ifs.N),
                    "weight": math.exp(w.log_weight),
                })
        return out


def _phat0(p0: int, p: int, K: int) -> int:
    # residue class of scheduled positions in [1, p + K]
    r = (p0 + K) % (K + p)
    return r if r >= 1 else r + K + p


def build_measure_tree(ifs: AffineIFS, s: float, p: int, depth: int, mode,
                       cert: BufferCertificate, target_levels=(), p0: int | None = None,
                       budget: int = 250_000) -> MeasureTree:
    """Materialize the word families and level measures down to `depth`.

    `target_levels` lists the level indices whose extension block is the
    scheduled one (the padded target cylinder, or the word's own prefix in
    recurrence mode); every other level extends by all words of length p.
    Scheduled positions are derived as m = (level length) + K, which keeps
    them in the residue class the base length p0 dictates.
    """
    if p < 1 or depth < 0:
        raise ScheduleError("need block length p >= 1 and depth >= 0")
    K = cert.K
    if p0 is None:
        p0 = p
    if p0 < 1 or p0 > p + K:
        raise ScheduleError(f"base length p0 = {p0} outside [1, {p + K}]")
    target_levels = set(target_levels)
    if any(n < 0 or n >= depth for n in target_levels):
        raise ScheduleError("target levels must lie in [0, depth)")
    if ifs.N**p0 > budget:
        raise BudgetExceededError("base level exceeds the word budget")

    levels: list[MeasureLevel] = []
    base_words = []
    for w in enumerate_words(ifs.N, p0, budget):
        matrix = np.eye(ifs.d)
        for letter in w:
            matrix = matrix @ ifs.matrix(letter)
        sv = np.log(np.linalg.svd(matrix, compute_uv=False))
        lbs = float(log_phi_from_sv_logs(sv, s))
        base_words.append(TreeWord(w.letters, (w,), (), lbs, 0.0, sv, matrix, 0.0))
    log_norm = logsumexp([w.log_block_sum for w in base_words])
    for w in base_words:
        w.log_weight = w.log_block_sum - log_norm
    levels.append(MeasureLevel(0, base_words, log_norm, None, "base"))

    schedule: list[int] = []
    min_ratio = math.inf
    for n in range(depth):
        parents = levels[n].words
        length_n = len(parents[0].letters)
        scheduled = n in target_levels
        position = length_n + K if scheduled else None
        if scheduled:
            schedule.append(position)
        if isinstance(mode, ShrinkingTargetMode) and scheduled:
            target = mode.spec.word(position)
            block_for_all = pad_target(target, p, K)
            kind = "target"
        elif isinstance(mode, RecurrenceMode) and scheduled:
            block_for_all = None  # per-parent prefix
            psi_val = mode.rule.value(position)
            psi_padded = psi_val + (p - psi_val) % (K + p)
            if psi_padded > length_n:
                raise ScheduleError(
                    f"recurrence prefix length {psi_padded} exceeds level "
                    f"length {length_n}; schedule infeasible at depth {n}"
                )
            kind = "recurrence"
        else:
            block_for_all = None
            kind = "free"
        if kind == "free":
            blocks = list(enumerate_words(ifs.N, p, budget))
        next_count = len(parents) * (len(blocks) if kind == "free" else 1)
        if next_count > budget:
            raise BudgetExceededError(
                f"level {n + 1} would hold {next_count} words, budget {budget}"
            )
        children = []
        for parent in parents:
            if kind == "free":
                parent_blocks = blocks
            elif kind == "target":
                parent_blocks = [block_for_all]
            else:
                parent_blocks = [Word(parent.letters[:psi_padded])]
            for block in parent_blocks:
                kappa, log_ratio = buffer_search(
                    ifs, s, K, Word(parent.letters), block,
                    _left_product=(parent.matrix.copy(), parent.log_scale))
                min_ratio = min(min_ratio, log_ratio)
                matrix = parent.matrix
                scale = parent.log_scale
                for letter in (kappa + block):
                    matrix = matrix @ ifs.matrix(letter)
                    norm = float(np.linalg.norm(matrix))
                    if norm < 1e-120:
                        matrix = matrix / norm
                        scale += math.log(norm)
                sv = np.log(np.linalg.svd(matrix, compute_uv=False)) + scale
                block_phi = _block_log_phi(ifs, block, s)
                children.append(TreeWord(
                    parent.letters + kappa.letters + block.letters,
                    parent.blocks + (block,),
                    parent.buffers + (kappa,),
                    parent.log_block_sum + block_phi,
                    0.0,
                    sv,
                    matrix,
                    scale,
                ))
        log_norm = logsumexp([w.log_block_sum for w in children])
        for w in children:
            w.log_weight = w.log_block_sum - log_norm
        levels.append(MeasureLevel(n + 1, children, log_norm, position, kind))

    growth_sum_ok, growth_sparse_ok = _growth_flags(schedule, mode, K, p)
    return MeasureTree(
        ifs=ifs, s=s, p=p, p0=p0, K=K, mode=mode, levels=levels,
        schedule=schedule, growth_sum_ok=growth_sum_ok,
        growth_sparse_ok=growth_sparse_ok,
        clipped=not (all(growth_sum_ok) and all(growth_sparse_ok) and schedule),
        certificate_hash=cert.content_hash(),
        min_realized_log_ratio=min_ratio,
    )


def _block_log_phi(ifs, block, s):
    matrix = np.eye(ifs.d)
    scale = 0.0
    for letter in block:
        matrix = matrix @ ifs.matrix(letter)
        norm = float(np.linalg.norm(matrix))
        if norm < 1e-120:
            matrix = matrix / norm
            scale += math.log(norm)
    sv = np.log(np.linalg.svd(matrix, compute_uv=False))
    return float(log_phi_from_sv_logs(sv, s)) + s * scale


def _growth_flags(schedule, mode, K, p):
    """Check the sparse-schedule inequalities on the materialized positions."""
    growth_sum_ok = []
    growth_sparse_ok = []
    lengths = []
    for pos, m in enumerate(schedule, start=1):
        if isinstance(mode, ShrinkingTargetMode):
            lengths.append(len(pad_target(mode.spec.word(m), p, K)))
        else:
            lengths.append(mode.rule.value(m))
        growth_sum_ok.append(sum(schedule[:pos]) <= (1 + 2.0**-pos) * m)
        growth_sparse_ok.append(m >= 2**pos * sum(x + K for x in lengths[:-1]))
    return growth_sum_ok, growth_sparse_ok


@dataclass(frozen=True)
class EnergyReport:
    """Per-level energy terms sum_w nu([w])^2 / phi^t(A_w) and running sums.

    The terms bound the t-energy of the measure up to a system constant; three
    consecutive non-decreasing terms raise the (heuristic) divergence flag.
    """

    s: float
    t: float
    log_terms: tuple[float, ...]
    terms: tuple[float, ...]
    partial_sums: tuple[float, ...]
    diverging: bool
    exponent_below_s: bool

    def to_json_dict(self) -> dict:
        return {
            "s": self.s,
            "t": self.t,
            "log_terms": list(self.log_terms),
            "terms": [x if math.isfinite(x) else "inf" for x in self.terms],
            "partial_sums": [x if math.isfinite(x) else "inf" for x in self.partial_sums],
            "diverging": self.diverging,
            "exponent_below_s": self.exponent_below_s,
        }


def energy_partial_sum(tree: MeasureTree, t: float, n_max: int | None = None) -> EnergyReport:
    """Level terms of the symbolic t-energy of the tree's measure.

    Supported regime is t < s; larger exponents are allowed so divergence is
    observable, but they are flagged.
    """
    if n_max is None:
        n_max = tree.depth
    if n_max > tree.depth:
        raise ValueError(f"tree only materialized to depth {tree.depth}")
    below = t < tree.s
    if not below:
        warnings.warn("energy exponent t >= s; expect divergence", stacklevel=2)
    log_terms = []
    for level in tree.levels[: n_max + 1]:
        contribs = [2.0 * w.log_weight - float(log_phi_from_sv_logs(w.sv_logs, t))
                    for w in level.words]
        log_terms.append(logsumexp(contribs))
    terms = [math.exp(x) if x < 700 else math.inf for x in log_terms]
    partial = list(np.cumsum(terms))
    diverging = any(
        log_terms[i] <= log_terms[i + 1] <= log_terms[i + 2]
        for i in range(len(log_terms) - 2)
    )
    return EnergyReport(tree.s, t, tuple(log_terms), tuple(terms),
                        tuple(partial), diverging, below)


def sample_attractor(ifs: AffineIFS, n_points: int, word_len: int, rng_seed: int,
                     translations=None) -> np.ndarray:
    """Points of the truncated coding-series projection for random words.

    Each point is sum_k A_{w_1}...A_{w_{k-1}} t_{w_k} over the first word_len
    letters of an independent uniform word; equivalently the maps applied
    backwards to the origin. word_len should satisfy gamma_max^word_len <
    the resolution of interest. Deterministic for a fixed seed.
    """
    if n_points < 1 or word_len < 1:
        raise ValueError("need n_points >= 1 and word_len >= 1")
    trans = ifs.translations if translations is None else np.asarray(translations, float)
    if trans.shape != (ifs.N, ifs.d):
        raise ValueError(f"translations must have shape ({ifs.N}, {ifs.d})")
    rng = np.random.default_rng(rng_seed)
    letters = rng.integers(0, ifs.N, size=(n_points, word_len))
    points = np.zeros((n_points, ifs.d))
    for k in range(word_len - 1, -1, -1):
        col = letters[:, k]
        for i in range(ifs.N):
            mask = col == i
            if np.any(mask):
                points[mask] = points[mask] @ ifs.matrices[i].T + trans[i]
    return points


@dataclass(frozen=True)
class BoxCountResult:
    epsilons: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    degenerate: bool

    def to_json_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "counts": list(self.counts),
            "slope": self.slope,
            "degenerate": self.degenerate,
        }


def box_count(points, epsilons) -> BoxCountResult:
    """Occupied axis-aligned eps-boxes per scale and the log-log slope."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    eps = sorted((float(e) for e in epsilons), reverse=True)
    if not eps or eps[-1] <= 0:
        raise ValueError("epsilons must be positive")
    counts = []
    for e in eps:
        keys = np.floor(pts / e).astype(np.int64)
        counts.append(int(np.unique(keys, axis=0).shape[0]))
    degenerate = all(c == 1 for c in counts)
    if degenerate or len(eps) < 2:
        slope = 0.0
    else:
        xs = np.log(1.0 / np.array(eps))
        ys = np.log(np.array(counts, dtype=float))
        slope = float(np.polyfit(xs, ys, 1)[0])
    return BoxCountResult(tuple(eps), tuple(counts), slope, degenerate)


def export_points_csv(points, path):
    pts = np.asarray(points, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(pts.shape[1])) + "\n")
        for row in pts:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def scatter_svg(points, path, size: int = 800, radius: float = 1.0):
    """Minimal deterministic SVG scatter for 2-d point sets."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] != 2:
        raise ValueError("scatter export requires 2-d points")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scaled = (pts - lo) / span * (size - 20) + 10
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for x, y in scaled:
        lines.append(
            f'<circle cx="{x:.2f}" cy="{size - y:.2f}" r="{radius}" '
            'fill="black" fill-opacity="0.5"/>'
        )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
