"""Exterior powers, Hodge star, flag operators, proximality and irreducibility.

The k-th compound of A acts on wedge^k R^d in the lexicographic basis of
k-subsets of {1..d}; its operator norm is the product of the top k singular
values, which is how the singular value function decomposes into wedge norms.
Full proximality (d distinct eigenvalue moduli) and k-irreducibility of the
generated semigroup are the checkable ingredients behind the buffer-word
condition used for pressure lower bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BudgetExceededError, ConvergenceError, DegreeError
from .svf import AffineIFS, word_matrix
from .symbolic import EMPTY_WORD, Word, enumerate_words

DEFAULT_PROXIMALITY_TOL = 1e-6


def k_subsets(d: int, k: int) -> list[tuple[int, ...]]:
    """All k-subsets of {0..d-1} in lexicographic order (the wedge basis)."""
    return list(itertools.combinations(range(d), k))


def compound(matrix, k: int) -> np.ndarray:
    """k-th compound: entry (I, J) is the k x k minor with rows I, columns J."""
    a = np.asarray(matrix, dtype=float)
    d = a.shape[0]
    if k < 1 or k > d - 1:
        raise DegreeError(f"compound degree {k} outside [1, {d - 1}]")
    if k == 1:
        return a.copy()
    subsets = k_subsets(d, k)
    minors = np.empty((len(subsets), len(subsets), k, k))
    for ii, rows in enumerate(subsets):
        sub = a[rows, :]
        for jj, cols in enumerate(subsets):
            minors[ii, jj] = sub[:, cols]
    return np.linalg.det(minors)


def compound_norm(matrix, k: int) -> float:
    return float(np.linalg.norm(compound(matrix, k), 2))


def _permutation_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def hodge_star(v, d: int, k: int) -> np.ndarray:
    """Hodge star wedge^k -> wedge^(d-k) in the lexicographic bases.

    Basis action: e_I -> sgn(I, complement(I)) e_complement(I).
    """
    if k < 0 or k > d:
        raise DegreeError(f"hodge degree {k} outside [0, {d}]")
    v = np.asarray(v, dtype=float)
    src = k_subsets(d, k)
    dst = k_subsets(d, d - k)
    if v.shape != (len(src),):
        raise ValueError(f"expected coefficient vector of length {len(src)}")
    index = {subset: pos for pos, subset in enumerate(dst)}
    out = np.zeros(len(dst))
    for pos, subset in enumerate(src):
        comp = tuple(sorted(set(range(d)) - set(subset)))
        out[index[comp]] += _permutation_sign(subset + comp) * v[pos]
    return out


def wedge_product(v, w, d: int, k: int, j: int) -> np.ndarray:
    """Coefficients of v ^ w in wedge^(k+j), for v in wedge^k, w in wedge^j."""
    if k + j > d:
        raise DegreeError(f"wedge degree {k}+{j} exceeds {d}")
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    src_v = k_subsets(d, k)
    src_w = k_subsets(d, j)
    dst = k_subsets(d, k + j)
    index = {subset: pos for pos, subset in enumerate(dst)}
    out = np.zeros(len(dst))
    for pv, sv in enumerate(src_v):
        if v[pv] == 0.0:
            continue
        for pw, sw in enumerate(src_w):
            if w[pw] == 0.0 or set(sv) & set(sw):
                continue
            merged = tuple(sorted(sv + sw))
            out[index[merged]] += _permutation_sign(sv + sw) * v[pv] * w[pw]
    return out


def wedge_inner(v, w, d: int, k: int) -> float:
    """Inner product on wedge^k via *(v ^ (*w)); Gram determinant on decomposables."""
    star_w = hodge_star(w, d, k)
    top = wedge_product(v, star_w, d, k, d - k)
    return float(hodge_star(top, d, d)[0])


def wedge_norm(v, d: int, k: int) -> float:
    return math.sqrt(max(wedge_inner(v, v, d, k), 0.0))


def wedge_coordinates(vectors) -> np.ndarray:
    """Coordinates of u_1 ^ ... ^ u_k in the lexicographic basis (minor vector)."""
    u = np.column_stack([np.asarray(x, dtype=float) for x in vectors])
    d, k = u.shape
    subsets = k_subsets(d, k)
    return np.array([np.linalg.det(u[rows, :]) for rows in subsets])


def flag_dims(d: int) -> list[int]:
    return [math.comb(d, k) for k in range(1, d)]


@dataclass(frozen=True)
class FlagOperator:
    """Tensor-product action of the compounds on wedge^1 x ... x wedge^(d-1).

    The product space is represented in the full tensor basis; flag vectors
    (tensors of nested wedges) are acted on directly, no basis of the flag
    subspace is ever materialized.
    """

    d: int
    compounds: tuple[np.ndarray, ...]

    @classmethod
    def from_matrix(cls, matrix) -> "FlagOperator":
        a = np.asarray(matrix, dtype=float)
        d = a.shape[0]
        if d == 1:
            return cls(1, ())
        return cls(d, tuple(compound(a, k) for k in range(1, d)))

    @property
    def dims(self) -> list[int]:
        return flag_dims(self.d)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dims = self.dims
        total = int(np.prod(dims)) if dims else 1
        if x.shape != (total,):
            raise ValueError(f"flag vector must have length {total}")
        if not dims:
            return x.copy()
        tensor = x.reshape(dims)
        for axis, comp in enumerate(self.compounds):
            tensor = np.moveaxis(
                np.tensordot(comp, tensor, axes=([1], [axis])), 0, axis
            )
        return tensor.reshape(total)


def flag_apply(matrix, x) -> np.ndarray:
    """Apply the degree-wise compound tensor action to a vector of the product space."""
    return FlagOperator.from_matrix(matrix).apply(x)


def flag_of_vectors(vectors) -> np.ndarray:
    """Flag vector u_1 (x) (u_1 ^ u_2) (x) ... for d-1 independent vectors."""
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    d = vecs[0].shape[0]
    if len(vecs) != d - 1:
        raise ValueError(f"need d-1 = {d - 1} vectors")
    out = np.ones(1)
    for k in range(1, d):
        out = np.kron(out, wedge_coordinates(vecs[:k]))
    return out


@dataclass(frozen=True)
class ProximalityWitness:
    """A word whose matrix product has d separated eigenvalue moduli."""

    word: Word
    eigenvalue_magnitudes: tuple[float, ...]
    min_gap: float
    tol: float

    def to_json_dict(self) -> dict:
        return {
            "word": "".join(str(x) for x in self.word) if max(self.word.letters, default=1) <= 9
            else ".".join(str(x) for x in self.word),
            "eigenvalue_magnitudes": list(self.eigenvalue_magnitudes),
            "min_gap": self.min_gap,
            "tolerance": self.tol,
        }


def is_fully_proximal(matrix, tol: float = DEFAULT_PROXIMALITY_TOL,
                      word: Word = EMPTY_WORD) -> ProximalityWitness | None:
    """Witness iff all consecutive eigenvalue-modulus gaps exceed tol (relative).

    Exact distinctness is not numerically decidable, so the tolerance is a
    declared parameter of the verdict.
    """
    a = np.asarray(matrix, dtype=float)
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue solver failed: {exc}") from exc
    mags = tuple(sorted((float(abs(z)) for z in eigs), reverse=True))
    if mags[-1] <= 0.0:
        return None
    if len(mags) == 1:
        return ProximalityWitness(word, mags, math.inf, tol)
    gaps = [(mags[i] - mags[i + 1]) / mags[i] for i in range(len(mags) - 1)]
    min_gap = min(gaps)
    if min_gap > tol:
        return ProximalityWitness(word, mags, min_gap, tol)
    return None


def find_proximal_word(ifs: AffineIFS, max_len: int,
                       tol: float = DEFAULT_PROXIMALITY_TOL,
                       budget: int = 10**6) -> ProximalityWitness | None:
    """Breadth-first search for a fully proximal product, shortest word first.

    Returns the first witness in length-then-lexicographic order, or None if
    no product of length <= max_len separates all eigenvalue moduli.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    scanned = 0
    for n in range(1, max_len + 1):
        scanned += ifs.N**n
        if scanned > budget:
            raise BudgetExceededError(
                f"proximality search would scan {scanned} words, budget {budget}"
            )
        for w in enumerate_words(ifs.N, n, budget):
            witness = is_fully_proximal(word_matrix(ifs, w), tol, w)
            if witness is not None:
                return witness
    return None


def top_flag(matrix, iterations: int = 200, tol: float = 1e-10) -> np.ndarray:
    """Limit direction of the normalized compound powers, as a product-space tensor.

    For each degree k the powers (A^wedge-k)^n, renormalized, collapse onto a
    rank-one operator; the returned vector is the tensor product of the
    dominant directions. Convergence rate is governed by the eigenvalue-gap
    ratio at each degree, so non-proximal input exhausts the iteration budget.
    """
    a = np.asarray(matrix, dtype=float)
    d = a.shape[0]
    if d == 1:
        return np.ones(1)
    out = np.ones(1)
    for k in range(1, d):
        comp = compound(a, k)
        power = comp / np.linalg.norm(comp)
        direction = None
        for _ in range(iterations):
            power = power @ power
            norm = np.linalg.norm(power)
            if norm == 0.0 or not np.isfinite(norm):
                raise ConvergenceError(f"compound power degenerated at degree {k}")
            power /= norm
            u, s, _ = np.linalg.svd(power)
            if s[0] > 0 and (len(s) == 1 or s[1] / s[0] < tol):
                direction = u[:, 0]
                break
        if direction is None:
            raise ConvergenceError(
                f"no spectral gap at degree {k} after {iterations} squarings; "
                "input is likely not fully proximal"
            )
        # fix the sign: first component of largest magnitude made positive
        lead = int(np.argmax(np.abs(direction)))
        if direction[lead] < 0:
            direction = -direction
        out = np.kron(out, direction)
    return out


class IrreducibilityVerdict(Enum):
    IRREDUCIBLE_CERTIFIED = "irreducible_certified"
    INCONCLUSIVE = "inconclusive"


def _orbit_rank(compounds, start, orbit_len, dim) -> int:
    vectors = [start / np.linalg.norm(start)]
    frontier = [vectors[0]]
    for _ in range(orbit_len):
        new_frontier = []
        for mat in compounds:
            for vec in frontier:
                img = mat @ vec
                norm = np.linalg.norm(img)
                if norm > 0:
                    new_frontier.append(img / norm)
        vectors.extend(new_frontier)
        frontier = new_frontier
        if len(vectors) >= 4 * dim:
            break
    return int(np.linalg.matrix_rank(np.array(vectors)))


def irreducibility_semidecision(ifs: AffineIFS, k: int, trials: int = 8,
                                orbit_len: int = 4,
                                rng_seed: int = 0) -> IrreducibilityVerdict:
    """Orbit-span test for k-irreducibility of the generated matrix family.

    Starting vectors are the basis vectors of wedge^k, real eigenvector parts
    of the generator compounds and of their pairwise products, plus seeded
    random vectors. A proper invariant subspace containing any tested vector
    bounds that orbit span, so full span on every trial certifies that no
    invariant subspace meets the tested set; structured starts catch the
    common reducible families (shared eigenvectors, invariant complex planes).
    Anything short of full span on some trial is reported as inconclusive.
    """
    if k < 1 or k > ifs.d - 1:
        raise DegreeError(f"degree {k} outside [1, {ifs.d - 1}]")
    compounds = [compound(ifs.matrices[i], k) for i in range(ifs.N)]
    dim = compounds[0].shape[0]
    starts: list[np.ndarray] = [np.eye(dim)[i] for i in range(dim)]
    eig_sources = list(compounds)
    eig_sources.extend(a @ b for a in compounds for b in compounds)
    for mat in eig_sources:
        _, vecs = np.linalg.eig(mat)
        for col in range(vecs.shape[1]):
            for part in (np.real(vecs[:, col]), np.imag(vecs[:, col])):
                norm = np.linalg.norm(part)
                if norm > 1e-12:
                    starts.append(part / norm)
    rng = np.random.default_rng(rng_seed)
    for _ in range(trials):
        starts.append(rng.standard_normal(dim))
    for start in starts:
        if _orbit_rank(compounds, start, orbit_len, dim) < dim:
            return IrreducibilityVerdict.INCONCLUSIVE
    return IrreducibilityVerdict.IRREDUCIBLE_CERTIFIED
