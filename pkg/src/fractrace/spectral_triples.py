"""Eigenvalue models of Dirac operators built over fractal sets.

Two constructions feed one analysis pipeline.  The gap model lives on the
line: the characteristic values of the inverse operator are the lengths of
the complementary intervals of a compact set, each entered twice, tagged by
the gap endpoints.  The pair model lives over an iterated system in any
dimension: every finite word contributes the distance between the images of
a fixed seed pair, again twice, tagged by the two image points.  Functions
act through their values at the tags, which is all the downstream trace
machinery ever reads.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    EmptySubsequence,
    SBelowDimension,
    SeedCoincident,
    UndefinedTag,
)
from .sequences import EigenvalueSequence
from .asymptotics import (
    DixmierEstimate,
    OrdEstimate,
    dixmier_trace_estimate,
    eccentricity_scan,
    order_of_infinitesimal,
    resolve_kind,
    singular_trace_estimate,
)
from .fractal_geometry import (
    STATIONARY,
    GapList,
    LimitIfs,
    MinkowskiContent,
    minkowski_content_estimate,
    similarity_dimension,
)

# enumeration budget counts eigen-entries (two per gap or word), not depth;
# depth is not comparable across systems with unequal ratios
DEFAULT_ENTRY_CAP = 2 * 10**6

# log-ratios within this of a rational multiple of each other are lattice
_LATTICE_TOL = 1e-9

# adaptive eccentricity threshold never relaxes past this: at the critical
# exponent the ratio gap closes like 1/log n (slowly but surely), while a
# wrong exponent parks it at |2^(1 - a/d) - 1|, which for |a - d| worth
# caring about sits above 0.1 at any cap
_ADAPTIVE_GAP_CEILING = 0.1

_RESIDUE_DELTAS = np.geomspace(1e-3, 1e-1, 16)


# ---------------------------------------------------------------------------
# models


def _eigen_sequence(values: np.ndarray, truncated: bool, name: str) -> EigenvalueSequence:
    # a truncated model must not present itself as a finite sequence: the
    # operator has more eigenvalues below the materialized ones, so the tail
    # is left to the fitted route instead of the exact "exhausted" one
    if len(values) == 0:
        raise ValueError("model has no entries")
    if truncated:
        def lookup(n):
            return values[np.asarray(n, dtype=np.int64) - 1]

        return EigenvalueSequence.from_function(lookup, cap=len(values), name=name)
    return EigenvalueSequence.from_values(values, name=name)


@dataclass
class GapTripleModel:
    """Inverse-Dirac eigenvalue data read off a one-dimensional gap list.

    Each gap (a_n, b_n) contributes the value b_n - a_n twice; both copies
    are tagged with the endpoint pair, which is the two-point space the
    corresponding operator block acts on.  ``truncated`` records whether the
    list cuts off an infinite complement, controlling how zeta tails close.
    """

    gaps: GapList
    values: np.ndarray
    tags_x: np.ndarray
    tags_y: np.ndarray
    levels: np.ndarray
    truncated: bool
    _eigen: EigenvalueSequence | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return 1

    @property
    def eigen(self) -> EigenvalueSequence:
        if self._eigen is None:
            self._eigen = _eigen_sequence(self.values, self.truncated, "gap-triple")
        return self._eigen

    def tag_matrix(self):
        """Tags as two (n, 1) arrays, the shape functional sampling expects."""
        return self.tags_x.reshape(-1, 1), self.tags_y.reshape(-1, 1)

    def to_csv(self, path, max_rows=None):
        _entries_to_csv(path, self.values, *self.tag_matrix(), max_rows=max_rows)


def gap_triple(gaps: GapList) -> GapTripleModel:
    """Model whose eigenvalue list is the gap lengths, each entered twice.

    The gap list arrives sorted by nonincreasing length, so duplication
    preserves the order; equal lengths keep their position order.  Entries
    at or below the list's completeness cutoff are dropped: down there the
    sorted list interleaves with gaps the enumeration has not opened yet,
    and a model must be an exact initial segment of the true sequence or
    every tail statistic downstream is biased.
    """
    if gaps.starts.size == 0:
        raise ValueError("gap list has no gaps to build a model from")
    keep = gaps.lengths > gaps.completeness_cutoff
    if not np.any(keep):
        raise ValueError(
            "no gap clears the completeness cutoff; deepen the enumeration")
    truncated = bool((not gaps.residual_solid) and gaps.residual_starts.size > 0)
    return GapTripleModel(
        gaps=gaps,
        values=np.repeat(gaps.lengths[keep], 2),
        tags_x=np.repeat(gaps.starts[keep], 2),
        tags_y=np.repeat(gaps.ends[keep], 2),
        levels=np.repeat(gaps.levels[keep], 2),
        truncated=truncated or not np.all(keep),
    )


@dataclass
class PairTripleModel:
    """Word-indexed two-point model over an iterated system.

    Entry k covers one word sigma (twice): value d(x_sigma, y_sigma) with
    x_sigma, y_sigma the images of the seed pair, stored in tags_x/tags_y as
    (n, dim) rows.  depths and first_digits keep the word length and the
    leading map index, which is enough to restrict the model to any
    first-level cylinder.
    """

    ifs: LimitIfs
    seed_x: np.ndarray
    seed_y: np.ndarray
    seed_distance: float
    values: np.ndarray
    tags_x: np.ndarray
    tags_y: np.ndarray
    depths: np.ndarray
    first_digits: np.ndarray
    truncated: bool
    _eigen: EigenvalueSequence | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return int(self.seed_x.size)

    @property
    def eigen(self) -> EigenvalueSequence:
        if self._eigen is None:
            self._eigen = _eigen_sequence(self.values, self.truncated, "pair-triple")
        return self._eigen

    def tag_matrix(self):
        return self.tags_x, self.tags_y

    def to_csv(self, path, max_rows=None):
        _entries_to_csv(path, self.values, self.tags_x, self.tags_y,
                        max_rows=max_rows)


def _entries_to_csv(path, values, tx, ty, max_rows=None):
    n_rows = len(values) if max_rows is None else min(len(values), int(max_rows))
    dim = tx.shape[1]
    if dim == 1:
        head = "k,mu_k,tag_x,tag_y"
    else:
        head = ("k,mu_k,"
                + ",".join(f"tag_x_{i}" for i in range(1, dim + 1)) + ","
                + ",".join(f"tag_y_{i}" for i in range(1, dim + 1)))
    with open(path, "w") as fh:
        fh.write(head + "\n")
        for k in range(n_rows):
            cells = [str(k + 1), repr(float(values[k]))]
            cells += [repr(float(v)) for v in tx[k]]
            cells += [repr(float(v)) for v in ty[k]]
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# pair enumeration


def _seed_pair(ifs: LimitIfs, seed):
    level1 = ifs.level(1)
    dim = level1[0].dim
    if seed is None:
        if len(level1) < 2:
            raise ValueError(
                "default seed needs two maps at the first level; pass seed explicitly")
        x = level1[0].fixed_point()
        y = level1[1].fixed_point()
    else:
        x = np.atleast_1d(np.asarray(seed[0], dtype=float)).reshape(-1)
        y = np.atleast_1d(np.asarray(seed[1], dtype=float)).reshape(-1)
        if x.size != dim or y.size != dim:
            raise ValueError(f"seed points must have dimension {dim}")
    d0 = float(np.linalg.norm(x - y))
    if d0 == 0.0:
        raise SeedCoincident("seed points coincide")
    if ifs.osc_box is not None:
        lo, hi = ifs.osc_box
        slack = 1e-12 * float(np.max(hi - lo))
        for p in (x, y):
            if np.any(p < lo - slack) or np.any(p > hi + slack):
                raise ValueError("seed point outside the declared bounding box")
    return x, y, d0


class _WordStore:
    """Append-only affine store so heap entries stay (key, tiebreak, row)."""

    def __init__(self, dim: int):
        n = 1024
        self.lin = np.empty((n, dim, dim))
        self.off = np.empty((n, dim))
        self.lam = np.empty(n)
        self.depth = np.empty(n, dtype=np.int64)
        self.first = np.empty(n, dtype=np.int64)
        self.n = 0

    def append(self, lam, lin, off, depth, first) -> int:
        if self.n == len(self.lam):
            grow = 2 * len(self.lam)
            for name in ("lin", "off", "lam", "depth", "first"):
                buf = getattr(self, name)
                new = np.empty((grow,) + buf.shape[1:], dtype=buf.dtype)
                new[: self.n] = buf
                setattr(self, name, new)
        i = self.n
        self.lin[i] = lin
        self.off[i] = off
        self.lam[i] = lam
        self.depth[i] = depth
        self.first[i] = first
        self.n = i + 1
        return i


def pair_triple(ifs: LimitIfs, seed=None, cap: int = DEFAULT_ENTRY_CAP,
                max_depth: int | None = None) -> PairTripleModel:
    """Enumerate the two-point model in nonincreasing eigenvalue order.

    Words are drawn level by level from ``ifs``; the entry for a word is the
    seed distance scaled by the word's ratio product, exact for similarities.
    A priority queue over the word tree keeps the stream sorted without
    materializing it: children are pushed when their parent is popped, and
    every child contracts strictly below its parent, so no later pop can
    exceed the current head.  ``cap`` counts eigen-entries (two per word);
    ``max_depth`` optionally stops the tree at a word length, with 0 giving
    the empty model.  The default seed is the fixed-point pair of the first
    two maps of level 1.
    """
    x, y, d0 = _seed_pair(ifs, seed)
    dim = x.size

    ceiling = ifs.max_depth
    if max_depth is not None:
        if max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        ceiling = max_depth if ceiling is None else min(max_depth, ceiling)
    n_words_max = int(cap) // 2

    store = _WordStore(dim)
    heap: list = []
    serial = 0
    if (ceiling is None or ceiling >= 1) and n_words_max > 0:
        for j, w in enumerate(ifs.level(1), start=1):
            rid = store.append(w.ratio, w.linear, w.translation, 1, j)
            heapq.heappush(heap, (-w.ratio, serial, rid))
            serial += 1

    order = []
    while heap and len(order) < n_words_max:
        _, _, rid = heapq.heappop(heap)
        order.append(rid)
        depth = int(store.depth[rid])
        if ceiling is None or depth < ceiling:
            lam = store.lam[rid]
            lin = store.lin[rid].copy()
            off = store.off[rid].copy()
            first = store.first[rid]
            for w in ifs.level(depth + 1):
                cid = store.append(lam * w.ratio, lin @ w.linear,
                                   lin @ w.translation + off, depth + 1, first)
                heapq.heappush(heap, (-store.lam[cid], serial, cid))
                serial += 1

    # the model is complete only when the whole (finite) word tree was walked
    truncated = bool(heap) or (
        ceiling is not None and (ifs.max_depth is None or ceiling < ifs.max_depth))

    idx = np.asarray(order, dtype=np.int64)
    lam_w = store.lam[idx]
    xs = store.lin[idx] @ x + store.off[idx]
    ys = store.lin[idx] @ y + store.off[idx]
    return PairTripleModel(
        ifs=ifs,
        seed_x=x,
        seed_y=y,
        seed_distance=d0,
        values=np.repeat(lam_w * d0, 2),
        tags_x=np.repeat(xs, 2, axis=0),
        tags_y=np.repeat(ys, 2, axis=0),
        depths=np.repeat(store.depth[idx], 2),
        first_digits=np.repeat(store.first[idx], 2),
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# dimension


@dataclass
class SpectralDimension:
    value: float
    lo: float
    hi: float
    ord_estimate: OrdEstimate
    length_scaling: float | None

    @property
    def interval(self):
        return (self.lo, self.hi)


def _length_scaling_estimate(lengths: np.ndarray) -> float | None:
    """limsup of log n / |log l_n| over a nonincreasing length list.

    The ratio peaks at the last index of each size class, so the maximum
    over the tail half reads the limsup off directly; entries with l >= 1
    (possible among the first few gaps of a wide set) are skipped.
    """
    n = np.arange(1, len(lengths) + 1, dtype=float)
    ok = (lengths < 1.0) & (n > 1.0)
    if ok.sum() < 4:
        return None
    r = np.log(n[ok]) / -np.log(lengths[ok])
    return float(r[len(r) // 2:].max())


def spectral_dimension(model) -> SpectralDimension:
    """Dimension of the model as the reciprocal decay order of mu_n.

    The decay order comes from the fitted order of infinitesimal of the
    eigenvalue sequence; the dimension is its reciprocal with the interval
    endpoints mapped through.  Gap models also carry an independent check
    that needs no fit: the limsup of log n / |log l_n| over the plain
    (single-copy) gap lengths.
    """
    est = order_of_infinitesimal(model.eigen)
    scaling = None
    if isinstance(model, GapTripleModel):
        # one copy per gap; the model's values are trimmed to the complete
        # prefix, which the raw gap list is not
        scaling = _length_scaling_estimate(model.values[::2])
    return SpectralDimension(
        value=1.0 / est.value,
        lo=1.0 / est.hi,
        hi=1.0 / est.lo,
        ord_estimate=est,
        length_scaling=scaling,
    )


# ---------------------------------------------------------------------------
# zeta


def _generator_ratios(model) -> tuple:
    """Level ratio multiset when one level repeats forever, else ()."""
    if isinstance(model, PairTripleModel):
        if model.ifs.generation == STATIONARY:
            return tuple(w.ratio for w in model.ifs.level(1))
        return ()
    return tuple(model.gaps.stationary_ratios)


def _dimension_floor(model):
    """(estimate, route) for the s > d guard; exact-ish when stationary."""
    ratios = _generator_ratios(model)
    if ratios:
        return similarity_dimension(ratios), "similarity"
    est = order_of_infinitesimal(model.eigen)
    return 1.0 / est.value, "order"


def _zeta_numerator(model, s: float, ratios) -> float:
    # the complement of a stationary set repeats its first-level pattern
    # inside every cylinder, so the numerator is the first-level power sum
    if isinstance(model, PairTripleModel):
        lam_s = sum(r**s for r in ratios)
        return 2.0 * model.seed_distance**s * lam_s
    g1 = model.gaps.lengths[model.gaps.levels == 1]
    return 2.0 * float(np.sum(g1**s))


def _zeta_closed(model, s: float, ratios) -> float:
    lam_s = sum(r**s for r in ratios)
    if lam_s >= 1.0:
        raise SBelowDimension(
            f"ratio power sum at s = {s:.6g} is {lam_s:.6g}; the series diverges")
    return _zeta_numerator(model, s, ratios) / (1.0 - lam_s)


@dataclass
class ZetaPartial:
    s: float
    value: float
    truncated_sum: float
    tail: float
    tail_error: float
    tail_route: str
    n_terms: int
    closed_form: float | None


def zeta_partial(model, s: float, cap: int | None = None) -> ZetaPartial:
    """Trace of |D|^{-s} for s above the dimension estimate.

    The sum over materialized entries is closed with the sequence's tail
    model: exact for complete models, fitted for truncated ones.  Stationary
    systems also get the geometric closed form (first-level power sum over
    1 minus the ratio power sum), which the truncated route must agree with
    to within its own tail error.
    """
    s = float(s)
    floor, _ = _dimension_floor(model)
    if s <= floor:
        raise SBelowDimension(
            f"s = {s:.6g} is not above the dimension estimate {floor:.6g}")
    seq = model.eigen
    n = seq.cap if cap is None else min(int(cap), seq.cap)
    head = float(np.sum(seq.prefix(n) ** s))
    tail, err, route = seq.tail_sum(n, s)
    ratios = _generator_ratios(model)
    closed = _zeta_closed(model, s, ratios) if ratios else None
    return ZetaPartial(
        s=s,
        value=head + tail,
        truncated_sum=head,
        tail=float(tail),
        tail_error=float(err),
        tail_route=route,
        n_terms=n,
        closed_form=closed,
    )


@dataclass
class ZetaResidue:
    d: float
    analytic: float
    numeric: float
    grid_s: np.ndarray
    grid_values: np.ndarray


def zeta_residue(model, d: float | None = None) -> ZetaResidue:
    """Residue of the zeta function at the dimension, computed twice.

    Analytic route: numerator at d over sum_j r_j^d log(1/r_j), the limit of
    (s - d) zeta(s) after one derivative of the vanishing denominator.
    Numeric route: delta * zeta(d + delta) on a geometric grid of deltas,
    extrapolated to 0 by a cubic fit.  Both are returned; their spread is
    the caller's consistency check.
    """
    ratios = _generator_ratios(model)
    if not ratios:
        raise ValueError("residue needs a stationary generating system")
    if d is None:
        d = similarity_dimension(ratios)
    d = float(d)
    lam_d = sum(r**d for r in ratios)
    if abs(lam_d - 1.0) > 1e-8:
        raise ValueError(
            f"ratio power sum at d = {d:.6g} is {lam_d:.9f}; "
            "the residue lives at the similarity dimension")
    denom = sum(r**d * math.log(1.0 / r) for r in ratios)
    analytic = _zeta_numerator(model, d, ratios) / denom
    grid_s = d + _RESIDUE_DELTAS
    grid_values = np.array(
        [delta * _zeta_closed(model, d + delta, ratios) for delta in _RESIDUE_DELTAS])
    coef = np.polyfit(_RESIDUE_DELTAS, grid_values, 3)
    return ZetaResidue(
        d=d,
        analytic=float(analytic),
        numeric=float(coef[-1]),
        grid_s=grid_s,
        grid_values=grid_values,
    )


# ---------------------------------------------------------------------------
# functionals


@dataclass
class FunctionalSample:
    """A scalar function materialized at a model's tag points.

    values_x[k] and values_y[k] are the function at the two tags of entry k.
    ``lipschitz`` is the largest per-entry difference quotient
    |f(x_k) - f(y_k)| / d(x_k, y_k), the only commutator information the
    eigenvalue picture retains.
    """

    values_x: np.ndarray
    values_y: np.ndarray
    lipschitz: float
    name: str = ""

    def __len__(self) -> int:
        return len(self.values_x)


def sample_functional(model, f, tolerance: float | None = None,
                      name: str = "") -> FunctionalSample:
    """Evaluate ``f`` at every tag point of ``model``.

    ``f`` is either a vectorized callable (fed a flat (n,) array for
    one-dimensional models, an (n, dim) array otherwise) or a tabulated
    (points, values) pair matched by nearest tag; a nearest distance above
    ``tolerance`` raises UndefinedTag.  The default tolerance is 1e-8 times
    the larger of 1 and the table's coordinate scale.
    """
    if len(model) == 0:
        raise ValueError("model has no entries to sample at")
    tx, ty = model.tag_matrix()
    if callable(f):
        vx = _eval_callable(f, tx)
        vy = _eval_callable(f, ty)
    else:
        points, table = f
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 1 and pts.shape[1] > 1 and tx.shape[1] == 1:
            pts = pts.T
        table = np.asarray(table, dtype=float).reshape(-1)
        if len(table) != pts.shape[0]:
            raise ValueError("tabulated points and values disagree in length")
        if tolerance is None:
            tolerance = 1e-8 * max(1.0, float(np.abs(pts).max()))
        tree = cKDTree(pts)
        vx = _lookup_table(tree, table, tx, tolerance)
        vy = _lookup_table(tree, table, ty, tolerance)
    if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
        raise ValueError("functional produced non-finite values at tag points")
    lip = float(np.max(np.abs(vx - vy) / model.values)) if len(model) else 0.0
    return FunctionalSample(values_x=vx, values_y=vy, lipschitz=lip, name=name)


def _eval_callable(f, tags):
    arg = tags[:, 0] if tags.shape[1] == 1 else tags
    return np.asarray(f(arg), dtype=float).reshape(-1)


def _lookup_table(tree, table, tags, tolerance):
    dist, idx = tree.query(tags)
    worst = float(np.max(dist)) if len(dist) else 0.0
    if worst > tolerance:
        k = int(np.argmax(dist))
        raise UndefinedTag(
            f"tag point {tags[k].tolist()} is {worst:.3e} from the nearest "
            f"table point, above tolerance {tolerance:.3e}")
    return table[idx]


def affine_functional(slope, intercept: float = 0.0):
    """f(x) = <slope, x> + intercept over tag arrays of any dimension."""
    s = np.atleast_1d(np.asarray(slope, dtype=float))

    def f(points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != s.size:
            raise ValueError(f"slope has dimension {s.size}, points {pts.shape[1]}")
        return pts @ s + intercept

    return f


def box_indicator(lo, hi, margin: float = 0.0):
    """Indicator of the box [lo, hi], ramped linearly to 0 over ``margin``.

    margin 0 gives the sharp indicator; a positive margin keeps the function
    Lipschitz with constant 1/margin, which is what a cylinder test function
    needs to have a finite difference-quotient estimate.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or np.any(lo >= hi):
        raise ValueError("box must satisfy lo < hi componentwise")

    def f(points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        outside = np.max(np.maximum(lo - pts, pts - hi), axis=1)
        if margin == 0.0:
            return (outside <= 0.0).astype(float)
        return np.clip(1.0 - np.maximum(outside, 0.0) / margin, 0.0, 1.0)

    return f


@dataclass
class HausdorffFunctional:
    value: float
    lo: float
    hi: float
    exponent: float
    measurable: bool
    n_points: int

    @property
    def band(self):
        return (self.lo, self.hi)


def hausdorff_functional(model, f, d: float | None = None, subseq=None,
                         tolerance: float | None = None) -> HausdorffFunctional:
    """State value of f: the ratio limit S_n(f mu^d) / S_n(mu^d).

    Each eigen-entry contributes the average of f at its two tags times
    mu_k^d; the limit is taken along an eccentric subsequence with
    singular_trace_estimate.  When no subsequence is given one is found by
    the eccentricity scan at the same exponent, with the threshold adapting
    to the cap unless ``tolerance`` pins it.  The constant function 1
    returns exactly 1 whatever the subsequence: the functional is a state.
    """
    sample = f if isinstance(f, FunctionalSample) else sample_functional(model, f)
    if len(sample) != len(model):
        raise ValueError("functional sample does not match the model's entries")
    if d is None:
        d, _ = _dimension_floor(model)
    d = float(d)
    seq_d = model.eigen.power(d)
    kind = resolve_kind(seq_d)
    if subseq is None:
        subseq = _eccentric_indices(seq_d, kind, tolerance)
    subseq = np.atleast_1d(np.asarray(subseq, dtype=np.int64))
    weights = 0.5 * (sample.values_x + sample.values_y)
    tv = singular_trace_estimate(weights, seq_d, subseq, kind)
    return HausdorffFunctional(
        value=tv.value,
        lo=tv.lo,
        hi=tv.hi,
        exponent=d,
        measurable=tv.measurable,
        n_points=len(subseq),
    )


def _eccentric_indices(seq, kind, tolerance):
    """Subsequence indices from the eccentricity scan.

    A pinned tolerance is applied as-is.  With tolerance None the threshold
    adapts to the best the cap can reach: 1.5 times the infimum ratio-gap,
    floored at 0.02 but never above the ceiling, since a critical-exponent
    gap merely closes like 1/log n while an off-exponent gap stays parked
    at a cap-independent level.
    """
    scan = eccentricity_scan(seq, kind, 0.02 if tolerance is None else tolerance)
    if tolerance is None:
        threshold = min(max(1.5 * scan.inf_gap, 0.02), _ADAPTIVE_GAP_CEILING)
        with np.errstate(over="ignore"):
            n = np.floor(np.exp(scan.t_points[scan.gaps <= threshold]))
    else:
        threshold = tolerance
        n = scan.accepted_n
    n = n[np.isfinite(n)]
    n = np.unique(n[(n >= 1) & (n <= seq.cap)].astype(np.int64))
    if len(n) == 0:
        raise EmptySubsequence(
            f"eccentricity scan found no admissible indices "
            f"(closest ratio gap {scan.inf_gap:.4f} vs threshold {threshold:.4f})")
    return n


def functional_spectrum(model, f, exponents, tolerance: float | None = None):
    """hausdorff_functional at every exponent whose eccentricity scan lands.

    Level-varying systems have no single similarity dimension, so each
    candidate exponent is tried and the ones with an eccentric subsequence
    are reported as (exponent, functional) pairs; the rest are skipped.
    """
    sample = f if isinstance(f, FunctionalSample) else sample_functional(model, f)
    out = []
    for a in exponents:
        try:
            out.append((float(a), hausdorff_functional(model, sample, d=float(a),
                                                       tolerance=tolerance)))
        except EmptySubsequence:
            continue
    return out


# ---------------------------------------------------------------------------
# Minkowski link


@dataclass
class MinkowskiLink:
    trace: DixmierEstimate
    content: MinkowskiContent
    scaled_value: float
    scaled_lo: float
    scaled_hi: float
    d: float
    lattice: bool | None
    asserted: bool
    overlap: bool

    @property
    def trace_band(self):
        return self.trace.band

    @property
    def scaled_band(self):
        return (self.scaled_lo, self.scaled_hi)


def _lattice_ratios(ratios) -> bool | None:
    """True when all log-ratios are rational multiples of the first.

    Rationality is tested against denominators up to 1000 at 1e-9; an empty
    ratio list (unknown generator) returns None rather than guessing.
    """
    if not ratios:
        return None
    logs = [math.log(1.0 / r) for r in ratios]
    for val in logs[1:]:
        q = val / logs[0]
        if abs(q - Fraction(q).limit_denominator(1000)) > _LATTICE_TOL:
            return False
    return True


def minkowski_link_check(model: GapTripleModel, d: float | None = None,
                         eps=None) -> MinkowskiLink:
    """Compare the Dixmier trace of mu^d against 2^d (1-d) times the content.

    The two sides estimate the same number exactly when the complement is
    Minkowski-measurable, which the ratio arithmetic predicts for
    non-lattice systems; lattice systems oscillate on both sides, so only
    the bands are reported and nothing is asserted.  ``overlap`` records
    whether the bands intersect either way.
    """
    if not isinstance(model, GapTripleModel):
        raise ValueError("the content link is a statement about gap models on the line")
    if d is None:
        d, _ = _dimension_floor(model)
    d = float(d)
    if not 0.0 < d <= 1.0:
        raise ValueError(f"d must lie in (0, 1], got {d:.6g}")
    trace = dixmier_trace_estimate(model.eigen.power(d))
    content = minkowski_content_estimate(model.gaps, d, eps=eps)
    scale = 2.0**d * (1.0 - d)
    lattice = _lattice_ratios(model.gaps.stationary_ratios)
    s_lo, s_hi = scale * content.band[0], scale * content.band[1]
    overlap = max(trace.lo, s_lo) <= min(trace.hi, s_hi)
    return MinkowskiLink(
        trace=trace,
        content=content,
        scaled_value=scale * content.value,
        scaled_lo=s_lo,
        scaled_hi=s_hi,
        d=d,
        lattice=lattice,
        asserted=bool(lattice is False and content.measurable),
        overlap=bool(overlap),
    )
