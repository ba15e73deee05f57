"""Self-similar dyadic tiling of the Heisenberg group.

Sixteen half-scale homotheties f_j(x) = p_j . delta_{1/2}(x) with offsets
p_j on the lattice {0,1}^2 x {0, 1/4, 1/2, 3/4} generate a fundamental tile
T with |T_i intersect T_j| = 0 for i != j.  With this digit set T admits a
sandwich description

    T = {(z, t) : z in [0,2]^2,  tau(z) <= t <= tau(z) + 1},

where tau(z) is the twist accumulated by the planar binary digits of z; the
planar digits of a point therefore drive an (a.e.) exact membership test and
exact uniform sampling, and |T| = 4.  Tile words are strings over the hex
alphabet 0-f; level-m tiles carry centers f_w(p), inner/outer radii scaled
by 2^-m and diameter 2^-m diam(T).

Dyadic Hausdorff content is computed by exact bottom-up dynamic programming
over the sparse 16-ary word tree, and Frostman measures by exact top-down
proportional mass pushdown (rational arithmetic, so the per-tile mass bound
mu(T_w) <= (diam T_w)^s holds exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import calibration as cal
from .groups import hdilate, hinv, hmul
from .qmc import halton

__all__ = [
    "ALPHABET",
    "DIGITS",
    "Tile",
    "TileSet",
    "TileMeasure",
    "MeetingTiles",
    "tau",
    "in_fundamental_tile",
    "sample_fundamental_tile",
    "tile_affine",
    "tile_center",
    "tile_map",
    "tile_unmap",
    "tile_contains",
    "build_tiling",
    "tiles_meeting_ball",
    "dyadic_content",
    "dyadic_cover",
    "frostman_measure",
    "content_comparability",
    "measure_doubling_constant",
    "mc_tile_volume",
    "read_tileset",
    "write_tileset",
    "export_tile_geometry",
]

ALPHABET = "0123456789abcdef"
DEPTH_CAP = 6
TILE_VOLUME = 4.0  # |T| = area of [0,2]^2 times unit fiber length

# digit d -> offset (d & 1, (d >> 1) & 1, (d >> 4bits...) upper two bits / 4)
DIGITS = np.array(
    [[d & 1, (d >> 1) & 1, (d >> 2) / 4.0] for d in range(16)], dtype=float)


class TilingError(ValueError):
    pass


def _gauge(p):
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y
    return (r2 * r2 + 16.0 * t * t) ** 0.25


# -- fundamental tile ---------------------------------------------------------

def tau(z, depth: int = 48) -> np.ndarray:
    """Fiber-bottom twist over planar points z in [0,2]^2 (nan outside)."""
    z = np.array(z, dtype=float)
    scalar = z.ndim == 1
    z = np.atleast_2d(z).copy()
    bad = ~((z[..., 0] >= 0) & (z[..., 0] <= 2) & (z[..., 1] >= 0) & (z[..., 1] <= 2))
    acc = np.zeros(z.shape[:-1] + (3,))
    for k in range(depth):
        d = (z >= 1.0).astype(float)
        z = 2.0 * (z - d)
        step = np.zeros_like(acc)
        step[..., 0] = d[..., 0]
        step[..., 1] = d[..., 1]
        acc = hmul(acc, hdilate(2.0 ** (-k), step))
    out = acc[..., 2]
    out[bad] = np.nan
    return out[0] if scalar else out


def in_fundamental_tile(pts, depth: int = 48, tol: float = 1e-9) -> np.ndarray:
    """Membership of points in T, exact up to digit truncation and tol."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    bottom = tau(pts[..., :2], depth=depth)
    t = pts[..., 2]
    ok = np.isfinite(bottom) & (t >= bottom - tol) & (t <= bottom + 1.0 + tol)
    return ok


def sample_fundamental_tile(n: int, seed: int = 0, qmc_start: int | None = None) -> np.ndarray:
    """Uniform samples of T: z uniform on [0,2]^2, t = tau(z) + uniform[0,1]."""
    if qmc_start is not None:
        u = halton(n, 3, start=qmc_start)
    else:
        rng = np.random.default_rng(seed)
        u = rng.random((n, 3))
    z = 2.0 * u[:, :2]
    pts = np.empty((n, 3))
    pts[:, :2] = z
    pts[:, 2] = tau(z) + u[:, 2]
    return pts


# -- words and tiles ----------------------------------------------------------

def check_word(word: str) -> str:
    if any(ch not in ALPHABET for ch in word):
        raise TilingError(f"invalid tile word {word!r}")
    return word


def word_digits(word: str) -> np.ndarray:
    return np.array([ALPHABET.index(ch) for ch in word], dtype=int)


def tile_affine(word: str) -> np.ndarray:
    """Group element g_w with f_w(x) = g_w . delta_{2^-m}(x)."""
    g = np.zeros(3)
    for k, ch in enumerate(check_word(word)):
        g = hmul(g, hdilate(2.0 ** (-k), DIGITS[ALPHABET.index(ch)]))
    return g


def tile_map(word: str, pts) -> np.ndarray:
    scale = 2.0 ** (-len(word))
    return hmul(tile_affine(word), hdilate(scale, pts))


def tile_unmap(word: str, pts) -> np.ndarray:
    scale = 2.0 ** len(word)
    return hdilate(scale, hmul(hinv(tile_affine(word)), pts))


def tile_center(word: str) -> np.ndarray:
    return tile_map(word, cal.TILE_CENTER)


def tile_contains(word: str, pts, depth: int = 48, tol: float = 1e-9) -> np.ndarray:
    return in_fundamental_tile(tile_unmap(word, pts), depth=depth, tol=tol)


@dataclass(frozen=True)
class Tile:
    """A dyadic tile: word, center and scaled radii/diameter."""

    word: str
    center: np.ndarray
    r_in: float
    r_out: float
    diam: float

    @property
    def level(self) -> int:
        return len(self.word)


def make_tile(word: str) -> Tile:
    m = len(check_word(word))
    s = 2.0 ** (-m)
    return Tile(word, tile_center(word), s * cal.R_IN, s * cal.R_OUT, s * cal.DIAM_T)


def build_tiling(level: int, check_overlap: bool | None = None,
                 overlap_samples: int = 256, max_checked_pairs: int = 200,
                 seed: int = 0) -> list:
    """All 16^level tiles, with a statistical essential-disjointness check.

    check_overlap defaults to True for level <= 2 (deeper levels check a
    seeded subsample of adjacent pairs).  A pair whose sampled overlap
    fraction exceeds 1e-2 raises, naming the pair.
    """
    if level < 0 or level > DEPTH_CAP:
        raise TilingError(f"level must lie in 0..{DEPTH_CAP}")
    words = [""]
    for _ in range(level):
        words = [w + ch for w in words for ch in ALPHABET]
    tiles = [make_tile(w) for w in words]
    if check_overlap is None:
        check_overlap = level <= 2
    if check_overlap and level >= 1:
        _check_overlaps(tiles, overlap_samples, max_checked_pairs, seed)
        _check_union(tiles, overlap_samples * 4, seed)
    return tiles


def _adjacent_pairs(tiles):
    centers = np.array([t.center for t in tiles])
    r = tiles[0].r_out
    pairs = []
    for i in range(len(tiles)):
        d = _gauge(hmul(hinv(centers[i]), centers[i + 1:]))
        for j in np.nonzero(d < 2.01 * r)[0]:
            pairs.append((i, i + 1 + int(j)))
    return pairs


def _check_overlaps(tiles, n_samples, max_pairs, seed):
    pairs = _adjacent_pairs(tiles)
    rng = np.random.default_rng(seed)
    if len(pairs) > max_pairs:
        idx = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[int(i)] for i in idx]
    base = sample_fundamental_tile(n_samples, qmc_start=1)
    for i, j in pairs:
        pts = tile_map(tiles[i].word, base)
        frac = float(np.mean(tile_contains(tiles[j].word, pts, tol=-1e-9)))
        if frac > 1e-2:
            raise TilingError(
                f"tiles {tiles[i].word!r} and {tiles[j].word!r} overlap "
                f"(sampled fraction {frac:.3g})")


def _check_union(tiles, n_samples, seed):
    level = tiles[0].level
    pts = sample_fundamental_tile(n_samples, qmc_start=2)
    # the point's own planar/vertical digits name its containing tile
    covered = np.zeros(n_samples, dtype=bool)
    words = {t.word for t in tiles}
    for k in range(n_samples):
        w = _digit_word(pts[k], level)
        covered[k] = w in words and bool(tile_contains(w, pts[k][None])[0])
    frac = float(np.mean(covered))
    if frac < 0.995:
        raise TilingError(f"level-{level} tiles cover only {frac:.3f} of T")


def _digit_word(p, level):
    """Greedy digit expansion of a point of T down to the given level."""
    q = np.array(p, dtype=float)
    word = []
    for _ in range(level):
        a = 1 if q[0] >= 1.0 else 0
        b = 1 if q[1] >= 1.0 else 0
        base = tau(np.array([q[0], q[1]]))
        u = q[2] - base
        c = min(3, max(0, int(np.floor(u * 4.0))))
        d = a + 2 * b + 4 * c
        q = tile_unmap(ALPHABET[d], q)
        word.append(ALPHABET[d])
    return "".join(word)


# -- tile sets ----------------------------------------------------------------

@dataclass(frozen=True)
class TileSet:
    """A compact set coded as a union of distinct level-m tiles."""

    level: int
    words: tuple

    def __post_init__(self):
        words = tuple(sorted(self.words))
        object.__setattr__(self, "words", words)
        if len(set(words)) != len(words):
            raise TilingError("tile words must be distinct")
        for w in words:
            check_word(w)
            if len(w) != self.level:
                raise TilingError("all words must have the set's level")
        if self.level > DEPTH_CAP:
            raise TilingError(f"level exceeds depth cap {DEPTH_CAP}")

    @classmethod
    def from_words(cls, words) -> "TileSet":
        words = tuple(words)
        level = len(words[0]) if words else 0
        return cls(level, words)

    @classmethod
    def self_similar(cls, kept_digits, depth: int) -> "TileSet":
        """All depth-m words over a subset of the 16 digits."""
        kept = sorted({int(d) for d in kept_digits})
        if not kept or any(not 0 <= d < 16 for d in kept):
            raise TilingError("kept_digits must be a nonempty subset of 0..15")
        words = [""]
        for _ in range(depth):
            words = [w + ALPHABET[d] for w in words for d in kept]
        return cls(depth, tuple(words))

    def __len__(self):
        return len(self.words)

    def centers(self) -> np.ndarray:
        return np.array([tile_center(w) for w in self.words])

    def issubset(self, other: "TileSet") -> bool:
        return set(self.words) <= set(other.words)


def read_tileset(path) -> TileSet:
    """One word per line (hex digits); a single empty line is the root tile."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln or len(lines) == 1]
    if lines == [""]:
        return TileSet(0, ("",))
    return TileSet.from_words(lines)


def write_tileset(ts: TileSet, path):
    with open(path, "w") as fh:
        for w in ts.words:
            fh.write(w + "\n")


def export_tile_geometry(level: int, path):
    """CSV rows: word, center_x, center_y, center_t, r_in, r_out."""
    tiles = build_tiling(level, check_overlap=False)
    with open(path, "w") as fh:
        fh.write("word,center_x,center_y,center_t,r_in,r_out\n")
        for t in tiles:
            cx, cy, ct = (f"{v:.12g}" for v in t.center)
            fh.write(f"{t.word},{cx},{cy},{ct},{t.r_in:.12g},{t.r_out:.12g}\n")


# -- doubling counts ----------------------------------------------------------

@dataclass(frozen=True)
class MeetingTiles:
    words: tuple
    level: int
    clamped: bool


def tiles_meeting_ball(q, r: float, max_level: int | None = None) -> MeetingTiles:
    """Level-m tiles whose outer ball meets B(q, r), m set by the radius.

    "Meets" is the sound proxy d(p_w, q) < r + R^out_w; radii above R^out
    clamp to level 0 with a flag.
    """
    q = np.asarray(q, dtype=float)
    if r <= 0:
        raise TilingError("ball radius must be positive")
    clamped = r >= cal.R_OUT
    m = 0
    if not clamped:
        while 2.0 ** (-(m + 1)) * cal.R_OUT > r:
            m += 1
    if max_level is not None:
        m = min(m, max_level)

    hits = []

    def descend(word, g, level):
        scale = 2.0 ** (-level)
        center = hmul(g, hdilate(scale, cal.TILE_CENTER))
        dist = float(_gauge(hmul(hinv(center), q)))
        if level == m:
            if dist < r + scale * cal.R_OUT:
                hits.append(word)
            return
        # descendants stay within the node's outer ball
        if dist >= r + cal.R_OUT * (scale + 2.0 ** (-m)):
            return
        for d in range(16):
            descend(word + ALPHABET[d], hmul(g, hdilate(scale, DIGITS[d])), level + 1)

    descend("", np.zeros(3), 0)
    return MeetingTiles(tuple(hits), m, clamped)


def measure_doubling_constant(levels=(1, 2, 3, 4), n_balls: int = 200,
                              seed: int = 0) -> dict:
    """Max number of same-level tiles meeting comparably sized balls."""
    rng = np.random.default_rng(seed)
    out = {}
    for lvl in levels:
        r_lo = 2.0 ** (-lvl) * cal.R_OUT * 0.5
        r_hi = 2.0 ** (-lvl) * cal.R_OUT * 0.999
        best = 0
        centers = sample_fundamental_tile(n_balls, seed=seed + lvl)
        radii = rng.uniform(r_lo, r_hi, size=n_balls)
        for k in range(n_balls):
            mt = tiles_meeting_ball(centers[k], float(radii[k]))
            best = max(best, len(mt.words))
        out[lvl] = best
    return out


# -- dyadic content: exact tree DP ---------------------------------------------

def _tree_from_words(words):
    """Sparse prefix tree: dict prefix -> sorted child prefixes."""
    children = {}
    for w in words:
        for k in range(len(w)):
            children.setdefault(w[:k], set()).add(w[: k + 1])
        children.setdefault(w, set())
    return {k: sorted(v) for k, v in children.items()}


def _level_value(level: int, s: float) -> Fraction:
    return Fraction(float((2.0 ** (-level) * cal.DIAM_T) ** s))


def dyadic_cover(K: TileSet, s: float):
    """Optimal antichain cover and its exact value, ties broken downward."""
    if s < 0:
        raise TilingError("content exponent must be nonnegative")
    if not K.words:
        return [], Fraction(0)
    tree = _tree_from_words(K.words)
    leaves = set(K.words)

    values = {}

    def value(node):
        if node in values:
            return values[node]
        term = _level_value(len(node), s)
        if node in leaves:
            values[node] = term
        else:
            child_sum = sum((value(c) for c in tree[node]), Fraction(0))
            values[node] = term if term < child_sum else child_sum
        return values[node]

    def extract(node, out):
        term = _level_value(len(node), s)
        if node in leaves or term < sum((value(c) for c in tree[node]), Fraction(0)):
            out.append(node)
        else:
            for c in tree[node]:
                extract(c, out)

    total = value("")
    cover = []
    extract("", cover)
    return cover, total


def dyadic_content(K: TileSet, s: float) -> float:
    """Depth-capped dyadic Hausdorff content of K at exponent s."""
    if not K.words:
        return 0.0
    return float(dyadic_cover(K, s)[1])


# -- Frostman measures ----------------------------------------------------------

@dataclass
class TileMeasure:
    """Nonnegative masses on the leaf tiles of one level.

    Masses are kept exactly (rationals) alongside a float view; node_mass
    exposes the induced mass of every ancestor tile.
    """

    level: int
    words: tuple
    exact_masses: list
    s: float
    masses: np.ndarray = field(init=False)
    _node_masses: dict = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.words) != len(self.exact_masses):
            raise TilingError("one mass per word required")
        self.masses = np.array([float(m) for m in self.exact_masses])
        if np.any(self.masses < 0):
            raise TilingError("masses must be nonnegative")
        node = {}
        for w, m in zip(self.words, self.exact_masses):
            for k in range(len(w) + 1):
                node[w[:k]] = node.get(w[:k], Fraction(0)) + m
        self._node_masses = node

    @property
    def total(self) -> float:
        return float(self.node_mass(""))

    def node_mass(self, word: str) -> Fraction:
        return self._node_masses.get(word, Fraction(0))

    def node_items(self):
        return self._node_masses.items()

    def centers(self) -> np.ndarray:
        return np.array([tile_center(w) for w in self.words])

    def ball_mass(self, q, r: float) -> float:
        """Mass of leaves meeting B(q, r) (outer-ball proxy; upper bound)."""
        q = np.asarray(q, dtype=float)
        centers = self.centers()
        d = _gauge(hmul(hinv(centers), q))
        r_leaf = 2.0 ** (-self.level) * cal.R_OUT
        return float(np.sum(self.masses[d < r + r_leaf]))


def frostman_measure(K: TileSet, s: float) -> TileMeasure:
    """Mass pushdown along the DP: mu(K) = content, mu(T_w) <= (diam T_w)^s.

    Both properties hold exactly: the pushdown runs in rational arithmetic
    and splits each node's mass among children proportionally to their DP
    values.
    """
    if not K.words:
        raise TilingError("cannot build a measure on the empty set")
    tree = _tree_from_words(K.words)
    leaves = set(K.words)

    values = {}

    def value(node):
        if node in values:
            return values[node]
        term = _level_value(len(node), s)
        if node in leaves:
            values[node] = term
        else:
            child_sum = sum((value(c) for c in tree[node]), Fraction(0))
            values[node] = term if term < child_sum else child_sum
        return values[node]

    root_val = value("")
    if root_val == 0:
        raise TilingError("set has zero content at this exponent")

    leaf_mass = {}

    def push(node, mass):
        if node in leaves:
            leaf_mass[node] = mass
            return
        total = sum((value(c) for c in tree[node]), Fraction(0))
        for c in tree[node]:
            push(c, mass * value(c) / total)

    push("", root_val)
    words = tuple(sorted(leaf_mass))
    return TileMeasure(K.level, words, [leaf_mass[w] for w in words], s)


def frostman_ball_check(mu: TileMeasure, n_balls: int = 1000, seed: int = 0):
    """Sampled ratios mu(B(x,r)) / (N C r^s); all should be <= 1."""
    rng = np.random.default_rng(seed)
    n_const = cal.N_DOUBLING
    c_const = (2.0 * cal.DIAM_T / cal.R_OUT) ** mu.s
    centers = mu.centers()
    ratios = np.empty(n_balls)
    for k in range(n_balls):
        base = centers[rng.integers(len(centers))]
        r = float(rng.uniform(0.3, 1.0) * cal.R_OUT * 2.0 ** (-rng.integers(0, mu.level + 2)))
        off = rng.normal(size=3)
        off = hdilate(r / max(_gauge(off), 1e-12), off)
        q = hmul(base, off * rng.uniform(0, 1.0))
        bound = n_const * c_const * r ** mu.s
        ratios[k] = mu.ball_mass(q, r) / bound
    return ratios


# -- content comparability -------------------------------------------------------

def content_comparability(K: TileSet, s: float, trials: int = 8, seed: int = 0):
    """Ratios of dyadic content to greedy ball-cover bounds.

    Returns (dyadic / ball_lower, dyadic / ball_upper) where ball_lower is
    the mass-distribution lower bound on the ball content and ball_upper is
    the best randomized greedy ball-cover sum found.
    """
    if not K.words:
        raise TilingError("comparability needs a nonempty set")
    dyadic = dyadic_content(K, s)
    if dyadic == 0.0:
        return (0.0, 0.0)
    mu = frostman_measure(K, s)
    c_const = cal.N_DOUBLING * (2.0 * cal.DIAM_T / cal.R_OUT) ** s
    ball_lower = (2.0 ** s) * mu.total / c_const

    centers = K.centers()
    r_leaf = 2.0 ** (-K.level) * cal.R_OUT
    rng = np.random.default_rng(seed)
    best = np.inf
    for trial in range(trials):
        level = trial % (K.level + 1)
        r = 2.0 ** (-level) * cal.R_OUT
        order = rng.permutation(len(centers))
        alive = np.ones(len(centers), dtype=bool)
        total = 0.0
        for idx in order:
            if not alive[idx]:
                continue
            d = _gauge(hmul(hinv(centers[idx]), centers))
            alive &= d > r
            total += (2.0 * (r + r_leaf)) ** s
        best = min(best, total)
    return (dyadic / ball_lower, dyadic / best)


# -- Monte-Carlo tile volume -----------------------------------------------------

def mc_tile_volume(word: str, n: int = 4096, seed: int = 0) -> float:
    """Volume estimate of a tile: box sampling in unmapped coordinates.

    f_w scales Lebesgue measure by 16^-m, so the estimate is the sampled
    fraction of the fundamental bounding box landing in T, rescaled.
    """
    m = len(check_word(word))
    rng = np.random.default_rng(seed)
    t_lo, t_hi = cal.TAU_MIN - 1e-6, cal.TAU_MAX + 1.0 + 1e-6
    box = rng.random((n, 3))
    box[:, 0] *= 2.0
    box[:, 1] *= 2.0
    box[:, 2] = t_lo + (t_hi - t_lo) * box[:, 2]
    vol_box = 4.0 * (t_hi - t_lo)
    frac = float(np.mean(in_fundamental_tile(box)))
    return frac * vol_box * 16.0 ** (-m)
