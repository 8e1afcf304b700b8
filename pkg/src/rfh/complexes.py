"""Graded chain complexes over GF(2): sphere Morse complex, its projective
quotient, and the doubly-infinite ladder of orbit manifolds truncated to a
finite window.

Conventions.  Critical manifolds are spheres S^{2n-1}, one for each cover
number k (k = 0 are the constant loops); on each sits a pair of Morse
critical points y_l, z_l = -y_l per degree l = 0..2n-1 of the height-like
function sum_i i x_i^2.  A generator (k, l) carries degree l + 2nk and the
action label -quantum * k.  The interior differential is the sphere Morse
differential d y_l = y_{l-1} + z_{l-1} (= d z_l); the rung differential
sends the degree-0 pair of level k+1 to the top pair of level k with
coefficient 1 on both branches.  The rung coefficient is exposed as a
toggle: setting it to 0 breaks the vanishing of the truncated homology in
interior degrees, which is the consistency argument that forces it to 1.

Quotienting by the free involution y <-> z produces one generator per
degree with identically zero differential, so every degree of the quotient
has GF(2) homology rank one.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .gf2 import gf2_rank

__all__ = [
    "Generator",
    "GradedComplexGF2",
    "HomologyTable",
    "sphere_morse_complex",
    "morse_index_oracle",
    "quotient_by_involution",
    "rabinowitz_ladder",
    "gf2_homology",
    "action_spectrum",
    "write_complex_csv",
    "write_homology_csv",
]

DEFAULT_QUANTUM = 2.0 * np.pi


@dataclass(frozen=True)
class Generator:
    """A labelled generator: cover number k, Morse degree l, branch."""

    k: int
    l: int
    branch: str    # "y" | "z" | "xi"
    n: int
    quantum: float = DEFAULT_QUANTUM

    def __post_init__(self):
        if self.branch not in ("y", "z", "xi"):
            raise ValueError(f"unknown branch {self.branch!r}")
        if not 0 <= self.l <= 2 * self.n - 1:
            raise ValueError(
                f"Morse degree l = {self.l} outside 0..{2 * self.n - 1}")

    @property
    def degree(self):
        return self.l + 2 * self.n * self.k

    @property
    def action_label(self):
        return -self.quantum * self.k

    @property
    def name(self):
        return f"{self.branch}[k={self.k},l={self.l}]"

    def __repr__(self):
        return self.name


class GradedComplexGF2:
    """Finite collection of graded generators with a GF(2) differential.

    The differential is given as a dict generator -> iterable of target
    generators (mod-2 coefficients implied by multiplicity); it must
    lower the degree by exactly one and square to zero, both checked at
    construction.
    """

    def __init__(self, generators, differential, window=None):
        self.generators = tuple(generators)
        if len(set(self.generators)) != len(self.generators):
            raise ValueError("duplicate generators")
        self.index = {g: i for i, g in enumerate(self.generators)}
        size = len(self.generators)
        mat = np.zeros((size, size), dtype=np.uint8)
        for src, targets in differential.items():
            col = self.index[src]
            for tgt in targets:
                row = self.index[tgt]
                if tgt.degree != src.degree - 1:
                    raise ValueError(
                        f"differential {src} -> {tgt} changes degree by "
                        f"{tgt.degree - src.degree}, not -1")
                mat[row, col] ^= 1
        self.matrix = mat
        self.window = window
        sq = (mat.astype(np.int64) @ mat.astype(np.int64)) % 2
        if np.any(sq):
            raise ValueError("differential does not square to zero")

    @property
    def quantum(self):
        return self.generators[0].quantum if self.generators \
            else DEFAULT_QUANTUM

    def degrees(self):
        return sorted({g.degree for g in self.generators})

    def generators_in_degree(self, degree):
        return [g for g in self.generators if g.degree == degree]

    def boundary_block(self, degree):
        """Matrix block of the differential out of the given degree."""
        cols = [self.index[g] for g in self.generators_in_degree(degree)]
        rows = [self.index[g]
                for g in self.generators_in_degree(degree - 1)]
        if not cols or not rows:
            return np.zeros((len(rows), len(cols)), dtype=np.uint8)
        return self.matrix[np.ix_(rows, cols)]

    def differential_of(self, gen):
        col = self.matrix[:, self.index[gen]]
        return [self.generators[i] for i in np.nonzero(col)[0]]

    def edge_list(self):
        """(source, target) pairs of the nonzero differential entries."""
        rows, cols = np.nonzero(self.matrix)
        return [(self.generators[c], self.generators[r])
                for r, c in sorted(zip(rows, cols),
                                   key=lambda rc: (rc[1], rc[0]))]

    def __len__(self):
        return len(self.generators)


@dataclass
class HomologyTable:
    """GF(2) homology rank per degree plus window bookkeeping."""

    ranks: dict
    boundary_degrees: frozenset
    window: object = None

    def rank(self, degree):
        return self.ranks.get(degree, 0)

    def interior_degrees(self):
        return [d for d in sorted(self.ranks)
                if d not in self.boundary_degrees]


# ----------------------------------------------------------------------
# constructions
# ----------------------------------------------------------------------

def sphere_morse_complex(n, quantum=DEFAULT_QUANTUM):
    """Morse complex of the height-like function on S^{2n-1}.

    Antipodal critical pairs y_l, z_l in degrees l = 0..2n-1 with
    differential d y_l = y_{l-1} + z_{l-1} = d z_l.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gens = []
    for l in range(2 * n):
        gens.append(Generator(0, l, "y", n, quantum))
        gens.append(Generator(0, l, "z", n, quantum))
    diff = {}
    for l in range(1, 2 * n):
        targets = [Generator(0, l - 1, "y", n, quantum),
                   Generator(0, l - 1, "z", n, quantum)]
        diff[Generator(0, l, "y", n, quantum)] = targets
        diff[Generator(0, l, "z", n, quantum)] = list(targets)
    return GradedComplexGF2(gens, diff)


def morse_index_oracle(n, i):
    """Morse index of the critical pair +-e_i of f(x) = sum_j j x_j^2 on
    the sphere S^{2n-1}, computed numerically from the constrained
    Hessian (second variation on the tangent space at e_i).

    Returns the number of negative eigenvalues; the closed form is i - 1.
    """
    dim = 2 * n
    if not 1 <= i <= dim:
        raise ValueError(f"i must be in 1..{dim}")
    point = np.zeros(dim)
    point[i - 1] = 1.0
    hess = 2.0 * np.diag(np.arange(1, dim + 1, dtype=float))
    multiplier = float(point @ hess @ point) / 2.0  # lambda with |x|^2 = 1
    # orthonormal tangent basis at the critical point via QR completion
    full = np.eye(dim)
    full[:, [0, i - 1]] = full[:, [i - 1, 0]]
    q, _ = np.linalg.qr(full)
    tangent = q[:, 1:]
    reduced = tangent.T @ (hess - 2.0 * multiplier * np.eye(dim)) @ tangent
    eigvals = np.linalg.eigvalsh(reduced)
    return int(np.sum(eigvals < -1e-10))


def rabinowitz_ladder(n, window_k, rung=1, quantum=DEFAULT_QUANTUM):
    """Truncated ladder complex of orbit manifolds, k in [-K, K].

    Each level carries the sphere Morse pair per degree; levels are
    joined by the rung differential  d y_0^{k+1} = rung * (y_{2n-1}^k +
    z_{2n-1}^k)  = d z_0^{k+1}.  `rung` is 1 (the consistent value) or 0
    (the experimental toggle that creates interior homology).
    """
    if window_k < 1:
        raise ValueError("window half-width must be >= 1")
    if rung not in (0, 1):
        raise ValueError("rung coefficient is a GF(2) toggle: 0 or 1")
    gens = []
    diff = {}
    for k in range(-window_k, window_k + 1):
        for l in range(2 * n):
            for br in ("y", "z"):
                gens.append(Generator(k, l, br, n, quantum))
    for k in range(-window_k, window_k + 1):
        for l in range(1, 2 * n):
            targets = [Generator(k, l - 1, "y", n, quantum),
                       Generator(k, l - 1, "z", n, quantum)]
            diff[Generator(k, l, "y", n, quantum)] = targets
            diff[Generator(k, l, "z", n, quantum)] = list(targets)
        if rung and k - 1 >= -window_k:
            targets = [Generator(k - 1, 2 * n - 1, "y", n, quantum),
                       Generator(k - 1, 2 * n - 1, "z", n, quantum)]
            diff[Generator(k, 0, "y", n, quantum)] = targets
            diff[Generator(k, 0, "z", n, quantum)] = list(targets)
    return GradedComplexGF2(gens, diff, window=window_k)


def quotient_by_involution(cx):
    """Quotient a complex by the free involution swapping the y/z branches.

    Requires every generator to come in a y/z pair (the involution is
    then free) and the differential to commute with the swap; the induced
    differential on classes xi = [y] = [z] is computed mod 2, where the
    paired images cancel.
    """
    if any(g.branch == "xi" for g in cx.generators):
        raise ValueError("complex already quotiented: involution would fix "
                         "xi generators")

    def swap(gen):
        return Generator(gen.k, gen.l, "z" if gen.branch == "y" else "y",
                         gen.n, gen.quantum)

    gens = set(cx.generators)
    if any(swap(g) not in gens for g in cx.generators):
        raise ValueError("y/z pairing is not a bijection on generators")
    # chain-map check: d(swap g) == swap(d g)
    for g in cx.generators:
        lhs = sorted(map(repr, cx.differential_of(swap(g))))
        rhs = sorted(repr(swap(t)) for t in cx.differential_of(g))
        if lhs != rhs:
            raise ValueError(
                f"differential does not commute with the involution at {g}")

    pairs = sorted({(g.k, g.l) for g in cx.generators})
    quantum = cx.quantum
    n = cx.generators[0].n
    qgens = {pair: Generator(pair[0], pair[1], "xi", n, quantum)
             for pair in pairs}
    diff = {}
    for (k, l), xi in qgens.items():
        counts = {}
        for tgt in cx.differential_of(Generator(k, l, "y", n, quantum)):
            key = (tgt.k, tgt.l)
            counts[key] = counts.get(key, 0) + 1
        targets = [qgens[key] for key, c in counts.items() if c % 2]
        if targets:
            diff[xi] = targets
    return GradedComplexGF2(list(qgens.values()), diff, window=cx.window)


# ----------------------------------------------------------------------
# homology and spectrum
# ----------------------------------------------------------------------

def gf2_homology(cx):
    """Per-degree GF(2) homology ranks via Gaussian elimination.

    rank_d = dim ker(d_d) - dim im(d_{d+1}).  For windowed complexes the
    extremal degrees are flagged: truncation removes the rungs that would
    otherwise kill their homology.
    """
    ranks = {}
    degrees = cx.degrees()
    for d in degrees:
        gens_d = len(cx.generators_in_degree(d))
        rank_out = gf2_rank(cx.boundary_block(d))
        rank_in = gf2_rank(cx.boundary_block(d + 1))
        ranks[d] = gens_d - rank_out - rank_in
    boundary = frozenset()
    if cx.window is not None and degrees:
        boundary = frozenset({min(degrees), max(degrees)})
    return HomologyTable(ranks, boundary, window=cx.window)


def action_spectrum(n, window_k, quantum=DEFAULT_QUANTUM):
    """Action labels carried by the generator levels, -quantum * k for
    k in [-K, K], one value per level (degeneracy across l collapsed).

    The default quantum is 2 pi; the quantity derived from this package's
    own conventions is pi per cover (see the solver seeds), so callers
    comparing against numerics pass quantum explicitly.
    """
    if window_k < 0:
        raise ValueError("window half-width must be >= 0")
    del n  # levels do not depend on the sphere dimension
    ks = np.arange(-window_k, window_k + 1)
    return np.sort(-quantum * ks)


# ----------------------------------------------------------------------
# CSV serialisation
# ----------------------------------------------------------------------

def write_complex_csv(cx, generator_path, edge_path):
    """Write generator table and differential edge list."""
    with open(generator_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "k", "l", "branch", "degree", "action_label"])
        for g in cx.generators:
            writer.writerow([g.name, g.k, g.l, g.branch, g.degree,
                             repr(g.action_label)])
    with open(edge_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target"])
        for src, tgt in cx.edge_list():
            writer.writerow([src.name, tgt.name])


def write_homology_csv(table, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "rank", "boundary_degree"])
        for d in sorted(table.ranks):
            writer.writerow([d, table.ranks[d],
                             int(d in table.boundary_degrees)])
