"""Permutations and the structured permutation families used as expander data.

A family is an ordered list of D permutations of {0..N-1} plus a flag saying
whether the list is closed under inversion in the paired layout
member[s + D/2] = member[s]^-1 (or trivially, because every member is its own
inverse).  That closure is what makes the averaging operators self-adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tpelab import serialize

CONSTRUCTION_TAGS = ("random-hermitian", "matching", "doubled", "cayley", "explicit")


@dataclass(frozen=True, eq=False)
class Permutation:
    """A permutation of {0..N-1}, stored as the image array: i -> images[i]."""

    images: np.ndarray

    def __post_init__(self):
        imgs = np.asarray(self.images, dtype=np.int64)
        object.__setattr__(self, "images", imgs)
        if imgs.ndim != 1 or imgs.size == 0:
            raise ValueError("invalid size: images must be a nonempty 1-d array")
        n = imgs.size
        if imgs.min() < 0 or imgs.max() >= n or np.bincount(imgs, minlength=n).max() > 1:
            raise ValueError("images is not a bijection on {0..N-1}")

    @property
    def N(self) -> int:
        return int(self.images.size)

    def __call__(self, i: int) -> int:
        return int(self.images[i])

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.images, other.images)


def identity_permutation(n: int) -> Permutation:
    return Permutation(np.arange(n))


def random_permutation(n: int, stream: np.random.Generator) -> Permutation:
    """Uniform permutation of {0..n-1} via an explicit Fisher-Yates shuffle.

    The swap indices come from a single vectorized draw on the given stream,
    so the output is bit-reproducible for a fixed stream state.
    """
    if n < 1:
        raise ValueError("invalid size: n must be >= 1")
    images = np.arange(n, dtype=np.int64)
    if n > 1:
        # draws[t] is uniform on [0, n - t); used as the partner for slot n-1-t
        draws = stream.integers(0, np.arange(n, 1, -1))
        for t in range(n - 1):
            i = n - 1 - t
            j = int(draws[t])
            images[i], images[j] = images[j], images[i]
    return Permutation(images)


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Composition acting b first: result(i) = a(b(i))."""
    if a.N != b.N:
        raise ValueError(f"size mismatch: {a.N} vs {b.N}")
    return Permutation(a.images[b.images])


def inverse(p: Permutation) -> Permutation:
    inv = np.empty(p.N, dtype=np.int64)
    inv[p.images] = np.arange(p.N)
    return Permutation(inv)


def cycle_count(p: Permutation) -> int:
    """Number of disjoint cycles, fixed points included."""
    seen = np.zeros(p.N, dtype=bool)
    count = 0
    for start in range(p.N):
        if seen[start]:
            continue
        count += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = int(p.images[j])
    return count


def _is_involution(p: Permutation) -> bool:
    return bool(np.array_equal(p.images[p.images], np.arange(p.N)))


@dataclass(frozen=True, eq=False)
class PermutationFamily:
    """Ordered list of D same-size permutations with its inversion-closure flag."""

    members: tuple
    hermitian: bool
    seed: int
    construction_tag: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("family must have at least one member")
        if self.construction_tag not in CONSTRUCTION_TAGS:
            raise ValueError(f"unknown construction tag {self.construction_tag!r}")
        n = self.members[0].N
        if any(m.N != n for m in self.members):
            raise ValueError("all members must share the same ground-set size")
        if self.hermitian:
            self._check_hermitian_layout()
        if self.construction_tag == "matching":
            for m in self.members:
                if not _is_involution(m) or np.any(m.images == np.arange(n)):
                    raise ValueError("matching members must be fixed-point-free involutions")

    def _check_hermitian_layout(self):
        # Closure under inversion: either the paired layout with even D, or
        # every member its own inverse (matchings, where any D is allowed).
        if all(_is_involution(m) for m in self.members):
            return
        d = len(self.members)
        if d % 2 != 0:
            raise ValueError("hermitian family needs even D or all-involution members")
        for s in range(d // 2):
            a, b = self.members[s], self.members[s + d // 2]
            if not np.array_equal(a.images[b.images], np.arange(a.N)):
                raise ValueError(f"hermitian pairing broken at member {s}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PermutationFamily)
            and self.hermitian == other.hermitian
            and self.seed == other.seed
            and self.construction_tag == other.construction_tag
            and len(self.members) == len(other.members)
            and all(a == b for a, b in zip(self.members, other.members))
        )

    @property
    def N(self) -> int:
        return self.members[0].N

    @property
    def D(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict:
        return {
            "type": "classical",
            "N": self.N,
            "D": self.D,
            "hermitian": self.hermitian,
            "seed": int(self.seed),
            "construction": self.construction_tag,
            "perms": [[int(i) for i in m.images] for m in self.members],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PermutationFamily":
        if d.get("type") != "classical":
            raise ValueError(f"not a classical family file (type={d.get('type')!r})")
        members = tuple(Permutation(np.asarray(imgs)) for imgs in d["perms"])
        fam = cls(members, bool(d["hermitian"]), int(d["seed"]), d["construction"])
        if fam.N != int(d["N"]) or fam.D != int(d["D"]):
            raise ValueError("family file N/D fields disagree with perm data")
        return fam


def save_family(fam: PermutationFamily, path) -> None:
    serialize.dump_path(fam.to_dict(), path)


def load_family(path) -> PermutationFamily:
    return PermutationFamily.from_dict(serialize.load_path(path))


def hermitian_family(n: int, d: int, stream: np.random.Generator) -> PermutationFamily:
    """D/2 i.i.d. uniform permutations followed by their inverses."""
    if d % 2 != 0 or d < 4:
        raise ValueError("invalid degree: D must be even and >= 4")
    if n < 2:
        raise ValueError("invalid size: N must be >= 2")
    first = [random_permutation(n, stream) for _ in range(d // 2)]
    members = first + [inverse(p) for p in first]
    return PermutationFamily(tuple(members), True, _stream_seed(stream), "random-hermitian")


def matching_family(n: int, d: int, stream: np.random.Generator) -> PermutationFamily:
    """D uniform perfect matchings (fixed-point-free involutions), each self-inverse."""
    if n % 2 != 0:
        raise ValueError("invalid size: N must be even for a perfect matching")
    members = tuple(_random_matching(n, stream) for _ in range(d))
    return PermutationFamily(members, True, _stream_seed(stream), "matching")


def _random_matching(n: int, stream: np.random.Generator) -> Permutation:
    # Pair a uniform unmatched point with a uniform other unmatched point;
    # by symmetry this is the uniform distribution on perfect matchings.
    images = np.full(n, -1, dtype=np.int64)
    unmatched = list(range(n))
    while unmatched:
        a = unmatched.pop(int(stream.integers(len(unmatched))))
        b = unmatched.pop(int(stream.integers(len(unmatched))))
        images[a] = b
        images[b] = a
    return Permutation(images)


def doubled_counterexample(base: PermutationFamily) -> PermutationFamily:
    """Block-double every member on 2N points and append the copy swap i <-> i+N.

    The result preserves more structure than equality patterns alone (which
    copy a point sits in is also invariant), so its 2-copy operator keeps
    extra unit eigenvalues no matter how good the base family is.  The member
    list is not inversion-paired, so the family is marked non-hermitian.
    """
    n = base.N
    shifted = np.arange(2 * n, dtype=np.int64)
    members = []
    for m in base.members:
        members.append(Permutation(np.concatenate([m.images, m.images + n])))
    swap = np.concatenate([shifted[n:], shifted[:n]])
    members.append(Permutation(swap))
    return PermutationFamily(tuple(members), False, base.seed, "doubled")


def cyclic_group_table(n: int) -> np.ndarray:
    """Multiplication table of Z_n: table[a, b] = (a + b) mod n."""
    idx = np.arange(n)
    return (idx[:, None] + idx[None, :]) % n


def cayley_family(group_table: np.ndarray, generators) -> PermutationFamily:
    """Left-multiplication permutations g -> g_s * g for the listed generators.

    The table is validated as a group by brute force (order <= 64): closure,
    identity, inverses, associativity.  The error names the failed axiom.
    """
    table = np.asarray(group_table, dtype=np.int64)
    n = table.shape[0]
    if table.shape != (n, n) or n == 0:
        raise ValueError("group table must be a nonempty square matrix")
    if n > 64:
        raise ValueError("group validation is brute force and capped at order 64")
    if table.min() < 0 or table.max() >= n:
        raise ValueError("invalid group: closure fails (entries outside {0..N-1})")
    # identity: some e with e*x = x*e = x for all x
    idx = np.arange(n)
    ident = [e for e in range(n) if np.array_equal(table[e], idx) and np.array_equal(table[:, e], idx)]
    if not ident:
        raise ValueError("invalid group: identity fails (no two-sided identity)")
    e = ident[0]
    # inverses: every row and column hits e
    if not (np.all((table == e).any(axis=1)) and np.all((table == e).any(axis=0))):
        raise ValueError("invalid group: inverse fails (some element has none)")
    # associativity: table[table[a,b],c] == table[a,table[b,c]] for all triples
    if not np.array_equal(table[table], table[:, table]):
        raise ValueError("invalid group: associativity fails")

    gens = [int(g) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    if any(g < 0 or g >= n for g in gens):
        raise ValueError("generator index out of range")
    members = tuple(Permutation(table[g]) for g in gens)

    # inverse of g: the h with g*h = e
    inv_of = {g: int(np.nonzero(table[g] == e)[0][0]) for g in gens}
    d = len(gens)
    paired = d % 2 == 0 and all(gens[s + d // 2] == inv_of[gens[s]] for s in range(d // 2))
    self_inv = all(inv_of[g] == g for g in gens)
    return PermutationFamily(members, paired or self_inv, 0, "cayley")


def _stream_seed(stream: np.random.Generator) -> int:
    # Families record the seed of the root stream when the caller passes one
    # created by tpelab.rng.stream; otherwise 0 is recorded.
    entropy = getattr(getattr(stream.bit_generator, "seed_seq", None), "entropy", None)
    if isinstance(entropy, int) and entropy < 2**63:
        return entropy
    return 0
