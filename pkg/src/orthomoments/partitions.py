"""Set partitions, pair partitions, and the combinatorial sieve.

Partitions are kept in canonical form: blocks are tuples sorted internally,
and the block list is sorted by smallest element.  Enumeration uses
restricted-growth strings so nothing is materialized beyond the partitions
themselves.  The sieve (mu-star weights and the two inversion identities that
convert between unrestricted and distinct-index sums) works over any ground
set and any block-weight map, with exact arithmetic when the weights are
exact.
"""

import itertools
import math
from fractions import Fraction

from .errors import IncompleteWeightsError, InvalidParameterError, SizeLimitError

MAX_GROUND_SET = 12


def _check_ground_set(elements):
    elements = tuple(sorted(elements))
    if len(set(elements)) != len(elements):
        raise InvalidParameterError("ground set has repeated elements")
    if len(elements) > MAX_GROUND_SET:
        raise SizeLimitError(
            f"ground set of size {len(elements)} exceeds cap {MAX_GROUND_SET}"
        )
    return elements


def canonical(blocks):
    """Canonical form: each block sorted, blocks ordered by smallest element."""
    blk = tuple(sorted(tuple(sorted(b)) for b in blocks))
    seen = [x for b in blk for x in b]
    if len(seen) != len(set(seen)):
        raise InvalidParameterError("blocks overlap")
    if any(len(b) == 0 for b in blk):
        raise InvalidParameterError("empty block")
    return blk


def partitions(elements):
    """Yield all set partitions of `elements` in canonical form.

    Uses restricted-growth strings: a[0] = 0 and a[i] <= 1 + max(a[:i]).
    """
    elements = _check_ground_set(elements)
    n = len(elements)
    if n == 0:
        yield ()
        return
    a = [0] * n
    while True:
        nblocks = max(a) + 1
        blocks = [[] for _ in range(nblocks)]
        for x, j in zip(elements, a):
            blocks[j].append(x)
        yield tuple(tuple(b) for b in blocks)
        # next restricted-growth string
        i = n - 1
        while i > 0:
            if a[i] <= max(a[:i]):
                a[i] += 1
                for j in range(i + 1, n):
                    a[j] = 0
                break
            i -= 1
        else:
            return


def pair_partitions(elements):
    """Yield all perfect matchings of `elements` (canonical form).

    An empty ground set has exactly one pair partition (the empty one); an
    odd-sized ground set has none.
    """
    elements = _check_ground_set(elements)

    def rec(rest):
        if not rest:
            yield ()
            return
        first = rest[0]
        for i in range(1, len(rest)):
            pair = (first, rest[i])
            remaining = rest[1:i] + rest[i + 1 :]
            for tail in rec(remaining):
                yield (pair,) + tail

    if len(elements) % 2 == 1:
        return
    yield from rec(elements)


def bell_number(n):
    """Number of set partitions of an n-element set."""
    if n < 0:
        raise InvalidParameterError("n must be nonnegative")
    # Bell triangle
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
    return row[0]


def double_factorial_odd(n):
    """(n-1)!! for even n: the number of pair partitions of n elements."""
    if n % 2 == 1:
        return 0
    return math.prod(range(1, n, 2)) if n > 0 else 1


def mu_star(blocks):
    """The sieve weight prod_j (-1)^(|G_j|-1) (|G_j|-1)! of a partition."""
    out = 1
    for b in blocks:
        k = len(b)
        out *= (-1) ** (k - 1) * math.factorial(k - 1)
    return out


def refines(p, q):
    """True if every block of p is contained in some block of q."""
    lookup = {}
    for j, b in enumerate(q):
        for x in b:
            lookup[x] = j
    for b in p:
        js = {lookup[x] for x in b}
        if len(js) != 1:
            return False
    return True


def _block_weight(weights, block):
    block = tuple(sorted(block))
    try:
        return weights[block]
    except KeyError:
        raise IncompleteWeightsError(
            f"no weight supplied for block {block}"
        ) from None


def sieve_transforms(weights, elements):
    """Evaluate both sides of the two sieve identities on a weight map.

    `weights` maps each canonical block (tuple of sorted elements) of the
    ground set to the value of the single unrestricted sum attached to that
    block; products over blocks model nested unrestricted sums that factor.
    Writing C(P) = prod_{B in P} w(B) for the "collapsed" value of a
    partition and R(P) for its distinct-index ("sharp") value, the identities
    are

        C(finest) = sum_{P} R(P)                 (unrestricted = sum of sharps)
        R(finest) = sum_{P} mu_star(P) * C(P)    (sharp by inclusion-exclusion)

    Returns ((lhs1, rhs1), (lhs2, rhs2)) where the first pair is the first
    identity evaluated directly (lhs1 = C of the finest partition, rhs1 = the
    sum of R(P) with every R obtained from the mu-star formula), and the
    second pair gives R(finest) via the mu-star formula (lhs2) and via
    recursive inversion of the first identity (rhs2).  Exact inputs give
    exact outputs.
    """
    elements = _check_ground_set(elements)
    all_parts = list(partitions(elements))

    def collapsed(p):
        out = 1
        for b in p:
            out = out * _block_weight(weights, b)
        return out

    def sharp_mu(p):
        """R(P) = sum over partitions Q of the blocks of P, weighted."""
        total = 0
        for q in partitions(range(len(p))):
            merged = tuple(
                tuple(sorted(x for j in grp for x in p[j])) for grp in q
            )
            total += mu_star(q) * collapsed(merged)
        return total

    finest = tuple((x,) for x in elements)

    lhs1 = collapsed(finest)
    rhs1 = sum(sharp_mu(p) for p in all_parts)

    lhs2 = sharp_mu(finest)

    # invert identity 1: R(P) = C(P) - sum_{Q strictly coarser... } no ---
    # recursion downward: C(P) = sum_{Q refined by P? } ...  For the finest
    # partition: C(finest) = sum_P R(P), and each coarser R satisfies the
    # same identity on its own collapsed ground set, so compute R
    # recursively from C by Moebius recursion over the refinement order.
    sharp_rec = {}
    by_nblocks = sorted(all_parts, key=len)
    for p in by_nblocks:
        # C(p) = sum over partitions q coarser-or-equal than ... the sharp
        # decomposition of the product of unrestricted sums over p's blocks:
        # C(p) = sum_{q: p refines q} R(q)
        total = collapsed(p)
        for q in all_parts:
            if q != p and refines(p, q):
                total -= sharp_rec[q]
        sharp_rec[p] = total
    rhs2 = sharp_rec[finest]

    return (lhs1, rhs1), (lhs2, rhs2)


def pair_partition_product(weights, elements):
    """sum over pair partitions of prod of pair weights (exact if weights are).

    `weights` maps each sorted pair to a value; the empty ground set gives 1.
    """
    elements = _check_ground_set(elements)
    total = 0
    count = 0
    for p in pair_partitions(elements):
        term = 1
        for pair in p:
            term = term * _block_weight(weights, pair)
        total += term
        count += 1
    if count == 0:
        return 0
    return total


def splittings_with_pair(elements):
    """Yield (K0, Kp, Ks): disjoint splits with |Kp| = 2 covering `elements`.

    Kp is the distinguished pair, Ks the remainder assigned to it, K0 the
    rest; K0 is returned as a tuple, Kp and Ks as tuples.  This is the index
    set of the two-point correction terms: every way to choose an unordered
    pair and then distribute the remaining indices between the pair's cluster
    and the pair-partition factor.
    """
    elements = _check_ground_set(elements)
    for kp in itertools.combinations(elements, 2):
        rest = tuple(x for x in elements if x not in kp)
        for r in range(len(rest) + 1):
            for ks in itertools.combinations(rest, r):
                k0 = tuple(x for x in rest if x not in ks)
                yield k0, kp, ks


def splittings_up_to(elements, max_pair_size):
    """Yield (K0, Kp, Ks) with |Kp| <= max_pair_size (Kp possibly empty)."""
    elements = _check_ground_set(elements)
    for size in range(0, max_pair_size + 1):
        for kp in itertools.combinations(elements, size):
            rest = tuple(x for x in elements if x not in kp)
            for r in range(len(rest) + 1):
                for ks in itertools.combinations(rest, r):
                    k0 = tuple(x for x in rest if x not in ks)
                    yield k0, kp, ks


def four_way_splits(elements):
    """Yield (G1, G2, G3, G4): ordered 4-way disjoint covers of `elements`."""
    elements = _check_ground_set(elements)
    n = len(elements)
    for assignment in itertools.product(range(4), repeat=n):
        groups = ([], [], [], [])
        for x, j in zip(elements, assignment):
            groups[j].append(x)
        yield tuple(tuple(g) for g in groups)


def exact_fraction(x):
    """Fraction view of an int/Fraction weight (helper for exact tests)."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x)
