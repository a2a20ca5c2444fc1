"""Symbolic engine for the cumulant/control overlap expressions.

Enumerates the forward/reverse branch orderings of the doubled-time
contour, the admissible time-index permutations, and ordered partitions,
and assembles the order-k overlap coefficient of each measurement channel
(alpha, gamma) as an exact sum of

    (rational complex coefficient) x (filter word) x (bracket word)

terms.  All arithmetic is done in Q[i] (pairs of ``Fraction``), never in
floating point, so sign cancellations in the combinatorics are exact.

Conventions
-----------
Time arguments live on the simplex s_1 >= s_2 >= ... >= s_k.  A filter
word "ab..." attaches switching function y_a to the latest time s_1, y_b
to s_2, and so on.  A bracket word of length k-1 labels the left-nested
commutator(-)/anticommutator(+) combination of bath cumulants, read inner
to outer; the innermost bracket acts on the two latest times.

A term (c, word, w) contributes to the exponent of the effective bath
propagator written as exp(K_1 * 1 + sum_g K_g P_g):

    K contribution = c * (2 pi)^two_pi_pow * Int F_word(w_vec) Stilde^w,

or equivalently in the time domain

    K contribution = c * 2^(k-1) * Int_simplex Y_word(s_vec) G^w(s_vec),

where G^w is the bracket cumulant and Stilde^w its causally ordered
spectrum.  The real tomography-scale values are K_1 for gamma = 1,
i*K_gamma for gamma not in {1, alpha}, and K_alpha itself for the
commutator channel gamma = alpha.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

from .pauli import AXES, pauli_word, toggling_sign

_MAX_ORDER = 4


@dataclass(frozen=True)
class BranchVector:
    """Block-form branch labels (1,...,1,0,...,0) with n reverse entries."""

    k: int
    n: int

    @property
    def bits(self) -> tuple[int, ...]:
        return (1,) * self.n + (0,) * (self.k - self.n)


@dataclass(frozen=True)
class TimePermutation:
    """Slot -> simplex-index map l with the two-block ordering constraint."""

    order: tuple[int, ...]


@dataclass(frozen=True)
class OrderedPartition:
    """Ordered tuple of ascending index blocks partitioning {1..k}."""

    blocks: tuple[tuple[int, ...], ...]

    @property
    def mu(self) -> int:
        """Moment-to-cumulant weight (-1)^(|pi|-1) (|pi|-1)!."""
        q = len(self.blocks)
        sign = -1 if (q - 1) % 2 else 1
        fact = 1
        for j in range(1, q):
            fact *= j
        return sign * fact

    @property
    def has_singleton(self) -> bool:
        return any(len(b) == 1 for b in self.blocks)


@dataclass(frozen=True)
class OverlapTerm:
    """One (coefficient, filter word, bracket word) summand.

    The coefficient is (re + i*im) * (2 pi)^two_pi_pow with re, im exact
    rationals.
    """

    re: Fraction
    im: Fraction
    two_pi_pow: int
    filters: str
    brackets: str

    def coefficient(self) -> complex:
        import math
        return complex(self.re + 1j * self.im) * (2 * math.pi) ** self.two_pi_pow


@dataclass(frozen=True)
class SymbolicOverlapExpression:
    """Exact overlap expression for one (k, alpha, gamma) channel."""

    k: int
    alpha: str
    gamma: str
    terms: tuple[OverlapTerm, ...]

    def time_domain_terms(self):
        """Yield (complex coefficient, filter word, bracket word) for the
        simplex-quadrature form: coeff * Int_simplex Y_word G^w."""
        for t in self.terms:
            c = complex(t.re + 1j * t.im) * 2 ** (self.k - 1)
            yield c, t.filters, t.brackets

    def to_json(self) -> str:
        payload = {
            "k": self.k,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "terms": [
                {
                    "re_num": t.re.numerator, "re_den": t.re.denominator,
                    "im_num": t.im.numerator, "im_den": t.im.denominator,
                    "two_pi_pow": t.two_pi_pow,
                    "filters": t.filters, "brackets": t.brackets,
                }
                for t in self.terms
            ],
        }
        return json.dumps(payload, indent=2)


def enumerate_branch_orderings(k: int):
    """All (BranchVector, [TimePermutation]) pairs at order k.

    For n reverse-branch entries the admissible permutations satisfy
    l_1 > ... > l_n and l_{n+1} < ... < l_k, giving C(k, n) choices and
    2^k permutations in total.
    """
    if not 1 <= k <= _MAX_ORDER:
        raise ValueError(f"order k={k} outside supported range 1..{_MAX_ORDER}")
    out = []
    for n in range(k + 1):
        perms = []
        for l in permutations(range(1, k + 1)):
            head, tail = l[:n], l[n:]
            if all(head[i] > head[i + 1] for i in range(len(head) - 1)) and \
               all(tail[i] < tail[i + 1] for i in range(len(tail) - 1)):
                perms.append(TimePermutation(l))
        out.append((BranchVector(k, n), perms))
    return out


def ordered_partitions(k: int):
    """All ordered partitions of {1..k} into ascending blocks."""
    if not 1 <= k <= _MAX_ORDER:
        raise ValueError(f"order k={k} outside supported range 1..{_MAX_ORDER}")

    def set_partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in set_partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [sorted([first] + part[i])] + part[i + 1:]
            yield [[first]] + part

    out = []
    for part in set_partitions(list(range(1, k + 1))):
        for ordering in permutations(part):
            out.append(OrderedPartition(tuple(tuple(b) for b in ordering)))
    # Deduplicate (permutations of equal blocks cannot collide here, but the
    # generator above may emit the same ordered tuple once per identity).
    seen = set()
    unique = []
    for p in out:
        if p.blocks not in seen:
            seen.add(p.blocks)
            unique.append(p)
    return unique


def _branch_sets_for_perm(k: int, perm: TimePermutation):
    """Branch vectors j for which perm is admissible (the set J'_l)."""
    matches = []
    for bv, perms in enumerate_branch_orderings(k):
        if perm in perms:
            matches.append(bv)
    return matches


def toggling_coefficient(alpha: str, gamma: str, a_word, partition: OrderedPartition,
                         perm: TimePermutation) -> complex:
    """Projected toggling coefficient (1/2) Tr[(sum_j lambda(a, pi, j)) P_gamma].

    lambda(a, pi, j) = mu(pi) prod_{p in pi} prod_{q in p}
    (-1)^(j_q s(a_q, alpha)) P_{a_q}, with the branch sum restricted to the
    vectors j admitting the given time permutation.  Exact: the result is
    always a Gaussian rational (here a small integer multiple of 1 or i).
    """
    a_word = tuple(a_word)
    k = len(a_word)
    if sum(len(b) for b in partition.blocks) != k:
        raise ValueError("partition size inconsistent with word length")
    # Pauli product over blocks in order, ascending within each block.
    seq = [a_word[q - 1] for block in partition.blocks for q in block]
    phase, label = pauli_word(seq)
    if label != gamma:
        return 0j
    total = 0j
    for bv in _branch_sets_for_perm(k, perm):
        bits = bv.bits
        sgn = 1
        for q in range(1, k + 1):
            if bits[q - 1] and toggling_sign(a_word[q - 1], alpha) == 1:
                sgn = -sgn
        total += sgn
    return partition.mu * total * phase


# Bracket-basis expansion: coefficients of G^w in the ordered cumulant
# C(o_1, ..., o_k), where o is the slot->simplex-index word and w runs over
# the left-nested bracket words.  Only the orderings reachable from the
# two-block branch structure appear.
_BRACKET_COEF = {
    1: {(1,): {"": Fraction(1)}},
    2: {
        (1, 2): {"+": Fraction(1, 2), "-": Fraction(1, 2)},
        (2, 1): {"+": Fraction(1, 2), "-": Fraction(-1, 2)},
    },
    3: {
        (1, 2, 3): {"++": Fraction(1, 4), "+-": Fraction(1, 4),
                    "-+": Fraction(1, 4), "--": Fraction(1, 4)},
        (2, 1, 3): {"++": Fraction(1, 4), "+-": Fraction(1, 4),
                    "-+": Fraction(-1, 4), "--": Fraction(-1, 4)},
        (3, 1, 2): {"++": Fraction(1, 4), "+-": Fraction(-1, 4),
                    "-+": Fraction(1, 4), "--": Fraction(-1, 4)},
        (3, 2, 1): {"++": Fraction(1, 4), "+-": Fraction(-1, 4),
                    "-+": Fraction(-1, 4), "--": Fraction(1, 4)},
    },
}


def _qi_mul(a, b):
    """(re, im) product in Q[i]."""
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


_MINUS_I_POW = {0: (Fraction(1), Fraction(0)), 1: (Fraction(0), Fraction(-1)),
                2: (Fraction(-1), Fraction(0)), 3: (Fraction(0), Fraction(1))}


def derive_overlap_expression(k: int, alpha: str, gamma: str,
                              control_axes=("x", "z")) -> SymbolicOverlapExpression:
    """Assemble the exact order-k overlap expression for channel (alpha, gamma).

    Assumes a zero-mean bath: ordered partitions containing singleton blocks
    drop out, which for k <= 3 leaves the single-block cumulant.  The sum
    runs over branch counts n, admissible permutations l, and filter-axis
    words; each bath-operator ordering is re-expanded in the left-nested
    bracket basis and like terms are merged exactly.
    """
    if k not in (1, 2, 3):
        raise ValueError("overlap expressions implemented for k in {1, 2, 3}")
    if alpha not in AXES:
        raise ValueError("alpha must be a Pauli axis x, y or z")

    buckets: dict[tuple[str, str], tuple[Fraction, Fraction]] = {}
    global_phase = _MINUS_I_POW[k % 4]  # (-i)^k

    partitions = [p for p in ordered_partitions(k) if not p.has_singleton]
    for bv, perms in enumerate_branch_orderings(k):
        bits = bv.bits
        for perm in perms:
            l = perm.order
            for a_slots in product(control_axes, repeat=k):
                # Branch sign: each reverse-branch slot contributes
                # (-1)^(s(a, alpha)); forward slots are unity.
                sgn = 1
                for p in range(k):
                    if bits[p] and toggling_sign(a_slots[p], alpha) == 1:
                        sgn = -sgn
                for part in partitions:
                    seq = [a_slots[q - 1] for block in part.blocks for q in block]
                    phase, label = pauli_word(seq)
                    if label != gamma:
                        continue
                    if phase == 1:
                        ph = (Fraction(1), Fraction(0))
                    elif phase == -1:
                        ph = (Fraction(-1), Fraction(0))
                    elif phase == 1j:
                        ph = (Fraction(0), Fraction(1))
                    else:
                        ph = (Fraction(0), Fraction(-1))
                    mu = Fraction(part.mu * sgn)
                    base = _qi_mul(global_phase, _qi_mul((mu, Fraction(0)), ph))
                    # Filter word indexed by simplex position, latest first.
                    word = [""] * k
                    for p in range(k):
                        word[l[p] - 1] = a_slots[p]
                    word = "".join(word)
                    for brack, coef in _BRACKET_COEF[k][l].items():
                        c = _qi_mul(base, (coef, Fraction(0)))
                        key = (word, brack)
                        old = buckets.get(key, (Fraction(0), Fraction(0)))
                        buckets[key] = (old[0] + c[0], old[1] + c[1])

    # Convert simplex-quadrature coefficients to the (2 pi)^-(k-1) frequency
    # normalisation: divide by 2^(k-1).
    scale = Fraction(1, 2 ** (k - 1))
    terms = []
    for (word, brack), (re, im) in sorted(buckets.items()):
        re, im = re * scale, im * scale
        if re == 0 and im == 0:
            continue
        terms.append(OverlapTerm(re=re, im=im, two_pi_pow=-(k - 1),
                                 filters=word, brackets=brack))
    return SymbolicOverlapExpression(k=k, alpha=alpha, gamma=gamma,
                                     terms=tuple(terms))


def real_channel_value(k_value: complex, alpha: str, gamma: str,
                       tol: float = 1e-6) -> float:
    """Reduce an evaluated exponent coefficient K to the tomography scale.

    gamma = "1": K itself is real; gamma = alpha: K is the (real) commutator
    channel amplitude; otherwise K = -i * v with v real.  Raises if the
    discarded component is not small relative to `tol` * magnitude.
    """
    if gamma == "1" or gamma == alpha:
        keep, drop = k_value.real, k_value.imag
    else:
        v = 1j * k_value
        keep, drop = v.real, v.imag
    scale = max(abs(keep), 1e-300)
    if abs(drop) > tol * max(scale, 1e-12):
        raise ValueError(
            f"channel ({alpha},{gamma}): non-physical component {drop:.3e} "
            f"exceeds tolerance (kept {keep:.3e})")
    return keep
