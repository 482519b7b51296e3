"""Brute-force oracles, written independently of the library's algorithms."""

from __future__ import annotations

import itertools
from fractions import Fraction


def nth_power_residues(p: int, N: int, n: int) -> set[int]:
    """Nonzero residues mod p^N that are n-th powers of residues."""
    mod = p ** N
    return {pow(x, n, mod) for x in range(mod)} - {0}


def fraction_mod(q: Fraction, mod: int) -> int:
    return q.numerator * pow(q.denominator, -1, mod) % mod


def series_partial_sum(name: str, xs: list[int], p: int, N: int, terms: int) -> int:
    """Rational partial sum of a builtin series, reduced mod p^N."""
    mod = p ** N
    total = Fraction(0)
    if name == "geometric":
        (x,) = xs
        total = sum(Fraction(p * x) ** k for k in range(terms))
    elif name == "expOne":
        (x,) = xs
        fact = 1
        for k in range(terms):
            if k:
                fact *= k
            total += Fraction(p * x) ** k / fact
    elif name == "logOne":
        (x,) = xs
        total = sum(Fraction((-1) ** (k + 1)) * Fraction(p * x) ** k / k for k in range(1, terms))
    elif name == "bigeometric":
        x, y = xs
        total = sum(Fraction(p) ** (i + j) * Fraction(x) ** i * Fraction(y) ** j
                    for i in range(terms) for j in range(terms))
    else:
        raise KeyError(name)
    return fraction_mod(total, mod)


def closure(mul, identity, gens):
    """All products of generators, by breadth-first search."""
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mul(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def realizes_all_patterns(sets: list[set], carrier) -> bool:
    pats = {tuple(x in s for s in sets) for x in carrier}
    return len(pats) == 2 ** len(sets)


def brute_independence_dimension(sets: list[set], carrier, cap: int = 20) -> int:
    best = 0
    distinct = list({frozenset(s) for s in sets})
    for m in range(1, min(cap, len(distinct)) + 1):
        if 2 ** m > len(carrier):
            break
        if any(realizes_all_patterns(list(c), carrier) for c in itertools.combinations(distinct, m)):
            best = m
        else:
            break
    return best


def brute_vc_dimension(sets: list[set], carrier, cap: int = 20) -> int:
    best = 0
    carrier = list(carrier)
    distinct = {frozenset(s) for s in sets}
    for m in range(1, min(cap, len(carrier)) + 1):
        if 2 ** m > len(distinct):
            break
        if any(len({frozenset(s & set(pts)) for s in distinct}) == 2 ** m
               for pts in itertools.combinations(carrier, m)):
            best = m
        else:
            break
    return best


def left_cosets(mul, carrier, H: set) -> list[frozenset]:
    seen, out = set(), []
    for g in carrier:
        c = frozenset(mul(g, h) for h in H)
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out
