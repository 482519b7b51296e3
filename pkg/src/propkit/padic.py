"""Fixed-precision arithmetic in Z_p.

A :class:`PadicScalar` is a residue modulo ``p**N``.  Precision travels with
the value: binary operations truncate to the smaller of the two precisions and
never extend.  A zero residue means "indistinguishable from 0 at this
precision", so predicates that have to tell zero apart from a tiny nonzero
number raise :class:`InsufficientPrecision` instead of guessing.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

from .errors import InsufficientPrecision, PrimeMismatch, SeriesError


def vp(n: int, p: int) -> int:
    """Exponent of ``p`` in the nonzero integer ``n``."""
    if n == 0:
        raise ValueError("vp(0) is infinite")
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


@dataclass(frozen=True)
class Valuation:
    """Either ``Finite(k)`` or ``AtLeast(k)``; ``exact`` tells which."""

    value: int
    exact: bool = True

    @classmethod
    def finite(cls, k: int) -> "Valuation":
        return cls(k, True)

    @classmethod
    def at_least(cls, k: int) -> "Valuation":
        return cls(k, False)

    def __str__(self) -> str:
        return str(self.value) if self.exact else f">={self.value}"

    def floor(self) -> int:
        return self.value

    def __add__(self, other: "Valuation | int") -> "Valuation":
        if isinstance(other, int):
            return Valuation(self.value + other, self.exact)
        return Valuation(self.value + other.value, self.exact and other.exact)

    __radd__ = __add__


Finite = Valuation.finite
AtLeast = Valuation.at_least

_TEXT_RE = re.compile(r"^\s*(\d+)\^(\d+):(\d+)\s*$")


@dataclass(frozen=True)
class PadicScalar:
    prime: int
    precision: int
    residue: int

    def __post_init__(self):
        if self.prime < 2:
            raise ValueError("prime must be >= 2")
        if self.precision < 1:
            raise ValueError("precision must be >= 1")
        if not 0 <= self.residue < self.prime ** self.precision:
            raise ValueError(f"residue {self.residue} out of range for {self.prime}^{self.precision}")

    @classmethod
    def of(cls, value: int, prime: int, precision: int) -> "PadicScalar":
        return cls(prime, precision, value % prime ** precision)

    @property
    def modulus(self) -> int:
        return self.prime ** self.precision

    def truncate(self, precision: int) -> "PadicScalar":
        if precision > self.precision:
            raise InsufficientPrecision(f"cannot extend precision {self.precision} to {precision}")
        return PadicScalar(self.prime, precision, self.residue % self.prime ** precision)

    def is_zero(self) -> bool:
        return self.residue == 0

    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            if other.prime != self.prime:
                raise PrimeMismatch(f"primes {self.prime} and {other.prime} differ")
            return other
        if isinstance(other, int):
            return PadicScalar.of(other, self.prime, self.precision)
        return NotImplemented

    def __add__(self, other):
        return ring_op("add", self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ring_op("sub", self, self._coerce(other))

    def __rsub__(self, other):
        return ring_op("sub", self._coerce(other), self)

    def __mul__(self, other):
        return ring_op("mul", self, self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return PadicScalar(self.prime, self.precision, (-self.residue) % self.modulus)

    def __int__(self) -> int:
        return self.residue

    def __str__(self) -> str:
        return format_scalar(self)


def format_scalar(a: PadicScalar) -> str:
    return f"{a.prime}^{a.precision}:{a.residue}"


def parse_scalar(text: str) -> PadicScalar:
    m = _TEXT_RE.match(text)
    if not m:
        raise ValueError(f"not a p-adic scalar literal: {text!r}")
    p, n, r = (int(g) for g in m.groups())
    return PadicScalar(p, n, r)


_OPS: dict[str, Callable[[int, int], int]] = {
    "add": lambda x, y: x + y,
    "sub": lambda x, y: x - y,
    "mul": lambda x, y: x * y,
}


def ring_op(op: str, a: PadicScalar, b: PadicScalar) -> PadicScalar:
    """Ring operation in Z/p^N with N the smaller input precision."""
    if a.prime != b.prime:
        raise PrimeMismatch(f"primes {a.prime} and {b.prime} differ")
    try:
        f = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown ring op {op!r}") from None
    n = min(a.precision, b.precision)
    return PadicScalar.of(f(a.residue, b.residue), a.prime, n)


def valuation(a: PadicScalar) -> Valuation:
    if a.residue == 0:
        return AtLeast(a.precision)
    return Finite(vp(a.residue, a.prime))


def unit_part(a: PadicScalar) -> tuple[int, PadicScalar]:
    """Split a nonzero-residue scalar as ``p**k * u``; ``u`` has precision N - k."""
    v = valuation(a)
    if not v.exact:
        raise InsufficientPrecision("zero residue has no unit part")
    k = v.value
    return k, PadicScalar(a.prime, a.precision - k, (a.residue // a.prime ** k) % a.prime ** (a.precision - k))


def inverse(a: PadicScalar) -> PadicScalar:
    if a.residue % a.prime == 0:
        raise ZeroDivisionError(f"{a} is not a unit")
    return PadicScalar(a.prime, a.precision, pow(a.residue, -1, a.modulus))


def d_div(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    """Truncated division: ``a/b`` when ``|a| <= |b|`` and ``b != 0``, else 0.

    Both inputs are first truncated to the common precision N.  The quotient
    is only known to precision ``N - v(b)``, which is what the result
    carries; the zero branch keeps precision N.
    """
    if a.prime != b.prime:
        raise PrimeMismatch(f"primes {a.prime} and {b.prime} differ")
    n = min(a.precision, b.precision)
    a, b = a.truncate(n), b.truncate(n)
    if b.residue == 0:
        raise InsufficientPrecision("divisor is zero at this precision; D's branch is undecidable")
    k, ub = unit_part(b)
    va = valuation(a)
    if va.exact and va.value < k:
        return PadicScalar(a.prime, n, 0)
    p = a.prime
    m = n - k
    quotient = (a.residue // p ** k) * pow(ub.residue, -1, p ** m)
    return PadicScalar.of(quotient, p, m)


def nth_power_decision_exponent(p: int, n: int) -> int:
    """Precision of the unit part that decides whether it is an n-th power.

    Writing n = p^s * m with p not dividing m, the n-th powers of units are
    exactly the units that are n-th powers mod p^(s+1) (p odd) or mod
    2^(s+2) (p = 2), by Hensel lifting.
    """
    s = vp(n, p)
    return s + 1 if p != 2 else s + 2


@lru_cache(maxsize=None)
def _unit_nth_powers(p: int, n: int, e: int) -> frozenset[int]:
    mod = p ** e
    return frozenset(pow(x, n, mod) for x in range(1, mod) if x % p)


def is_nth_power(a: PadicScalar, n: int) -> bool:
    """Decide membership of ``a`` in the set of nonzero n-th powers of Z_p.

    The answer is returned only when it is the same for every p-adic integer
    in the residue class of ``a``; otherwise InsufficientPrecision is raised.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if a.residue == 0:
        raise InsufficientPrecision("zero residue: cannot rule out 0, which is excluded from P_n")
    k, u = unit_part(a)
    if k % n:
        return False
    p = a.prime
    e = nth_power_decision_exponent(p, n)
    known = u.precision
    if known >= e:
        return u.residue % p ** e in _unit_nth_powers(p, n, e)
    # below the decision precision a negative answer is still uniform
    if u.residue not in _unit_nth_powers(p, n, known):
        return False
    raise InsufficientPrecision(
        f"unit part known mod {p}^{known}; deciding {n}-th powers needs {p}^{e}"
    )


# --------------------------------------------------------------------------
# restricted power series


@dataclass(frozen=True)
class RestrictedSeries:
    """A member of Z_p{X} described by its coefficients and a valuation floor.

    ``coefficient(nu, p, N)`` returns the coefficient of ``X**nu`` as an
    integer correct mod ``p**N``.  ``floor(k, p)`` is a nondecreasing lower
    bound for the valuation of every coefficient of total degree k; the
    summation cutoff ``K(N)`` is the first degree whose floor reaches N.
    """

    name: str
    arity: int
    coefficient: Callable[[tuple[int, ...], int, int], int]
    floor: Callable[[int, int], int]
    available: Callable[[int], bool] = lambda p: True
    description: str = ""

    def cutoff(self, precision: int, p: int) -> int:
        k = 0
        while self.floor(k, p) < precision:
            k += 1
        return k


def _multi_indices(arity: int, below: int) -> Iterator[tuple[int, ...]]:
    for total in range(below):
        for split in itertools.combinations(range(total + arity - 1), arity - 1):
            parts, prev = [], -1
            for s in split:
                parts.append(s - prev - 1)
                prev = s
            parts.append(total + arity - 1 - prev - 1)
            yield tuple(parts)


def eval_series(F: RestrictedSeries, args: Sequence[PadicScalar], extra_terms: int = 0) -> PadicScalar:
    """Evaluate ``F`` at ``args`` mod p^N, N the smallest argument precision.

    Terms of total degree >= K(N) have valuation >= N and are dropped;
    ``extra_terms`` adds more degrees (used to check the result is stable).
    """
    if len(args) != F.arity:
        raise SeriesError(f"series {F.name} has arity {F.arity}, got {len(args)} arguments")
    p = args[0].prime
    for a in args:
        if a.prime != p:
            raise PrimeMismatch("series arguments must share a prime")
    if not F.available(p):
        raise SeriesError(f"series {F.name} is not a restricted series over Z_{p}")
    n = min(a.precision for a in args)
    mod = p ** n
    xs = [a.residue % mod for a in args]
    total = 0
    for nu in _multi_indices(F.arity, F.cutoff(n, p) + extra_terms):
        term = F.coefficient(nu, p, n) % mod
        if term == 0:
            continue
        for x, e in zip(xs, nu):
            term = term * pow(x, e, mod) % mod
        total += term
    return PadicScalar.of(total, p, n)


def _legendre(k: int, p: int) -> int:
    """v_p(k!)."""
    s, q = 0, p
    while q <= k:
        s += k // q
        q *= p
    return s


def _factorial_unit(k: int, p: int, mod: int) -> int:
    u = 1
    for i in range(2, k + 1):
        while i % p == 0:
            i //= p
        u = u * i % mod
    return u


def _geometric_coef(nu, p, n):
    return pow(p, nu[0], p ** n)


def _exp_coef(nu, p, n):
    (k,) = nu
    mod = p ** n
    e = k - _legendre(k, p)
    if e >= n:
        return 0
    return pow(p, e) * pow(_factorial_unit(k, p, mod), -1, mod) % mod


def _exp_floor(k, p):
    # v(p^k/k!) = k - v(k!) >= k - (k-1)/(p-1)
    return 0 if k == 0 else k - (k - 1) // (p - 1)


def _log_coef(nu, p, n):
    (k,) = nu
    if k == 0:
        return 0
    mod = p ** n
    j = vp(k, p)
    e = k - j
    if e >= n:
        return 0
    c = pow(p, e) * pow(k // p ** j, -1, mod) % mod
    return c if k % 2 else (-c) % mod


def _log_floor(k, p):
    if k == 0:
        return 0
    j, q = 0, p
    while q <= k:
        j += 1
        q *= p
    return k - j


def _bigeometric_coef(nu, p, n):
    return pow(p, nu[0] + nu[1], p ** n)


BUILTIN_SERIES: dict[str, RestrictedSeries] = {
    s.name: s
    for s in (
        RestrictedSeries("geometric", 1, _geometric_coef, lambda k, p: k,
                         description="sum p^k X^k = 1/(1 - pX)"),
        RestrictedSeries("expOne", 1, _exp_coef, _exp_floor, available=lambda p: p != 2,
                         description="exp(pX) = sum p^k X^k / k!  (p odd)"),
        RestrictedSeries("logOne", 1, _log_coef, _log_floor,
                         description="log(1 + pX) = sum (-1)^(k+1) p^k X^k / k"),
        RestrictedSeries("bigeometric", 2, _bigeometric_coef, lambda k, p: k,
                         description="sum p^(i+j) X^i Y^j"),
    )
}


def get_series(name: str, registry: dict[str, RestrictedSeries] | None = None) -> RestrictedSeries:
    reg = BUILTIN_SERIES if registry is None else registry
    try:
        return reg[name]
    except KeyError:
        raise SeriesError(f"unknown series {name!r}") from None
