"""Uniformly powerful pro-p groups at finite precision.

A model at working precision N represents the finite group G/P_{N+1}:

* ``abelian``  -- (Z_p^d, +), elements are coordinate tuples mod p^N;
* ``gl``       -- I + p^e M_d(Z_p), elements are d x d matrices mod p^(N+e);
* ``sl2``      -- the level-p^e congruence kernel of SL_2(Z_p).

Here e = 1 for odd p and e = 2 for p = 2.  Coordinates of the second kind
``x(lam) = x_1^lam_1 ... x_d^lam_d`` are computed digit by digit: at level n
the residual element lies in P_n and its congruence layer, solved against the
layer images of ``x_i^(p^(n-1))``, gives the next p-adic digit of every
coordinate.
"""

from __future__ import annotations

import random
import re
from functools import cached_property
from typing import Iterable, Sequence

from .errors import LayerSolveFailure, RepresentationError
from .linalg import LinearSolver, rank
from .padic import AtLeast, Finite, PadicScalar, Valuation, valuation

Element = tuple  # abelian: tuple[int, ...]; matrix kinds: tuple[tuple[int, ...], ...]

KIND_ALIASES = {
    "abelian": "abelian",
    "gl": "gl",
    "congruencegl": "gl",
    "sl2": "sl2",
    "congruencesl2": "sl2",
}


def _matmul(a, b, mod):
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) % mod for col in bt) for row in a)


def _matinv(a, mod):
    n = len(a)
    if n == 1:
        return ((pow(a[0][0], -1, mod),),)
    if n == 2:
        (w, x), (y, z) = a
        di = pow((w * z - x * y) % mod, -1, mod)
        return ((z * di % mod, -x * di % mod), (-y * di % mod, w * di % mod))
    # Gauss-Jordan; the input is congruent to I mod p so diagonal pivots are units
    m = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(a)]
    for c in range(n):
        inv = pow(m[c][c], -1, mod)
        m[c] = [v * inv % mod for v in m[c]]
        for i in range(n):
            if i != c and m[i][c]:
                f = m[i][c]
                m[i] = [(v - f * w) % mod for v, w in zip(m[i], m[c])]
    return tuple(tuple(r[n:]) for r in m)


def _vp_capped(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    k = 0
    while x % p == 0 and k < cap:
        x //= p
        k += 1
    return k


class UniformGroupModel:
    """A builtin uniform pro-p group with an ordered basis, at precision N."""

    def __init__(self, kind: str, p: int, d: int | None = None, precision: int = 6,
                 basis: Sequence[Element] | None = None):
        try:
            self.kind = KIND_ALIASES[kind.lower()]
        except KeyError:
            raise ValueError(f"unknown group kind {kind!r}") from None
        if p < 2 or any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        if precision < 1:
            raise ValueError("precision must be >= 1")
        self.p = p
        self.eps = 1 if p % 2 else 2
        self.precision = precision
        if self.kind == "sl2":
            if d not in (None, 2):
                raise ValueError("sl2 models have matrix size 2")
            self.size = 2
            self.dim = 3
        else:
            if d is None or d < 1:
                raise ValueError(f"{self.kind} models need a dimension d >= 1")
            self.size = d
            self.dim = d if self.kind == "abelian" else d * d
        self.is_matrix = self.kind != "abelian"
        self.mod = p ** (precision + self.eps) if self.is_matrix else p ** precision
        self._ident = (tuple(tuple(int(i == j) for j in range(self.size)) for i in range(self.size))
                       if self.is_matrix else (0,) * self.dim)
        self.basis = tuple(self._reduce_any(b) for b in basis) if basis is not None else self._default_basis()
        if len(self.basis) != self.dim:
            raise LayerSolveFailure(f"basis has {len(self.basis)} elements, coordinate dimension is {self.dim}")
        for b in self.basis:
            self.check(b)
        if rank([self.congruence_layer(b, 1) for b in self.basis], p) != self.dim:
            raise LayerSolveFailure("basis images do not span the Frattini quotient")

    # ------------------------------------------------------------------ setup

    def _default_basis(self) -> tuple[Element, ...]:
        p, e, mod = self.p, self.eps, self.mod
        if self.kind == "abelian":
            return tuple(tuple(int(i == j) for j in range(self.dim)) for i in range(self.dim))
        q = p ** e
        if self.kind == "gl":
            out = []
            for i in range(self.size):
                for j in range(self.size):
                    out.append(tuple(tuple((int(r == c) + q * int((r, c) == (i, j))) % mod
                                           for c in range(self.size)) for r in range(self.size)))
            return tuple(out)
        return (
            ((1, q), (0, 1)),
            ((1, 0), (q, 1)),
            ((1 + q, 0), (0, pow(1 + q, -1, mod))),
        )

    def _reduce_any(self, g) -> Element:
        if self.is_matrix:
            return tuple(tuple(x % self.mod for x in row) for row in g)
        return tuple(x % self.mod for x in g)

    @property
    def name(self) -> str:
        if self.kind == "sl2":
            return f"sl2:{self.p}"
        return f"{self.kind}:{self.p}:{self.size}"

    def __repr__(self) -> str:
        return f"UniformGroupModel({self.name}, precision={self.precision})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, UniformGroupModel) and self.kind == other.kind and self.p == other.p
                and self.size == other.size and self.precision == other.precision and self.basis == other.basis)

    def __hash__(self) -> int:
        return hash((self.kind, self.p, self.size, self.precision, self.basis))

    def at_precision(self, n: int) -> "UniformGroupModel":
        """The same group and basis at working precision n (the quotient G/P_{n+1})."""
        if n == self.precision:
            return self
        cache = self.__dict__.setdefault("_prec_cache", {})
        if n not in cache:
            cache[n] = UniformGroupModel(self.kind, self.p, None if self.kind == "sl2" else self.size, n,
                                         basis=self.basis)
        return cache[n]

    def reduce(self, g: Element, n: int) -> Element:
        """Image of g in the model at precision n <= N."""
        if n > self.precision:
            raise ValueError("cannot raise precision")
        mod = self.p ** (n + self.eps) if self.is_matrix else self.p ** n
        if self.is_matrix:
            return tuple(tuple(x % mod for x in row) for row in g)
        return tuple(x % mod for x in g)

    # ------------------------------------------------------------ group law

    @property
    def identity(self) -> Element:
        return self._ident

    def check(self, g) -> None:
        if self.is_matrix:
            if not (isinstance(g, tuple) and len(g) == self.size and all(isinstance(r, tuple) and len(r) == self.size for r in g)):
                raise RepresentationError(f"expected a {self.size}x{self.size} matrix for {self.name}")
            q = self.p ** self.eps
            for i, row in enumerate(g):
                for j, x in enumerate(row):
                    if not 0 <= x < self.mod or (x - int(i == j)) % q:
                        raise RepresentationError(f"matrix entry ({i},{j}) = {x} is not congruent to I mod {q}")
            if self.kind == "sl2":
                (a, b), (c, d) = g
                if (a * d - b * c) % self.mod != 1:
                    raise RepresentationError("determinant is not 1")
        else:
            if not (isinstance(g, tuple) and len(g) == self.dim and all(isinstance(x, int) and 0 <= x < self.mod for x in g)):
                raise RepresentationError(f"expected a coordinate tuple of length {self.dim} mod {self.mod}")

    def multiply(self, g: Element, h: Element) -> Element:
        if self.is_matrix:
            return _matmul(g, h, self.mod)
        return tuple((x + y) % self.mod for x, y in zip(g, h))

    def invert(self, g: Element) -> Element:
        if self.is_matrix:
            return _matinv(g, self.mod)
        return tuple(-x % self.mod for x in g)

    def product(self, elements: Iterable[Element]) -> Element:
        out = self.identity
        for g in elements:
            out = self.multiply(out, g)
        return out

    def commutator(self, g: Element, h: Element) -> Element:
        """[g, h] = g^-1 h^-1 g h."""
        return self.multiply(self.multiply(self.invert(g), self.invert(h)), self.multiply(g, h))

    def conjugate(self, g: Element, h: Element) -> Element:
        """g^h = h^-1 g h."""
        return self.multiply(self.multiply(self.invert(h), g), h)

    def power(self, g: Element, lam: PadicScalar | int) -> Element:
        """g^lam for lam in Z_p; exact in G/P_{N+1} because g^(p^N) vanishes there."""
        if isinstance(lam, PadicScalar):
            if lam.prime != self.p:
                raise RepresentationError("exponent prime differs from group prime")
            if lam.precision < self.precision:
                raise ValueError(f"exponent precision {lam.precision} is below working precision {self.precision}")
            e = lam.residue
        else:
            e = lam
        e %= self.p ** self.precision
        if not self.is_matrix:
            return tuple(x * e % self.mod for x in g)
        result, base = self.identity, g
        while e:
            if e & 1:
                result = self.multiply(result, base)
            e >>= 1
            if e:
                base = self.multiply(base, base)
        return result

    # ------------------------------------------------------ congruence layers

    def congruence_depth(self, g: Element) -> int:
        """Largest n <= N+1 with g ≡ 1 in the n-th congruence layer (N+1 for the identity)."""
        cap = self.precision + 1
        p = self.p
        if not self.is_matrix:
            return min(_vp_capped(x, p, self.precision) for x in g) + 1
        full = self.precision + self.eps
        v = min(_vp_capped((x - int(i == j)) % self.mod, p, full)
                for i, row in enumerate(g) for j, x in enumerate(row))
        return min(v - self.eps + 1, cap)

    def congruence_layer(self, g: Element, n: int) -> tuple[int, ...]:
        """Leading congruence digit of g at level n as a vector in the ambient F_p space.

        Abelian: the (n-1)-th p-adic digit of each coordinate.  Matrix kinds:
        (g - I)/p^(e+n-1) mod p, flattened row-major.
        """
        p = self.p
        if not self.is_matrix:
            s = p ** (n - 1)
            return tuple((x // s) % p for x in g)
        s = p ** (self.eps + n - 1)
        return tuple((((x - int(i == j)) % self.mod) // s) % p for i, row in enumerate(g) for j, x in enumerate(row))

    # ------------------------------------------------------------ coordinates

    @cached_property
    def _power_tables(self) -> list[list[list[Element]]]:
        # tables[i][k][j] = x_i^(j p^k)
        tables = []
        for x in self.basis:
            per_level = []
            base = x
            for _ in range(self.precision):
                row = [self.identity]
                for _ in range(1, self.p):
                    row.append(self.multiply(row[-1], base))
                per_level.append(row)
                base = self.multiply(row[-1], base)
            tables.append(per_level)
        return tables

    @cached_property
    def _level_solvers(self) -> list[LinearSolver]:
        solvers = [None]  # 1-based levels
        for n in range(1, self.precision + 1):
            images = [self.congruence_layer(self._power_tables[i][n - 1][1], n) for i in range(self.dim)]
            s = LinearSolver(images, self.p, dim=len(images[0]))
            if not s.full_rank:
                raise LayerSolveFailure(f"basis images are dependent at level {n}")
            solvers.append(s)
        return solvers

    def basis_power(self, i: int, lam: int) -> Element:
        """x_i^lam using the digit tables (lam reduced mod p^N)."""
        p = self.p
        lam %= p ** self.precision
        out = self.identity
        k = 0
        tab = self._power_tables[i]
        while lam:
            lam, digit = divmod(lam, p)
            if digit:
                out = self.multiply(out, tab[k][digit])
            k += 1
        return out

    def layer_coordinates(self, r: Element, n: int) -> tuple[int, ...]:
        """pi_n(r) for r in P_n: the n-th layer vector in basis coordinates."""
        c = self._level_solvers[n].solve(self.congruence_layer(r, n))
        if c is None:
            raise LayerSolveFailure(f"layer vector at level {n} is outside the span of the basis images")
        return c

    def encode(self, lam: Sequence[PadicScalar | int]) -> Element:
        if len(lam) != self.dim:
            raise RepresentationError(f"expected {self.dim} coordinates, got {len(lam)}")
        return self.product(self.basis_power(i, int(l)) for i, l in enumerate(lam))

    def decode_ints(self, g: Element) -> tuple[int, ...]:
        p, d = self.p, self.dim
        factors = [self.identity] * d
        lam = [0] * d
        scale = 1
        for n in range(1, self.precision + 1):
            r = self.multiply(self.invert(self.product(factors)), g)
            c = self.layer_coordinates(r, n)
            for i, ci in enumerate(c):
                if ci:
                    factors[i] = self.multiply(factors[i], self._power_tables[i][n - 1][ci])
                    lam[i] += ci * scale
            scale *= p
        if self.product(factors) != g:
            raise LayerSolveFailure("digit peeling did not reproduce the element; is it in the group?")
        return tuple(lam)

    def decode(self, g: Element) -> tuple[PadicScalar, ...]:
        return tuple(PadicScalar(self.p, self.precision, x) for x in self.decode_ints(g))

    def omega(self, g: Element) -> Valuation:
        """Lower p-series level from coordinates: min v(lam_i) + 1; AtLeast(N+1) for 1."""
        vals = [valuation(x) for x in self.decode(g)]
        finite = [v.value for v in vals if v.exact]
        if not finite:
            return AtLeast(self.precision + 1)
        return Finite(min(finite) + 1)

    def f_map(self, lam: Sequence, mu: Sequence) -> tuple[PadicScalar, ...]:
        """Coordinates of x(lam) * x(mu)^-1."""
        return self.decode(self.multiply(self.encode(lam), self.invert(self.encode(mu))))

    # ---------------------------------------------------------------- helpers

    def random_coordinates(self, rng: random.Random, level: int = 1) -> tuple[int, ...]:
        """Random coordinates of an element of P_level."""
        mod = self.p ** self.precision
        s = self.p ** (level - 1)
        return tuple(rng.randrange(mod) * s % mod for _ in range(self.dim))

    def random_element(self, rng: random.Random, level: int = 1) -> Element:
        return self.encode(self.random_coordinates(rng, level))

    def format_element(self, g: Element) -> str:
        if self.is_matrix:
            return "[" + ",".join("[" + ",".join(str(x) for x in row) + "]" for row in g) + "]"
        return "x(" + ",".join(str(x) for x in self.decode_ints(g)) + ")"

    def format_coordinates(self, lam: Iterable) -> str:
        return "x(" + ",".join(str(int(x)) for x in lam) + ")"

    def parse_element(self, text: str) -> Element:
        """Parse ``x(a1,...,ad)`` (coordinates), matrix rows ``[[..],[..]]``, or an integer for gl:p:1."""
        s = text.strip()
        m = re.fullmatch(r"x\(\s*([-+\d\s,]*)\)", s)
        if m:
            body = m.group(1).strip()
            lam = [int(t) for t in body.split(",")] if body else []
            return self.encode(lam)
        if re.fullmatch(r"[-+]?\d+", s) and self.is_matrix and self.size == 1:
            g = ((int(s) % self.mod,),)
            self.check(g)
            return g
        if s.startswith("["):
            rows = re.findall(r"\[([^\[\]]*)\]", s)
            vals = [[int(t) for t in r.split(",")] for r in rows]
            if self.is_matrix:
                g = tuple(tuple(x % self.mod for x in r) for r in vals)
            else:
                if len(vals) != 1:
                    raise RepresentationError("abelian raw vectors are written [a1,...,ad]")
                g = tuple(x % self.mod for x in vals[0])
            self.check(g)
            return g
        raise RepresentationError(f"cannot parse element {text!r}")


# --------------------------------------------------------------- group specs


def parse_group_spec(spec: str, precision: int = 6) -> UniformGroupModel:
    """``kind:p:d`` with kind in {abelian, gl, sl2}; sl2 also accepts ``sl2:p``."""
    parts = spec.strip().split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"group spec {spec!r} is not kind:p:d")
    kind = parts[0]
    p = int(parts[1])
    d = int(parts[2]) if len(parts) == 3 else None
    if KIND_ALIASES.get(kind.lower()) == "sl2":
        d = None if d in (None, 2) else d
    return UniformGroupModel(kind, p, d, precision)


def parse_group_config(text: str) -> UniformGroupModel:
    """Key-value config: lines ``kind = ...``, ``p = ...``, ``d = ...``, ``precision = ...``."""
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    kind = fields["kind"]
    d = int(fields["d"]) if "d" in fields else None
    if KIND_ALIASES.get(kind.lower()) == "sl2":
        d = None
    return UniformGroupModel(kind, int(fields["p"]), d, int(fields.get("precision", 6)))


def format_group_config(G: UniformGroupModel) -> str:
    return f"kind={G.kind}\np={G.p}\nd={G.size}\nprecision={G.precision}\n"


def builtin_models(precision: int = 6) -> list[UniformGroupModel]:
    return [
        UniformGroupModel("abelian", 3, 2, precision),
        UniformGroupModel("abelian", 5, 2, precision),
        UniformGroupModel("gl", 3, 2, precision),
        UniformGroupModel("sl2", 3, None, precision),
    ]
