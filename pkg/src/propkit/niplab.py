"""Finite-scale dependence experiments on coset families.

A family is a list of labelled subsets (bitsets) of a finite group's carrier.
Two measures are provided: the independence dimension (largest m such that
some m sets realise all 2^m membership patterns) and the VC dimension
(largest shattered point set).  Both are exhaustive depth-first searches
over bitsets, with a hard cap.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Sequence

from .errors import BudgetExceeded, PartitionInfeasible
from .finitep import FiniteGroupTable, SubgroupSet, enumerate_subgroups, iter_bits

MAX_CAP = 20
DEFAULT_COMBINATION_BUDGET = 2_000_000


@dataclass
class DefinableFamily:
    table: FiniteGroupTable
    labels: list[str]
    sets: list[int]
    subgroups: list[int]  # the declared subgroup of each set
    descriptor: str

    def __len__(self) -> int:
        return len(self.sets)

    def verify(self) -> bool:
        """Every set is a left coset g*K of its declared subgroup K."""
        F = self.table
        for s, K in zip(self.sets, self.subgroups):
            g = next(iter_bits(s))
            if F.left_coset(g, K) != s or not F.is_subgroup(K):
                return False
        return True

    def extended(self, other: "DefinableFamily") -> "DefinableFamily":
        labels, sets, subs = list(self.labels), list(self.sets), list(self.subgroups)
        seen = set(sets)
        for l, s, K in zip(other.labels, other.sets, other.subgroups):
            if s not in seen:
                seen.add(s)
                labels.append(l)
                sets.append(s)
                subs.append(K)
        return DefinableFamily(self.table, labels, sets, subs, f"{self.descriptor} + {other.descriptor}")


def _cosets(F: FiniteGroupTable, K: int) -> list[tuple[int, int]]:
    """(representative, bitset) of every left coset of K, the subgroup itself first."""
    out, covered = [], 0
    for g in range(F.order):
        if (covered >> g) & 1:
            continue
        c = F.left_coset(g, K)
        covered |= c
        out.append((g, c))
    return out


def coset_family(F: FiniteGroupTable, selector: str = "index", max_index: int | None = None,
                 subgroups: Sequence[SubgroupSet | int] | None = None, proper: bool = True) -> DefinableFamily:
    """All left cosets of the selected subgroups, deduplicated as sets.

    selector "index": proper subgroups of index <= max_index (all subgroups if
    ``proper`` is False); "wreath-base": the base-coordinate subgroups
    B_j = {(f, 0): f(j) = 0}; "explicit": the given ``subgroups``.
    Subgroups come first in the family, then their remaining cosets.
    """
    if selector == "index":
        if max_index is None:
            raise ValueError("selector 'index' needs max_index")
        subs = [H.mask for H in enumerate_subgroups(F, max_index)]
        if proper:
            subs = [m for m in subs if m != F.full]
        desc = f"cosets of {'proper ' if proper else ''}subgroups of index <= {max_index}"
        names = [f"K{i}" for i in range(len(subs))]
    elif selector == "wreath-base":
        if F.base is None or F.provenance != "wreath":
            raise ValueError("wreath-base selector needs a wreath product table")
        subs = list(F.base.kernels)
        desc = "base-coordinate subgroups of a wreath product"
        names = [f"B{j}" for j in range(len(subs))]
    elif selector == "explicit":
        if subgroups is None:
            raise ValueError("selector 'explicit' needs subgroups")
        subs = [H.mask if isinstance(H, SubgroupSet) else H for H in subgroups]
        for m in subs:
            if not F.is_subgroup(m):
                raise ValueError("explicit family member is not a subgroup")
        desc = "explicit subgroup list"
        names = [f"K{i}" for i in range(len(subs))]
    else:
        raise ValueError(f"unknown selector {selector!r}")
    first, rest = [], []
    seen = set()
    for name, K in zip(names, subs):
        for g, c in _cosets(F, K):
            if c in seen:
                continue
            seen.add(c)
            entry = (f"{F.labels[g]}*{name}" if g else name, c, K)
            (first if g == 0 else rest).append(entry)
    entries = first + rest
    return DefinableFamily(F, [e[0] for e in entries], [e[1] for e in entries], [e[2] for e in entries], desc)


def family_from_sets(F: FiniteGroupTable, sets: Sequence[int], labels: Sequence[str] | None = None) -> DefinableFamily:
    """A raw set system on F's carrier (no coset structure is claimed)."""
    labels = list(labels) if labels is not None else [f"A{i}" for i in range(len(sets))]
    return DefinableFamily(F, labels, list(sets), [0] * len(sets), "raw set system")


# ---------------------------------------------------------------- reports


@dataclass
class ShatterReport:
    mode: str
    dimension: int
    witness: list[int]
    witness_labels: list[str]
    capped: bool
    cap: int
    patterns: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _atoms(fam: DefinableFamily) -> list[int]:
    """One representative point per membership signature."""
    F = fam.table
    seen, reps = set(), []
    for x in range(F.order):
        sig = tuple((s >> x) & 1 for s in fam.sets)
        if sig not in seen:
            seen.add(sig)
            reps.append(x)
    return reps


def _check_cap(cap: int):
    if not 0 <= cap <= MAX_CAP:
        raise ValueError(f"cap must lie in 0..{MAX_CAP}")


def independence_dimension(fam: DefinableFamily, cap: int = MAX_CAP) -> ShatterReport:
    """Largest m <= cap such that some m family sets realise all 2^m patterns."""
    _check_cap(cap)
    F = fam.table
    sets = list(dict.fromkeys(fam.sets))
    index_of = {s: fam.sets.index(s) for s in sets}
    n_atoms = len(_atoms(fam)) if sets else 1
    best: list[int] = []

    def dfs(start, chosen, cells):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) >= cap or 2 ** (len(chosen) + 1) > n_atoms:
            return
        for i in range(start, len(sets)):
            A = sets[i]
            new = []
            for c in cells:
                a, b = c & A, c & ~A
                if not a or not b:
                    break
                new.append(a)
                new.append(b)
            else:
                chosen.append(i)
                dfs(i + 1, chosen, new)
                chosen.pop()
                if len(best) >= cap:
                    return

    dfs(0, [], [F.full])
    witness = [index_of[sets[i]] for i in best]
    patterns = {}
    for x in range(F.order):
        pat = "".join(str((fam.sets[i] >> x) & 1) for i in witness)
        patterns.setdefault(pat, x)
    return ShatterReport("independence", len(best), witness, [fam.labels[i] for i in witness],
                         len(best) >= cap and cap > 0, cap, dict(sorted(patterns.items())))


def vc_dimension(fam: DefinableFamily, cap: int = MAX_CAP) -> ShatterReport:
    """Largest m <= cap such that some m-point subset of the carrier is shattered."""
    _check_cap(cap)
    points = _atoms(fam)
    sets = list(dict.fromkeys(fam.sets))
    bound = len(sets).bit_length() - 1 if sets else 0
    best: list[int] = []

    def dfs(start, chosen, pmask):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) >= cap or len(chosen) >= bound:
            return
        for i in range(start, len(points)):
            m = pmask | (1 << points[i])
            traces = {s & m for s in sets}
            if len(traces) == 2 ** (len(chosen) + 1):
                chosen.append(points[i])
                dfs(i + 1, chosen, m)
                chosen.pop()
                if len(best) >= cap:
                    return

    dfs(0, [], 0)
    F = fam.table
    pmask = sum(1 << x for x in best)
    patterns = {}
    for s in fam.sets:
        trace = "".join(str((s >> x) & 1) for x in best)
        patterns.setdefault(trace, fam.sets.index(s))
    return ShatterReport("vc", len(best), best, [F.labels[x] for x in best],
                         len(best) >= cap and cap > 0, cap, dict(sorted(patterns.items())))


def replay(fam: DefinableFamily, report: ShatterReport) -> bool:
    """Re-derive every claimed pattern from scratch."""
    m = report.dimension
    if len(report.patterns) != 2 ** m:
        return False
    if report.mode == "independence":
        for pat, x in report.patterns.items():
            if any(((fam.sets[i] >> x) & 1) != int(b) for i, b in zip(report.witness, pat)):
                return False
        return True
    for trace, i in report.patterns.items():
        if any(((fam.sets[i] >> x) & 1) != int(b) for x, b in zip(report.witness, trace)):
            return False
    return True


# ------------------------------------------------------------------ TP2


@dataclass
class TP2Array:
    rows: int
    cols: int
    blocks: list[list[int]]
    columns: list[list[int]]
    row_subgroups: list[int]
    cells: list[list[int]]  # cells[i][j] = S_i * g_{J_i[j]}
    row_disjoint: list[bool]
    paths: list[dict]
    table: FiniteGroupTable = field(repr=False)

    @property
    def rows_inconsistent(self) -> bool:
        return all(self.row_disjoint)

    @property
    def paths_consistent(self) -> bool:
        return all(p["consistent"] for p in self.paths)

    @property
    def verified(self) -> bool:
        return self.rows_inconsistent and self.paths_consistent

    def to_json(self) -> dict:
        F = self.table
        return {
            "group": F.name,
            "rows": self.rows,
            "cols": self.cols,
            "blocks": self.blocks,
            "columns": self.columns,
            "row_subgroup_orders": [m.bit_count() for m in self.row_subgroups],
            "row_disjoint": self.row_disjoint,
            "paths": self.paths,
            "verified": self.verified,
        }


def tp2_array(F: FiniteGroupTable, rows: int, cols: int, path_budget: int = 100_000) -> TP2Array:
    """The explicit array from a base-product decomposition.

    The base coordinates are split into ``rows`` consecutive blocks of at
    least ``cols`` coordinates.  Row i uses S_i = the elements of the base
    that vanish on block i, and the cells S_i * g_j with g_j the indicator of
    coordinate j, for the first ``cols`` coordinates j of the block.
    """
    if F.base is None:
        raise ValueError(f"{F.name} exposes no base-product decomposition")
    L = F.base.size
    if rows < 1 or cols < 1 or rows * cols > L:
        raise PartitionInfeasible(f"cannot split {L} coordinates into {rows} blocks of size >= {cols}")
    if cols ** rows > path_budget:
        raise BudgetExceeded(f"{cols}^{rows} paths exceed budget {path_budget}")
    blocks = [list(range(i * cols, (i + 1) * cols)) for i in range(rows)]
    blocks[-1].extend(range(rows * cols, L))
    columns = [b[:cols] for b in blocks]
    S = []
    for b in blocks:
        m = F.base.base
        for j in b:
            m &= F.base.kernels[j]
        S.append(m)

    def right_coset(mask, g):
        out = 0
        for s in iter_bits(mask):
            out |= 1 << F.mul(s, g)
        return out

    cells = [[right_coset(S[i], F.base.indicators[j]) for j in columns[i]] for i in range(rows)]
    row_disjoint = [all(a & b == 0 for a, b in itertools.combinations(r, 2)) for r in cells]
    paths = []
    for choice in itertools.product(range(cols), repeat=rows):
        h = 0
        for i, c in enumerate(choice):
            h = F.mul(h, F.base.indicators[columns[i][c]])
        ok = all((cells[i][c] >> h) & 1 for i, c in enumerate(choice))
        paths.append({"path": [columns[i][c] for i, c in enumerate(choice)], "witness": F.labels[h],
                      "witness_index": h, "consistent": ok})
    return TP2Array(rows, cols, blocks, columns, S, cells, row_disjoint, paths, F)


def replay_tp2(arr: TP2Array) -> bool:
    """Recheck the recorded witnesses and disjointness against the cells."""
    for r in arr.cells:
        if any(a & b for a, b in itertools.combinations(r, 2)):
            return False
    for p in arr.paths:
        h = p["witness_index"]
        for i, j in enumerate(p["path"]):
            if not (arr.cells[i][arr.columns[i].index(j)] >> h) & 1:
                return False
    return True


# ------------------------------------------------------- Baldwin-Saxl width


def baldwin_saxl_width(subgroups: Sequence[SubgroupSet | int], budget: int = DEFAULT_COMBINATION_BUDGET) -> int:
    """Smallest w such that some w members already have the full intersection."""
    masks = [H.mask if isinstance(H, SubgroupSet) else H for H in subgroups]
    if not masks:
        raise ValueError("empty subgroup list")
    if len(masks) > 24:
        raise ValueError("at most 24 subgroups")
    target = masks[0]
    for m in masks[1:]:
        target &= m
    spent = 0
    for w in range(1, len(masks) + 1):
        spent += comb(len(masks), w)
        if spent > budget:
            raise BudgetExceeded(f"more than {budget} subfamilies to check")
        for combo in itertools.combinations(masks, w):
            acc = combo[0]
            for m in combo[1:]:
                acc &= m
            if acc == target:
                return w
    return len(masks)


# ---------------------------------------------------------------- output


def summary_csv(rows: Sequence[tuple]) -> str:
    """CSV rows (group, family, n, dimension)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "family", "n", "dimension"])
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def report_json(report: ShatterReport | TP2Array) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
