"""Exact linear algebra over the rationals.

Large homogeneous systems (the determining equations) go through a sparse
fraction-free row reduction on primitive integer rows. Small change-of-basis
problems use :class:`SpanReducer`, which works directly with Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Hashable, Iterable, Mapping, Sequence


def _primitive(row: Mapping[int, object], pos: Mapping[int, int] | None = None) -> dict:
    """Scale a rational row to coprime integers (first entry positive when ``pos`` given)."""
    den = 1
    for c in row.values():
        den = lcm(den, Fraction(c).denominator)
    ints = {}
    for k, c in row.items():
        v = Fraction(c) * den
        if v:
            ints[k] = v.numerator
    if not ints:
        return ints
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    if pos is not None:
        lead = min(ints, key=pos.__getitem__)
        if ints[lead] < 0:
            g = -g
    if g != 1:
        ints = {k: v // g for k, v in ints.items()}
    return ints


class Echelon:
    """Reduced row echelon form kept as integer rows.

    ``pivots`` is a list of ``(column, row)`` with ``row[column] > 0`` and
    every other pivot column absent from ``row``.
    """

    def __init__(self, pivots: list, order: Sequence[int]):
        self.pivots = pivots
        self.order = list(order)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def pivot_columns(self) -> list:
        return [c for c, _ in self.pivots]

    def free_columns(self) -> list:
        taken = set(self.pivot_columns())
        return [c for c in self.order if c not in taken]


def row_reduce(rows: Iterable[Mapping[int, object]], order: Sequence[int]) -> Echelon:
    """Fraction-free Gauss-Jordan reduction processing columns in ``order``.

    Within a column the pivot is the shortest candidate row (ties: oldest
    row), so results are deterministic.
    """
    pos = {c: i for i, c in enumerate(order)}
    active: dict[int, dict] = {}
    seen = set()
    for row in rows:
        prim = _primitive(row, pos)
        if not prim:
            continue
        key = tuple(sorted(prim.items()))
        if key in seen:
            continue
        seen.add(key)
        active[len(active)] = prim

    colmap: dict[int, set] = {}
    for rid, row in active.items():
        for c in row:
            colmap.setdefault(c, set()).add(rid)

    pivots = []
    for c in order:
        cands = colmap.get(c)
        if not cands:
            continue
        pid = min(cands, key=lambda r: (len(active[r]), r))
        prow = active.pop(pid)
        for k in prow:
            colmap[k].discard(pid)
        pv = prow[c]
        if pv < 0:
            prow = {k: -v for k, v in prow.items()}
            pv = -pv
        for rid in list(colmap[c]):
            row = active[rid]
            rc = row[c]
            g = gcd(pv, rc)
            a, b = pv // g, rc // g
            new = {k: a * v for k, v in row.items()}
            for k, v in prow.items():
                s = new.get(k, 0) - b * v
                if s:
                    new[k] = s
                else:
                    new.pop(k, None)
            new = _primitive(new)
            for k in row:
                if k not in new:
                    colmap[k].discard(rid)
            if new:
                for k in new:
                    colmap.setdefault(k, set()).add(rid)
                active[rid] = new
            else:
                del active[rid]
        pivots.append((c, prow))

    # back substitution
    for j in range(len(pivots) - 1, -1, -1):
        cj, rj = pivots[j]
        pj = rj[cj]
        for i in range(j):
            ci, ri = pivots[i]
            if cj not in ri:
                continue
            rc = ri[cj]
            g = gcd(pj, rc)
            a, b = pj // g, rc // g
            new = {k: a * v for k, v in ri.items()}
            for k, v in rj.items():
                s = new.get(k, 0) - b * v
                if s:
                    new[k] = s
                else:
                    new.pop(k, None)
            new = _primitive(new)
            if new[ci] < 0:
                new = {k: -v for k, v in new.items()}
            pivots[i] = (ci, new)
    return Echelon(pivots, order)


def nullspace(
    rows: Iterable[Mapping[int, object]], ncols: int, order: Sequence[int] | None = None
) -> list[list[Fraction]]:
    """Basis of {x : rows . x = 0}, one vector per free column in ``order``."""
    if order is None:
        order = range(ncols)
    ech = row_reduce(rows, order)
    basis = []
    for f in ech.free_columns():
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for c, row in ech.pivots:
            if f in row:
                vec[c] = -Fraction(row[f], row[c])
        basis.append(vec)
    return basis


def solve(
    rows: Sequence[Mapping[int, object]], rhs: Sequence[object], ncols: int
) -> list[Fraction] | None:
    """One solution of A x = b (free variables set to zero), or ``None``."""
    aug = []
    for row, b in zip(rows, rhs):
        new = dict(row)
        if b:
            new[ncols] = b
        aug.append(new)
    ech = row_reduce(aug, list(range(ncols + 1)))
    x = [Fraction(0)] * ncols
    for c, row in ech.pivots:
        if c == ncols:
            return None
        x[c] = Fraction(row.get(ncols, 0), row[c])
    return x


def rank(rows: Iterable[Mapping[int, object]], ncols: int) -> int:
    return row_reduce(rows, range(ncols)).rank


class SpanReducer:
    """Incremental basis of a span with coordinates of reduced vectors.

    Vectors are sparse mappings ``key -> Fraction`` over any sortable keys.
    """

    def __init__(self, vectors: Iterable[Mapping[Hashable, object]] = ()):
        self._rows: list = []  # (pivot key, vector, combination)
        self.size = 0
        self.dependent: list[int] = []
        for v in vectors:
            self.add(v)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _reduce(self, v: Mapping) -> tuple[dict, dict]:
        res = {k: Fraction(c) for k, c in v.items() if c}
        combo: dict = {}
        for key, vec, comb in self._rows:
            c = res.get(key)
            if not c:
                continue
            for k, x in vec.items():
                s = res.get(k, 0) - c * x
                if s:
                    res[k] = s
                else:
                    res.pop(k, None)
            for i, x in comb.items():
                combo[i] = combo.get(i, 0) + c * x
        return res, combo

    def add(self, v: Mapping) -> bool:
        """Append ``v`` to the generating list; returns False if it was dependent."""
        index = self.size
        self.size += 1
        res, combo = self._reduce(v)
        if not res:
            self.dependent.append(index)
            return False
        key = min(res)
        scale = res[key]
        vec = {k: x / scale for k, x in res.items()}
        comb = {i: -x / scale for i, x in combo.items()}
        comb[index] = comb.get(index, 0) + 1 / scale
        comb = {i: x for i, x in comb.items() if x}
        # keep rows fully reduced
        updated = []
        for pk, pvec, pcomb in self._rows:
            c = pvec.get(key)
            if c:
                pvec = dict(pvec)
                for k, x in vec.items():
                    s = pvec.get(k, 0) - c * x
                    if s:
                        pvec[k] = s
                    else:
                        pvec.pop(k, None)
                pcomb = dict(pcomb)
                for i, x in comb.items():
                    s = pcomb.get(i, 0) - c * x
                    if s:
                        pcomb[i] = s
                    else:
                        pcomb.pop(i, None)
            updated.append((pk, pvec, pcomb))
        updated.append((key, vec, comb))
        self._rows = updated
        return True

    def express(self, v: Mapping) -> tuple[dict, dict]:
        """Return ``(coords, residual)`` with v = sum coords[i] * vectors[i] + residual."""
        res, combo = self._reduce(v)
        return {i: x for i, x in combo.items() if x}, res
