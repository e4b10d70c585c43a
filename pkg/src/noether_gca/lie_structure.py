"""Brackets of symmetry vector fields and the N-Galilean conformal table.

All tables are real: a generator label ``X`` stands for the vector field
V_X = psi d_t + phi_a d_qa. The Hermitian operators of the usual physics
presentation are X = i^p V_X with the phases recorded in :class:`BasisMap`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import NotClosed
from .jet_algebra import TIME, JetPolynomial, ModelConfig, format_fraction, jet
from .linalg import SpanReducer
from .symmetry_solver import (
    NamedBasis,
    PointSymmetry,
    label_C,
    label_J,
    rotation_pairs,
)

VectorField = PointSymmetry


def _apply(X: VectorField, g: JetPolynomial) -> JetPolynomial:
    """Derivative of g along psi d_t + phi_a d_qa."""
    out = X.psi_poly() * g.diff(TIME)
    for a in range(1, X.d + 1):
        dg = g.diff(jet(a, 0))
        if dg:
            out = out + X.phi(a) * dg
    return out


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """Lie bracket [X, Y] = XY - YX of two affine-linear vector fields."""
    if X.has_quadratic() or Y.has_quadratic():
        raise ValueError("bracket is defined here for affine-linear fields only")
    psi = _apply(X, Y.psi_poly()) - _apply(Y, X.psi_poly())
    phis = [_apply(X, Y.phi(a)) - _apply(Y, X.phi(a)) for a in range(1, X.d + 1)]
    return PointSymmetry.from_fields(psi, phis, X.d)


def _as_items(basis) -> list:
    if isinstance(basis, NamedBasis):
        return basis.items()
    return list(basis)


@dataclass
class StructureTable:
    """Structure constants c[(i, j)] = {label: coeff} for i < j.

    ``residuals`` maps pairs whose bracket leaves the span to the leftover
    field (as a coordinate vector).
    """

    labels: list
    coeffs: dict
    residuals: dict = field(default_factory=dict)

    @property
    def closed(self) -> bool:
        return not self.residuals

    def entry(self, x: str, y: str) -> dict:
        """Coordinates of [x, y] for any ordered pair of labels."""
        i, j = self.labels.index(x), self.labels.index(y)
        if i == j:
            return {}
        if i < j:
            return dict(self.coeffs.get((x, y), {}))
        return {k: -c for k, c in self.coeffs.get((y, x), {}).items()}

    def to_json(self) -> dict:
        brackets = {}
        for i, x in enumerate(self.labels):
            for y in self.labels[i + 1 :]:
                entry = self.coeffs.get((x, y), {})
                brackets[f"[{x},{y}]"] = {
                    lab: format_fraction(entry[lab]) for lab in self.labels if lab in entry
                }
        return {"labels": list(self.labels), "brackets": brackets, "residual_zero": self.closed}

    @classmethod
    def from_json(cls, data: Mapping) -> "StructureTable":
        labels = list(data["labels"])
        coeffs = {}
        for key, entry in data["brackets"].items():
            x, y = key[1:-1].split(",")
            if entry:
                coeffs[(x, y)] = {lab: Fraction(c) for lab, c in entry.items()}
        table = cls(labels, coeffs)
        if not data.get("residual_zero", True):
            table.residuals[("?", "?")] = None
        return table


def structure_table(basis, strict: bool = True) -> StructureTable:
    """Expand every bracket of basis elements exactly in the basis.

    With ``strict`` an escaping bracket raises :class:`NotClosed`; otherwise
    it is recorded in :attr:`StructureTable.residuals`.
    """
    items = _as_items(basis)
    labels = [label for label, _ in items]
    fields = [X for _, X in items]
    reducer = SpanReducer(X.to_vector() for X in fields)
    if reducer.dependent:
        raise ValueError("basis elements are linearly dependent")
    d = fields[0].d if fields else 0
    coeffs: dict = {}
    residuals: dict = {}
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            br = bracket(fields[i], fields[j])
            coords, residual = reducer.express(br.to_vector())
            pair = (labels[i], labels[j])
            if residual:
                rest = PointSymmetry.from_vector(residual, d)
                if strict:
                    raise NotClosed(f"[{pair[0]},{pair[1]}] leaves the span", rest, pair)
                residuals[pair] = rest
            if coords:
                coeffs[pair] = {labels[k]: c for k, c in sorted(coords.items())}
    return StructureTable(labels, coeffs, residuals)


# phase conventions -----------------------------------------------------------


def _i_power(p: int, r: Fraction) -> tuple:
    """i**p * r as (real, imag)."""
    p %= 4
    return [(r, Fraction(0)), (Fraction(0), r), (-r, Fraction(0)), (Fraction(0), -r)][p]


@dataclass(frozen=True)
class BasisMap:
    """Hermitian generator X = i**phase[X] * V_X.

    H = iV_H, D = -iV_D, K = iV_K, J = -iV_J, C_ak = i(-1)^k V_C_ak.
    """

    phase: dict

    @classmethod
    def standard(cls, labels) -> "BasisMap":
        phase = {}
        for label in labels:
            if label in ("H", "K"):
                phase[label] = 1
            elif label == "D" or label.startswith("J"):
                phase[label] = 3
            elif label.startswith("C"):
                k = int(label.split("_")[1])
                phase[label] = 1 + 2 * k
            else:
                raise KeyError(label)
        return cls(phase)

    def to_hermitian(self, x: str, y: str, real: Mapping) -> dict:
        """Coordinates of [X, Y] in Hermitian generators as (re, im) pairs."""
        out = {}
        for z, c in real.items():
            out[z] = _i_power(self.phase[x] + self.phase[y] - self.phase[z], Fraction(c))
        return out

    def to_real(self, x: str, y: str, hermitian: Mapping) -> dict:
        """Inverse of :meth:`to_hermitian`; raises if a coefficient is not real."""
        out = {}
        for z, (re, im) in hermitian.items():
            p = self.phase[z] - self.phase[x] - self.phase[y]
            a = _i_power(p, re)
            b = _i_power(p + 1, im)
            val = (a[0] + b[0], a[1] + b[1])
            if val[1]:
                raise ValueError(f"[{x},{y}] has a non-real image on {z}")
            if val[0]:
                out[z] = val[0]
        return out


def hermitian_relations(cfg: ModelConfig, k_max: int) -> dict:
    """Commutators of the Hermitian generators, coefficients as (re, im).

    sl(2): [D,H]=iH, [D,K]=-iK, [K,H]=2iD; towers: [H,C_k]=-ik C_{k-1},
    [D,C_k]=i(N/2-k) C_k, [K,C_k]=i(N-k) C_{k+1}; rotations act as so(d).
    Keys are ordered pairs; only nonzero brackets are listed, each once.
    """
    N = cfg.N
    d = cfg.d
    I = lambda r: (Fraction(0), Fraction(r))  # noqa: E731
    rel: dict = {
        ("D", "H"): {"H": I(1)},
        ("D", "K"): {"K": I(-1)},
        ("K", "H"): {"D": I(2)},
    }
    for a in range(1, d + 1):
        for k in range(k_max + 1):
            c = label_C(a, k)
            if k >= 1:
                rel[("H", c)] = {label_C(a, k - 1): I(-k)}
            if Fraction(N, 2) - k:
                rel[("D", c)] = {c: I(Fraction(N, 2) - k)}
            if N - k and k + 1 <= k_max:
                rel[("K", c)] = {label_C(a, k + 1): I(N - k)}
            elif N - k:
                raise ValueError(f"[K,{c}] leaves k <= {k_max}")
    pairs = rotation_pairs(d)
    for ab in pairs:
        j = label_J(*ab)
        a, b = ab
        for cc in range(1, d + 1):
            for k in range(k_max + 1):
                entry = {}
                if cc == a:
                    entry[label_C(b, k)] = I(1)
                if cc == b:
                    entry[label_C(a, k)] = I(-1)
                if entry:
                    rel[(j, label_C(cc, k))] = entry
    # [J_A, J_B] = i J_[A,B] with J_ab <-> matrix E_ba - E_ab
    for x_i, ab in enumerate(pairs):
        for cd in pairs[x_i + 1 :]:
            comm = _so_commutator(ab, cd, d)
            if comm:
                rel[(label_J(*ab), label_J(*cd))] = {label_J(*p): I(c) for p, c in comm.items()}
    return rel


def _so_matrix(ab, d):
    a, b = ab
    m = [[0] * d for _ in range(d)]
    m[b - 1][a - 1] = 1
    m[a - 1][b - 1] = -1
    return m


def _so_commutator(ab, cd, d) -> dict:
    A, B = _so_matrix(ab, d), _so_matrix(cd, d)
    M = [
        [sum(A[i][k] * B[k][j] - B[i][k] * A[k][j] for k in range(d)) for j in range(d)]
        for i in range(d)
    ]
    return {p: M[p[1] - 1][p[0] - 1] for p in rotation_pairs(d) if M[p[1] - 1][p[0] - 1]}


def epsilon_rotations(d: int) -> dict:
    """For d = 3: J_c = J_(a,b) with (a, b, c) cyclic, as ``{J_c: (label, sign)}``."""
    if d != 3:
        return {}
    return {"J1": (label_J(2, 3), 1), "J2": (label_J(1, 3), -1), "J3": (label_J(1, 2), 1)}


def expected_table(cfg: ModelConfig, k_max: int | None = None) -> StructureTable:
    """Real-basis image of the N-Galilean conformal algebra under :class:`BasisMap`."""
    if k_max is None:
        k_max = cfg.N
    named = NamedBasis.canonical(cfg, k_max)
    labels = named.labels()
    bmap = BasisMap.standard(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    coeffs: dict = {}
    for (x, y), herm in hermitian_relations(cfg, k_max).items():
        real = bmap.to_real(x, y, herm)
        if pos[x] > pos[y]:
            x, y = y, x
            real = {z: -c for z, c in real.items()}
        if real:
            coeffs[(x, y)] = {z: real[z] for z in labels if z in real}
    return StructureTable(labels, coeffs)


@dataclass
class Report:
    mismatches: list = field(default_factory=list)
    note: str = ""

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.note

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "mismatches": [
                {
                    "pair": f"[{x},{y}]",
                    "generator": z,
                    "actual": format_fraction(a),
                    "expected": format_fraction(e),
                }
                for (x, y, z, a, e) in self.mismatches
            ],
            "note": self.note,
        }


def verify_table(actual: StructureTable, expected: StructureTable) -> Report:
    """Entry-by-entry exact comparison."""
    if list(actual.labels) != list(expected.labels):
        raise ValueError("tables have different labels")
    report = Report()
    if not actual.closed:
        report.note = "actual table does not close"
    labels = actual.labels
    for i, x in enumerate(labels):
        for y in labels[i + 1 :]:
            a = actual.coeffs.get((x, y), {})
            e = expected.coeffs.get((x, y), {})
            for z in labels:
                ca, ce = a.get(z, Fraction(0)), e.get(z, Fraction(0))
                if ca != ce:
                    report.mismatches.append((x, y, z, ca, ce))
    return report


def jacobi_check(basis) -> Report:
    """Cyclic sum of [[X,Y],Z] over all triples, from the structure constants."""
    table = basis if isinstance(basis, StructureTable) else structure_table(basis, strict=False)
    if not table.closed:
        pairs = ", ".join(f"[{x},{y}]" for x, y in table.residuals)
        return Report(note=f"skipped: NotClosed ({pairs})")
    labels = table.labels
    report = Report()

    def bracket_vec(u: Mapping, lab: str) -> dict:
        out: dict = {}
        for w, c in u.items():
            for z, x in table.entry(w, lab).items():
                out[z] = out.get(z, 0) + c * x
        return out

    for i, x in enumerate(labels):
        for j in range(i + 1, len(labels)):
            y = labels[j]
            for z in labels[j + 1 :]:
                total: dict = {}
                for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
                    for w, v in bracket_vec(table.entry(a, b), c).items():
                        total[w] = total.get(w, 0) + v
                for w, v in total.items():
                    if v:
                        report.mismatches.append((x, y, z + "->" + w, v, Fraction(0)))
    return report
