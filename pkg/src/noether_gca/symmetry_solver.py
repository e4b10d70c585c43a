"""Noether point symmetries of the free higher-derivative Lagrangian.

A point transformation is stored as ``t -> t + eps*psi(t)`` and
``q_a -> q_a + eps*phi_a(q, t)`` with

    phi_a = sum_b linear[a][b](t) q_b + shift[a](t) + sum_{b<=c} quad[a][b][c](t) q_b q_c

All t-dependence is polynomial and stored as ascending coefficient tuples.
Spatial indices are 0-based inside the arrays and 1-based in jet variables
and labels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ClassificationFailed, OrderCapExceeded
from .jet_algebra import (
    TIME,
    ZERO,
    JetPolynomial,
    ModelConfig,
    antiderivative_time,
    euler_derivative,
    format_fraction,
    jet,
    q,
    to_fraction,
    total_derivative,
    total_derivative_n,
)
from .linalg import SpanReducer, nullspace

TPoly = tuple  # ascending Fraction coefficients, no trailing zeros


def tpoly(coeffs: Iterable) -> TPoly:
    out = [to_fraction(c) for c in coeffs]
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def _monomial(k: int, c=1) -> TPoly:
    return tpoly([0] * k + [c])


def tpoly_json(p: TPoly) -> list:
    return [format_fraction(c) for c in p]


@dataclass(frozen=True)
class PointSymmetry:
    """Infinitesimal point transformation (also read as the vector field psi d_t + phi_a d_qa)."""

    psi: TPoly
    linear: tuple
    shift: tuple
    quad: tuple | None = None

    @property
    def d(self) -> int:
        return len(self.shift)

    @classmethod
    def zero(cls, d: int) -> "PointSymmetry":
        return cls((), tuple(((),) * d for _ in range(d)), ((),) * d)

    @classmethod
    def from_vector(cls, vec: Mapping, d: int) -> "PointSymmetry":
        """Inverse of :meth:`to_vector`."""
        psi: dict = {}
        lin: dict = {}
        shift: dict = {}
        quad: dict = {}
        for key, c in vec.items():
            if not c:
                continue
            kind = key[0]
            if kind == "psi":
                psi[key[1]] = c
            elif kind == "lin":
                lin.setdefault((key[1], key[2]), {})[key[3]] = c
            elif kind == "shift":
                shift.setdefault(key[1], {})[key[2]] = c
            elif kind == "quad":
                quad.setdefault((key[1], key[2], key[3]), {})[key[4]] = c
            else:
                raise KeyError(key)

        def build(cs: Mapping) -> TPoly:
            if not cs:
                return ()
            return tpoly(cs.get(j, 0) for j in range(max(cs) + 1))

        linear = tuple(tuple(build(lin.get((a, b), {})) for b in range(d)) for a in range(d))
        shifts = tuple(build(shift.get(a, {})) for a in range(d))
        quads = None
        if quad:
            quads = tuple(
                tuple(tuple(build(quad.get((a, b, c), {})) for c in range(d)) for b in range(d))
                for a in range(d)
            )
        return cls(build(psi), linear, shifts, quads)

    def to_vector(self) -> dict:
        vec = {}
        for j, c in enumerate(self.psi):
            if c:
                vec[("psi", j)] = c
        d = self.d
        for a in range(d):
            for b in range(d):
                for j, c in enumerate(self.linear[a][b]):
                    if c:
                        vec[("lin", a, b, j)] = c
            for j, c in enumerate(self.shift[a]):
                if c:
                    vec[("shift", a, j)] = c
        if self.quad is not None:
            for a, b, c in itertools.product(range(d), repeat=3):
                for j, x in enumerate(self.quad[a][b][c]):
                    if x:
                        vec[("quad", a, b, c, j)] = x
        return vec

    # vector space structure -------------------------------------------

    def __add__(self, other: "PointSymmetry") -> "PointSymmetry":
        vec = self.to_vector()
        for k, c in other.to_vector().items():
            vec[k] = vec.get(k, 0) + c
        return PointSymmetry.from_vector(vec, self.d)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        s = to_fraction(scalar)
        return PointSymmetry.from_vector({k: c * s for k, c in self.to_vector().items()}, self.d)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PointSymmetry):
            return NotImplemented
        return self.d == other.d and self.to_vector() == other.to_vector()

    def __hash__(self):
        return hash(frozenset(self.to_vector().items()))

    def is_zero(self) -> bool:
        return not self.to_vector()

    # field components ---------------------------------------------------

    def has_quadratic(self) -> bool:
        return self.quad is not None and any(
            self.quad[a][b][c] for a, b, c in itertools.product(range(self.d), repeat=3)
        )

    def psi_poly(self) -> JetPolynomial:
        return JetPolynomial.from_tcoeffs(self.psi)

    def phi(self, a: int) -> JetPolynomial:
        """phi_a as a jet polynomial, ``a`` 1-based."""
        i = a - 1
        out = JetPolynomial.from_tcoeffs(self.shift[i])
        for b in range(self.d):
            coeffs = self.linear[i][b]
            if coeffs:
                out = out + JetPolynomial.from_tcoeffs(coeffs) * q(b + 1)
        if self.quad is not None:
            for b in range(self.d):
                for c in range(self.d):
                    coeffs = self.quad[i][b][c]
                    if coeffs:
                        out = out + JetPolynomial.from_tcoeffs(coeffs) * q(b + 1) * q(c + 1)
        return out

    def characteristic(self, a: int) -> JetPolynomial:
        """Evolutionary form phi_a - psi * q_a^(1)."""
        return self.phi(a) - self.psi_poly() * q(a, 1)

    @classmethod
    def from_fields(cls, psi: JetPolynomial, phis: list, d: int) -> "PointSymmetry":
        """Read back coefficients from psi(t) and phi_a(q, t) (at most quadratic in q)."""
        vec: dict = {}
        for mono, c in psi.terms.items():
            if any(v != TIME for v, _ in mono):
                raise ValueError("psi must depend on t only")
            vec[("psi", dict(mono).get(TIME, 0))] = c
        for a, phi in enumerate(phis):
            for mono, c in phi.terms.items():
                te = 0
                qs = []
                for v, e in mono:
                    if v == TIME:
                        te = e
                    elif v[0] == "q" and v[2] == 0:
                        qs.extend([v[1] - 1] * e)
                    else:
                        raise ValueError(f"phi depends on {v}")
                if not qs:
                    key = ("shift", a, te)
                elif len(qs) == 1:
                    key = ("lin", a, qs[0], te)
                elif len(qs) == 2:
                    key = ("quad", a, qs[0], qs[1], te)
                else:
                    raise ValueError("phi is more than quadratic in q")
                vec[key] = vec.get(key, 0) + c
        return cls.from_vector(vec, d)

    def to_json(self, gauge: JetPolynomial | None = None) -> dict:
        out = {
            "psi": tpoly_json(self.psi),
            "linear": [[tpoly_json(p) for p in row] for row in self.linear],
            "shift": [tpoly_json(p) for p in self.shift],
        }
        if self.has_quadratic():
            out["quad"] = [[[tpoly_json(p) for p in r] for r in m] for m in self.quad]
        if gauge is not None:
            out["gauge"] = gauge.to_json()
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "PointSymmetry":
        quad = None
        if "quad" in data:
            quad = tuple(tuple(tuple(tpoly(p) for p in r) for r in m) for m in data["quad"])
        return cls(
            tpoly(data["psi"]),
            tuple(tuple(tpoly(p) for p in row) for row in data["linear"]),
            tuple(tpoly(p) for p in data["shift"]),
            quad,
        )


GaugeTerm = JetPolynomial


# canonical generators -----------------------------------------------------


def _scalar_linear(d: int, coeffs: TPoly) -> tuple:
    return tuple(tuple(coeffs if a == b else () for b in range(d)) for a in range(d))


def generator_H(cfg: ModelConfig) -> PointSymmetry:
    return PointSymmetry((Fraction(1),), PointSymmetry.zero(cfg.d).linear, ((),) * cfg.d)


def generator_D(cfg: ModelConfig) -> PointSymmetry:
    return PointSymmetry(
        _monomial(1), _scalar_linear(cfg.d, (Fraction(cfg.N, 2),)), ((),) * cfg.d
    )


def generator_K(cfg: ModelConfig) -> PointSymmetry:
    return PointSymmetry(_monomial(2), _scalar_linear(cfg.d, _monomial(1, cfg.N)), ((),) * cfg.d)


def generator_J(cfg: ModelConfig, a: int, b: int) -> PointSymmetry:
    """Rotation q_a d/dq_b - q_b d/dq_a (1-based, a < b)."""
    d = cfg.d
    lin = [[() for _ in range(d)] for _ in range(d)]
    lin[b - 1][a - 1] = (Fraction(1),)
    lin[a - 1][b - 1] = (Fraction(-1),)
    return PointSymmetry((), tuple(tuple(r) for r in lin), ((),) * d)


def generator_C(cfg: ModelConfig, a: int, k: int) -> PointSymmetry:
    """Shift q_a -> q_a + eps t^k (1-based a)."""
    shift = [()] * cfg.d
    shift[a - 1] = _monomial(k)
    return PointSymmetry((), PointSymmetry.zero(cfg.d).linear, tuple(shift))


def rotation_pairs(d: int) -> list:
    return list(itertools.combinations(range(1, d + 1), 2))


def label_J(a: int, b: int) -> str:
    return f"J{a}{b}"


def label_C(a: int, k: int) -> str:
    return f"C{a}_{k}"


@dataclass(frozen=True)
class NamedBasis:
    """Canonical generators H, D, K, J_ab, C_ak (k = 0..k_max)."""

    cfg: ModelConfig
    k_max: int
    H: PointSymmetry
    D: PointSymmetry
    K: PointSymmetry
    J: dict = field(default_factory=dict)
    C: dict = field(default_factory=dict)

    @classmethod
    def canonical(cls, cfg: ModelConfig, k_max: int) -> "NamedBasis":
        return cls(
            cfg,
            k_max,
            generator_H(cfg),
            generator_D(cfg),
            generator_K(cfg),
            {ab: generator_J(cfg, *ab) for ab in rotation_pairs(cfg.d)},
            {
                (a, k): generator_C(cfg, a, k)
                for a in range(1, cfg.d + 1)
                for k in range(k_max + 1)
            },
        )

    def items(self) -> list:
        out = [("H", self.H), ("D", self.D), ("K", self.K)]
        out += [(label_J(*ab), self.J[ab]) for ab in rotation_pairs(self.cfg.d)]
        out += [
            (label_C(a, k), self.C[(a, k)])
            for a in range(1, self.cfg.d + 1)
            for k in range(self.k_max + 1)
        ]
        return out

    def labels(self) -> list:
        return [label for label, _ in self.items()]

    def __len__(self):
        return 3 + len(self.J) + len(self.C)

    def __getitem__(self, label: str) -> PointSymmetry:
        return dict(self.items())[label]


def rotation_part(X: PointSymmetry, cfg: ModelConfig) -> list:
    """linear(t) minus its dilation part ((2n-1)/2) psi'(t) * I."""
    dpsi = [c * k for k, c in enumerate(X.psi)][1:]
    scale = Fraction(cfg.N, 2)
    out = []
    for a in range(cfg.d):
        row = []
        for b in range(cfg.d):
            coeffs = list(X.linear[a][b])
            if a == b:
                coeffs += [Fraction(0)] * (len(dpsi) - len(coeffs))
                for k, c in enumerate(dpsi):
                    coeffs[k] -= scale * c
            row.append(tpoly(coeffs))
        out.append(row)
    return out


def expected_dimension(cfg: ModelConfig, restricted_gauge: bool = False) -> int:
    per_component = cfg.n + 1 if restricted_gauge else 2 * cfg.n
    return 3 + cfg.d * (cfg.d - 1) // 2 + per_component * cfg.d


def structure_facts(basis: list, cfg: ModelConfig, restricted: bool = False) -> dict:
    """Structural checks on a solver basis.

    psi is at most quadratic in t, the rotation part of the linear block is
    constant and antisymmetric, nothing is quadratic in q, the coefficient of
    q^(n) q^(n) in the defect vanishes, and shifts stay below the degree bound
    (n with a t-free gauge, 2n-1 otherwise).
    """
    omega_ok = True
    for X in basis:
        omega = rotation_part(X, cfg)
        for a in range(cfg.d):
            for b in range(cfg.d):
                w_ab, w_ba = omega[a][b], omega[b][a]
                if len(w_ab) > 1 or tuple(-c for c in w_ab) != w_ba:
                    omega_ok = False
    shift_deg = max((len(p) - 1 for X in basis for p in X.shift), default=-1)
    bound = cfg.n if restricted else 2 * cfg.n - 1
    top_ok = all(
        all(entry.is_zero() for row in coefficient_of_top_square(X, cfg) for entry in row)
        for X in basis
    )
    return {
        "psi_degree_le_2": all(len(X.psi) <= 3 for X in basis),
        "omega_constant_antisymmetric": omega_ok,
        "quadratic_part_zero": all(not X.has_quadratic() for X in basis),
        "top_square_coefficient_zero": top_ok,
        "shift_degree_max": shift_deg,
        "shift_degree_bound": bound,
        "shift_degree_ok": shift_deg <= bound,
    }


# prolongation and the Noether condition -----------------------------------


def prolong(X: PointSymmetry, k: int, cfg: ModelConfig) -> list:
    """delta q_a^(k) = D_t^k(phi_a - psi q_a^(1)) + psi q_a^(k+1) for a = 1..d."""
    if k > 2 * cfg.n + 1:
        raise OrderCapExceeded(f"prolongation order {k} above {2 * cfg.n + 1}")
    psi = X.psi_poly()
    out = []
    for a in range(1, cfg.d + 1):
        char = X.characteristic(a)
        out.append(total_derivative_n(char, k, cfg.order_cap) + psi * q(a, k + 1))
    return out


def noether_defect(X: PointSymmetry, cfg: ModelConfig) -> JetPolynomial:
    """First-order change of L dt under X: m q^(n).delta q^(n) + L psi'."""
    n = cfg.n
    variations = prolong(X, n, cfg)
    total = ZERO
    for a, dq in enumerate(variations, start=1):
        total = total + q(a, n) * dq
    total = total * cfg.m
    dpsi = total_derivative(X.psi_poly())
    if dpsi:
        top = ZERO
        for a in range(1, cfg.d + 1):
            top = top + q(a, n) ** 2
        total = total + top * dpsi * (cfg.m / 2)
    return total


def coefficient_of_top_square(X: PointSymmetry, cfg: ModelConfig) -> list:
    """Symmetric matrix of coefficients of q_a^(n) q_b^(n) in the Noether defect."""
    defect = noether_defect(X, cfg)
    n = cfg.n
    d = cfg.d
    out = [[ZERO] * d for _ in range(d)]
    for a in range(1, d + 1):
        for b in range(a, d + 1):
            if a == b:
                out[a - 1][a - 1] = defect.coefficient({jet(a, n): 2})
            else:
                c = defect.coefficient({jet(a, n): 1, jet(b, n): 1}) / 2
                out[a - 1][b - 1] = c
                out[b - 1][a - 1] = c
    return out


# determining system ---------------------------------------------------------


@dataclass(frozen=True)
class SymmetryAnsatz:
    """Degree caps of the polynomial search space."""

    deg_psi: int
    deg_linear: int
    deg_shift: int
    include_quadratic: bool = True
    allow_explicit_t_gauge: bool = True

    @classmethod
    def default(
        cls,
        cfg: ModelConfig,
        cap: int | None = None,
        include_quadratic: bool = True,
        allow_explicit_t_gauge: bool = True,
    ) -> "SymmetryAnsatz":
        if cap is None:
            cap = 2 * cfg.n + 2
        return cls(cap, cap, cap, include_quadratic, allow_explicit_t_gauge)

    def unknowns(self, d: int) -> list:
        keys = [("psi", j) for j in range(self.deg_psi + 1)]
        keys += [
            ("lin", a, b, j)
            for a in range(d)
            for b in range(d)
            for j in range(self.deg_linear + 1)
        ]
        keys += [("shift", a, j) for a in range(d) for j in range(self.deg_shift + 1)]
        if self.include_quadratic:
            keys += [
                ("quad", a, b, c, j)
                for a in range(d)
                for b in range(d)
                for c in range(b, d)
                for j in range(self.deg_linear + 1)
            ]
        return keys


def gauge_monomials(cfg: ModelConfig, max_degree: int = 2) -> list:
    """t-free jet monomials of order <= n-1 and degree 1..max_degree."""
    variables = [jet(a, k) for a in range(1, cfg.d + 1) for k in range(cfg.n)]
    monos = []
    for deg in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(variables, deg):
            counts: dict = {}
            for v in combo:
                counts[v] = counts.get(v, 0) + 1
            monos.append(tuple(sorted(counts.items())))
    return monos


@dataclass
class DeterminingSystem:
    cfg: ModelConfig
    ansatz: SymmetryAnsatz
    unknowns: list
    gauge_unknowns: list
    rows: list
    order: list

    @property
    def ncols(self) -> int:
        return len(self.unknowns) + len(self.gauge_unknowns)


def _t_degree_of_key(key) -> int:
    return key[-1]


def build_determining_system(cfg: ModelConfig, ansatz: SymmetryAnsatz) -> DeterminingSystem:
    """Linear homogeneous constraints on the ansatz coefficients.

    With an explicit-t gauge the Noether defect must be annihilated by every
    Euler operator; otherwise it must equal D_t f for a t-free f of jet
    order <= n-1, whose coefficients join the unknowns.
    """
    d = cfg.d
    unknowns = ansatz.unknowns(d)
    row_index: dict = {}
    rows: list = []

    def put(rkey, col, c):
        if rkey not in row_index:
            row_index[rkey] = len(rows)
            rows.append({})
        rows[row_index[rkey]][col] = c

    for col, key in enumerate(unknowns):
        X = PointSymmetry.from_vector({key: Fraction(1)}, d)
        defect = noether_defect(X, cfg)
        if ansatz.allow_explicit_t_gauge:
            for a in range(1, d + 1):
                for mono, c in euler_derivative(defect, a, cfg).terms.items():
                    put((a, mono), col, c)
        else:
            for mono, c in defect.terms.items():
                put(mono, col, c)

    gauge = [] if ansatz.allow_explicit_t_gauge else gauge_monomials(cfg)
    for i, mono in enumerate(gauge):
        col = len(unknowns) + i
        image = total_derivative(JetPolynomial({mono: 1}))
        for m2, c in image.terms.items():
            put(m2, col, -c)

    # gauge columns first, then ansatz columns by descending t-degree
    ansatz_order = sorted(
        range(len(unknowns)), key=lambda i: (-_t_degree_of_key(unknowns[i]), i)
    )
    order = [len(unknowns) + i for i in range(len(gauge))] + ansatz_order
    return DeterminingSystem(cfg, ansatz, unknowns, gauge, rows, order)


def solve_symmetries(system: DeterminingSystem) -> list:
    """Exact nullspace basis of the determining system as point symmetries."""
    vectors = nullspace(system.rows, system.ncols, system.order)
    nk = len(system.unknowns)
    out = []
    for vec in vectors:
        coords = {system.unknowns[i]: vec[i] for i in range(nk) if vec[i]}
        out.append(PointSymmetry.from_vector(coords, system.cfg.d))
    return out


def derive_symmetries(
    cfg: ModelConfig,
    cap: int | None = None,
    include_quadratic: bool = True,
    restricted_gauge: bool = False,
) -> list:
    ansatz = SymmetryAnsatz.default(
        cfg, cap, include_quadratic, allow_explicit_t_gauge=not restricted_gauge
    )
    return solve_symmetries(build_determining_system(cfg, ansatz))


def reconstruct_gauge(
    X: PointSymmetry, cfg: ModelConfig, restrict_t_free: bool = False
) -> GaugeTerm | None:
    """Gauge term f with D_t f equal to the Noether defect, or ``None``."""
    return antiderivative_time(noether_defect(X, cfg), cfg, restrict_t_free)


def classify(basis: list, cfg: ModelConfig) -> NamedBasis:
    """Change of basis from solver output to the canonical generators.

    Each vector is decomposed greedily in the order H, D, K, J, C; any
    leftover or a rank deficit raises :class:`ClassificationFailed`.
    """
    if not basis:
        raise ClassificationFailed("empty basis")
    d = cfg.d
    H, D, K = generator_H(cfg), generator_D(cfg), generator_K(cfg)
    decompositions = []
    k_max = -1
    for X in basis:
        if X.has_quadratic():
            raise ClassificationFailed("basis element has a quadratic part", X)
        coords: dict = {}
        psi = list(X.psi) + [Fraction(0)] * 3
        if any(psi[3:]):
            raise ClassificationFailed("psi has degree above 2", X)
        rest = X - H * psi[0] - D * psi[1] - K * psi[2]
        for name, c in zip("HDK", psi):
            if c:
                coords[name] = c
        for a, b in rotation_pairs(d):
            coeffs = rest.linear[b - 1][a - 1]
            if coeffs and coeffs[0]:
                coords[label_J(a, b)] = coeffs[0]
                rest = rest - generator_J(cfg, a, b) * coeffs[0]
        for a in range(1, d + 1):
            for k, c in enumerate(rest.shift[a - 1]):
                if c:
                    coords[label_C(a, k)] = c
                    k_max = max(k_max, k)
            if rest.shift[a - 1]:
                shift = list(rest.shift)
                shift[a - 1] = ()
                rest = PointSymmetry(rest.psi, rest.linear, tuple(shift), rest.quad)
        if not rest.is_zero():
            raise ClassificationFailed("basis element is not a canonical combination", rest)
        decompositions.append(coords)

    named = NamedBasis.canonical(cfg, max(k_max, 0))
    labels = named.labels()
    reducer = SpanReducer(decompositions)
    if reducer.rank != len(labels) or len(basis) != len(labels):
        missing = []
        for label in labels:
            _, residual = reducer.express({label: 1})
            if residual:
                missing.append(label)
        raise ClassificationFailed(
            f"span mismatch: rank {reducer.rank} for {len(labels)} canonical generators "
            f"from {len(basis)} vectors; missing {missing}",
            missing,
        )
    return named
