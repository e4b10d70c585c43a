"""Ostrogradski phase space, Noether charges and exact solutions.

Phase coordinates are Q_a^(j) = q_a^(j) and the Ostrogradski momenta
P_a^(j), j = 0..n-1, with canonical brackets {Q_a^(j), P_b^(k)} = delta.
For the free Lagrangian the momenta are P_a^(j) = (-1)^(n-j-1) m q_a^(2n-1-j).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Mapping, Sequence

from .lie_structure import structure_table
from .errors import InvalidRotation, NonCanonicalResidual, NotConserved, OrderTooHigh
from .jet_algebra import (
    TIME,
    ZERO,
    JetPolynomial,
    ModelConfig,
    format_fraction,
    free_lagrangian,
    is_jet,
    jet,
    phase_p,
    phase_q,
    to_fraction,
    total_derivative_n,
)
from .symmetry_solver import NamedBasis, PointSymmetry, reconstruct_gauge

PhasePolynomial = JetPolynomial


def Q(a: int, j: int) -> JetPolynomial:
    return JetPolynomial.var(phase_q(a, j))


def P(a: int, j: int) -> JetPolynomial:
    return JetPolynomial.var(phase_p(a, j))


# trajectories ------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """q_a(t) = sum_k coeff[a][k] t^k, one row per component."""

    coeff: tuple

    @property
    def d(self) -> int:
        return len(self.coeff)

    def poly(self, a: int) -> JetPolynomial:
        return JetPolynomial.from_tcoeffs(self.coeff[a - 1])

    def degree(self) -> int:
        deg = -1
        for row in self.coeff:
            for k, c in enumerate(row):
                if c:
                    deg = max(deg, k)
        return deg

    def derivative(self, a: int, k: int, t) -> Fraction:
        """k-th time derivative of q_a at t."""
        t = to_fraction(t)
        total = Fraction(0)
        for i, c in enumerate(self.coeff[a - 1]):
            if i >= k and c:
                total += c * factorial(i) / factorial(i - k) * t ** (i - k)
        return total

    def to_json(self) -> dict:
        return {"coeff": [[format_fraction(c) for c in row] for row in self.coeff]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Trajectory":
        return cls(tuple(tuple(Fraction(c) for c in row) for row in data["coeff"]))


def check_initial(initial: Mapping, cfg: ModelConfig) -> dict:
    values = {}
    missing = []
    for a in range(1, cfg.d + 1):
        for k in range(2 * cfg.n):
            if (a, k) in initial:
                values[(a, k)] = initial[(a, k)]
            else:
                missing.append(f"q{a}^{k}")
    if missing:
        raise ValueError("missing initial jets: " + ", ".join(missing))
    return values


def general_solution(initial: Mapping, t0, cfg: ModelConfig) -> Trajectory:
    """Polynomial solution of q^(2n) = 0 with q_a^(k)(t0) = initial[(a, k)]."""
    values = {key: to_fraction(v) for key, v in check_initial(initial, cfg).items()}
    t0 = to_fraction(t0)
    size = 2 * cfg.n
    rows = []
    for a in range(1, cfg.d + 1):
        coeffs = [Fraction(0)] * size
        for k in range(size):
            taylor = values[(a, k)] / factorial(k)
            if not taylor:
                continue
            # (t - t0)^k expanded
            for i in range(k + 1):
                coeffs[i] += taylor * comb(k, i) * (-t0) ** (k - i)
        rows.append(tuple(coeffs))
    return Trajectory(tuple(rows))


# Ostrogradski construction ------------------------------------------------------


def ostrogradski_momenta(cfg: ModelConfig) -> list:
    """momenta[j][a-1] = sum_{k=j+1}^{n} (-D_t)^(k-j-1) dL/dq_a^(k)."""
    L = free_lagrangian(cfg)
    n = cfg.n
    out = []
    for j in range(n):
        row = []
        for a in range(1, cfg.d + 1):
            p = ZERO
            for k in range(j + 1, n + 1):
                steps = k - j - 1
                term = total_derivative_n(L.diff(jet(a, k)), steps, cfg.order_cap)
                p = p + (term if steps % 2 == 0 else -term)
            row.append(p)
        out.append(row)
    return out


def ostrogradski_hamiltonian(cfg: ModelConfig) -> PhasePolynomial:
    """sum_{j<n-1} P^(j).Q^(j+1) + |P^(n-1)|^2 / 2m."""
    n = cfg.n
    H = ZERO
    for a in range(1, cfg.d + 1):
        for j in range(n - 1):
            H = H + P(a, j) * Q(a, j + 1)
        H = H + P(a, n - 1) ** 2 / (2 * cfg.m)
    return H


def to_phase(p: JetPolynomial, cfg: ModelConfig) -> PhasePolynomial:
    """Rewrite jets in phase coordinates, valid on solutions of q^(2n) = 0."""
    n = cfg.n
    if p.jet_order() >= 2 * n:
        raise OrderTooHigh(f"jet order {p.jet_order()} has no phase-space image (n={n})")
    mapping = {}
    for v in p.variables():
        if not is_jet(v):
            continue
        _, a, k = v
        if k < n:
            mapping[v] = Q(a, k)
        else:
            i = k - n
            mapping[v] = P(a, n - 1 - i) * (Fraction((-1) ** i) / cfg.m)
    return p.subs(mapping)


def poisson_bracket(F: PhasePolynomial, G: PhasePolynomial) -> PhasePolynomial:
    """Canonical bracket with {Q_a^(j), P_b^(k)} = delta_ab delta_jk."""
    pairs = {
        (v[1], v[2]) for v in F.variables() | G.variables() if v[0] in ("Q", "P")
    }
    out = ZERO
    for a, j in sorted(pairs):
        qv, pv = phase_q(a, j), phase_p(a, j)
        out = out + F.diff(qv) * G.diff(pv) - F.diff(pv) * G.diff(qv)
    return out


@dataclass(frozen=True)
class Charge:
    label: str
    value: PhasePolynomial
    generator: PointSymmetry | None = None
    gauge: JetPolynomial | None = None


def conservation_defect(c, cfg: ModelConfig) -> PhasePolynomial:
    """dJ/dt + {J, H}; zero exactly when J is a constant of motion."""
    value = c.value if isinstance(c, Charge) else c
    return value.diff(TIME) + poisson_bracket(value, ostrogradski_hamiltonian(cfg))


def charge_jet(X: PointSymmetry, f: JetPolynomial, cfg: ModelConfig) -> JetPolynomial:
    """Jet-space Noether charge f - psi L - sum_{a,j} p_a^(j) D_t^j(phi_a - psi q_a^(1)).

    The overall sign makes the time-translation charge equal to +H.
    """
    momenta = ostrogradski_momenta(cfg)
    J = f - X.psi_poly() * free_lagrangian(cfg)
    for a in range(1, cfg.d + 1):
        char = X.characteristic(a)
        for j in range(cfg.n):
            J = J - momenta[j][a - 1] * total_derivative_n(char, j, cfg.order_cap)
    return J


def noether_charge(X: PointSymmetry, f: JetPolynomial, cfg: ModelConfig, label: str = "") -> Charge:
    value = to_phase(charge_jet(X, f, cfg), cfg)
    if not conservation_defect(value, cfg).is_zero():
        raise NotConserved(f"charge {label or X} is not conserved")
    return Charge(label, value, X, f)


def noether_charges(named, cfg: ModelConfig, restrict_t_free: bool = False) -> list:
    """Charges for a :class:`NamedBasis` or any sequence of ``(label, generator)``."""
    items = named.items() if isinstance(named, NamedBasis) else list(named)
    out = []
    for label, X in items:
        f = reconstruct_gauge(X, cfg, restrict_t_free)
        if f is None:
            raise NotConserved(f"{label} has no polynomial gauge term")
        out.append(noether_charge(X, f, cfg, label))
    return out


@dataclass
class CentralTable:
    """Constant parts of {J_X, J_Y} - J_[X,Y] for label pairs (i < j)."""

    labels: list
    entries: dict

    def nonzero(self) -> dict:
        return {pair: c for pair, c in self.entries.items() if c}

    def entry(self, x: str, y: str) -> Fraction:
        if (x, y) in self.entries:
            return self.entries[(x, y)]
        return -self.entries.get((y, x), Fraction(0))

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "central": {f"[{x},{y}]": format_fraction(c) for (x, y), c in self.nonzero().items()},
        }


def charge_algebra(charges: Sequence[Charge], cfg: ModelConfig) -> CentralTable:
    """Compare Poisson brackets of charges with the vector-field brackets."""
    table = structure_table([(c.label, c.generator) for c in charges])
    by_label = {c.label: c for c in charges}
    labels = [c.label for c in charges]
    entries = {}
    for i, x in enumerate(labels):
        for y in labels[i + 1 :]:
            pb = poisson_bracket(by_label[x].value, by_label[y].value)
            for z, c in table.coeffs.get((x, y), {}).items():
                pb = pb - by_label[z].value * c
            if pb.variables():
                raise NonCanonicalResidual(f"{{J_{x}, J_{y}}} - J_[{x},{y}] = {pb}")
            entries[(x, y)] = pb.constant_term()
    return CentralTable(labels, entries)


# finite transformations ----------------------------------------------------------


@dataclass(frozen=True)
class TimeShift:
    tau: object


@dataclass(frozen=True)
class Dilation:
    """t' = sigma^2 t, q' = sigma^(2n-1) q."""

    sigma: object


@dataclass(frozen=True)
class Conformal:
    """q'(t') = (1 + c t')^(2n-1) q(t' / (1 + c t'))."""

    c: object


@dataclass(frozen=True)
class Rotation:
    R: tuple


@dataclass(frozen=True)
class Shift:
    a: int
    k: int
    v: object


def finite_transform(kind, traj: Trajectory, cfg: ModelConfig) -> Trajectory:
    """Image of a solution under a finite symmetry; again a solution.

    Arithmetic only uses ring operations on the parameter, so formal
    parameters (e.g. dual numbers) pass through unchanged.
    """
    size = 2 * cfg.n
    N = cfg.N
    rows = [list(row) + [0] * (size - len(row)) for row in traj.coeff]

    if isinstance(kind, TimeShift):
        out = []
        for row in rows:
            new = [0] * size
            for k, c in enumerate(row):
                for j in range(k + 1):
                    new[j] = new[j] + c * comb(k, j) * (-kind.tau) ** (k - j)
            out.append(new)
    elif isinstance(kind, Dilation):
        if not kind.sigma > 0:
            raise ValueError("dilation parameter must be positive")
        out = [[c * kind.sigma ** (N - 2 * k) for k, c in enumerate(row)] for row in rows]
    elif isinstance(kind, Conformal):
        out = []
        for row in rows:
            new = [0] * size
            for k, c in enumerate(row):
                for j in range(N - k + 1):
                    new[k + j] = new[k + j] + c * comb(N - k, j) * kind.c ** j
            out.append(new)
    elif isinstance(kind, Rotation):
        R = kind.R
        d = cfg.d
        for i in range(d):
            for j in range(d):
                dot = sum((R[k][i] * R[k][j] for k in range(d)), 0)
                if dot != (1 if i == j else 0):
                    raise InvalidRotation("R^T R != I")
        out = [
            [sum((R[i][b] * rows[b][k] for b in range(d)), 0) for k in range(size)]
            for i in range(d)
        ]
    elif isinstance(kind, Shift):
        out = [list(row) for row in rows]
        out[kind.a - 1][kind.k] = out[kind.a - 1][kind.k] + kind.v
    else:
        raise TypeError(f"unknown transformation {kind!r}")
    return Trajectory(tuple(tuple(row) for row in out))


def cayley_rotation(A) -> tuple:
    """Cayley transform (I - A)^-1 (I + A) of a rational antisymmetric matrix."""
    d = len(A)
    A = [[to_fraction(x) for x in row] for row in A]
    M = [[(1 if i == j else 0) - A[i][j] for j in range(d)] for i in range(d)]
    B = [[(1 if i == j else 0) + A[i][j] for j in range(d)] for i in range(d)]
    # Gauss-Jordan on [M | B]
    aug = [M[i] + B[i] for i in range(d)]
    for col in range(d):
        piv = next(r for r in range(col, d) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(d):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[d:]) for row in aug)


def infinitesimal_action(X: PointSymmetry, traj: Trajectory, cfg: ModelConfig) -> list:
    """First-order change of a trajectory: phi_a(q(t), t) - psi(t) q_a'(t), as t-coefficients."""
    size = 2 * cfg.n + 2
    mapping = {}
    for b in range(1, cfg.d + 1):
        poly = traj.poly(b)
        mapping[jet(b, 0)] = poly
        mapping[jet(b, 1)] = poly.diff(TIME)
    out = []
    for a in range(1, cfg.d + 1):
        p = X.characteristic(a).subs(mapping)
        coeffs = [Fraction(0)] * size
        for mono, c in p.terms.items():
            coeffs[dict(mono).get(TIME, 0)] += c
        out.append(coeffs)
    return out
