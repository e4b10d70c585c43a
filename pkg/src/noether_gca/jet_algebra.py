"""Exact polynomial algebra on the jet space of t and q_a^(k).

Variables are plain tuples so that monomials hash and sort cheaply:

* ``TIME == ("t",)``
* ``("q", a, k)`` for the jet coordinate q_a^(k), ``a`` is 1-based
* ``("Q", a, j)`` / ``("P", a, j)`` for Ostrogradski phase-space coordinates

A monomial is a sorted tuple of ``(variable, exponent)`` pairs and a
polynomial maps monomials to nonzero :class:`fractions.Fraction` coefficients.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import MissingAssignment, OrderCapExceeded

TIME = ("t",)

Variable = tuple
Monomial = tuple


def jet(a: int, k: int) -> Variable:
    return ("q", a, k)


def phase_q(a: int, j: int) -> Variable:
    return ("Q", a, j)


def phase_p(a: int, j: int) -> Variable:
    return ("P", a, j)


def is_jet(v: Variable) -> bool:
    return v[0] == "q"


def var_name(v: Variable) -> str:
    if v == TIME:
        return "t"
    return f"{v[0]}{v[1]}^{v[2]}"


_VAR_RE = re.compile(r"^([qQP])(\d+)\^(\d+)$")


def parse_var(name: str) -> Variable:
    if name == "t":
        return TIME
    match = _VAR_RE.match(name)
    if match is None:
        raise ValueError(f"not a variable name: {name!r}")
    return (match.group(1), int(match.group(2)), int(match.group(3)))


def to_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to :class:`Fraction`."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact arithmetic")
    return Fraction(x)


def format_fraction(x) -> str:
    x = to_fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class ModelConfig:
    """Parameters of the free Lagrangian L = (m/2) |q^(n)|^2 in d dimensions."""

    n: int
    d: int
    m: Fraction = Fraction(1)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        m = to_fraction(self.m)
        if m <= 0:
            raise ValueError(f"mass must be positive, got {m}")
        object.__setattr__(self, "m", m)

    @property
    def N(self) -> int:
        return 2 * self.n - 1

    @property
    def order_cap(self) -> int:
        return 2 * self.n + 2


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for v, e in m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _mono_key(mono: Monomial):
    degree = sum(e for _, e in mono)
    t_exp = 0
    rest = []
    for v, e in mono:
        if v == TIME:
            t_exp = e
        else:
            rest.append((v, e))
    return (degree, t_exp, tuple(rest))


class JetPolynomial:
    """Immutable multivariate polynomial with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = to_fraction(c)
                if c:
                    clean[mono] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "JetPolynomial":
        # caller guarantees Fraction coefficients with zeros removed
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, c) -> "JetPolynomial":
        return cls({(): c})

    @classmethod
    def var(cls, v: Variable, exp: int = 1) -> "JetPolynomial":
        if exp == 0:
            return cls.constant(1)
        return cls._raw({((v, exp),): Fraction(1)})

    @classmethod
    def from_tcoeffs(cls, coeffs: Iterable) -> "JetPolynomial":
        """Polynomial in t from an ascending coefficient list."""
        terms = {}
        for k, c in enumerate(coeffs):
            c = to_fraction(c)
            if c:
                terms[((TIME, k),) if k else ()] = c
        return cls._raw(terms)

    # basic protocol ----------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        """Terms in canonical (graded lexicographic) order."""
        return sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0]))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, JetPolynomial):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"JetPolynomial({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.items():
            factors = [
                var_name(v) if e == 1 else f"{var_name(v)}**{e}" for v, e in mono
            ]
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"({c})*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    # ring operations ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if not other._terms:
            return self
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return JetPolynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return JetPolynomial._raw({mono: -c for mono, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return JetPolynomial._raw({})
            return JetPolynomial._raw(
                {mono: c * other for mono, c in self._terms.items()}
            )
        other = _coerce(other)
        out = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = _mono_mul(m1, m2)
                out[mono] = out.get(mono, 0) + c1 * c2
        return JetPolynomial._raw({k: v for k, v in out.items() if v})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, str)):
            return self * (1 / to_fraction(other))
        return NotImplemented

    def __pow__(self, exp: int):
        if not isinstance(exp, int) or exp < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = JetPolynomial.constant(1)
        base = self
        while exp:
            if exp & 1:
                result = result * base
            base = base * base
            exp >>= 1
        return result

    # structure ---------------------------------------------------------

    def variables(self) -> set:
        return {v for mono in self._terms for v, _ in mono}

    def degree(self, predicate=None) -> int:
        """Largest total degree in the variables accepted by ``predicate``."""
        best = 0
        for mono in self._terms:
            deg = sum(e for v, e in mono if predicate is None or predicate(v))
            best = max(best, deg)
        return best

    def jet_degree(self) -> int:
        return self.degree(is_jet)

    def t_degree(self) -> int:
        return self.degree(lambda v: v == TIME)

    def jet_order(self) -> int:
        """Highest derivative order k among q_a^(k); -1 if no jets occur."""
        orders = [v[2] for v in self.variables() if is_jet(v)]
        return max(orders, default=-1)

    def components(self) -> set:
        return {v[1] for v in self.variables() if is_jet(v)}

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def coefficient(self, factor: Mapping[Variable, int]) -> "JetPolynomial":
        """Coefficient of the monomial ``factor`` treating its variables as main variables.

        Terms whose exponents in the main variables differ from ``factor``
        are dropped; the main variables are removed from the rest.
        """
        main = set(factor)
        out = {}
        for mono, c in self._terms.items():
            exps = {v: e for v, e in mono if v in main}
            if all(exps.get(v, 0) == e for v, e in factor.items()):
                rest = tuple((v, e) for v, e in mono if v not in main)
                out[rest] = out.get(rest, 0) + c
        return JetPolynomial._raw({k: v for k, v in out.items() if v})

    def diff(self, v: Variable) -> "JetPolynomial":
        out = {}
        for mono, c in self._terms.items():
            for i, (w, e) in enumerate(mono):
                if w == v:
                    if e == 1:
                        new = mono[:i] + mono[i + 1 :]
                    else:
                        new = mono[:i] + ((w, e - 1),) + mono[i + 1 :]
                    out[new] = out.get(new, 0) + c * e
                    break
        return JetPolynomial._raw({k: v for k, v in out.items() if v})

    def subs(self, mapping: Mapping[Variable, object]) -> "JetPolynomial":
        """Substitute polynomials (or scalars) for variables."""
        mapping = {v: _coerce(p) for v, p in mapping.items()}
        powers: dict = {}
        result = JetPolynomial._raw({})
        for mono, c in self._terms.items():
            term = JetPolynomial._raw({(): c})
            kept = []
            for v, e in mono:
                if v in mapping:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = mapping[v] ** e
                    term = term * powers[key]
                else:
                    kept.append((v, e))
            if kept:
                term = term * JetPolynomial._raw({tuple(kept): Fraction(1)})
            result = result + term
        return result

    def map_monomials(self, fn) -> "JetPolynomial":
        """Rebuild with ``fn(monomial, coeff) -> (monomial, coeff) | None``."""
        out = {}
        for mono, c in self._terms.items():
            res = fn(mono, c)
            if res is None:
                continue
            new, c2 = res
            out[new] = out.get(new, 0) + c2
        return JetPolynomial._raw({k: v for k, v in out.items() if v})

    def evaluate(self, assignment: Mapping[Variable, object]):
        """Exact value under ``assignment``; raises :class:`MissingAssignment`."""
        total = Fraction(0)
        for mono, c in self._terms.items():
            value = c
            for v, e in mono:
                try:
                    x = assignment[v]
                except KeyError:
                    raise MissingAssignment(v) from None
                value = value * to_fraction(x) ** e
            total += value
        return total

    # serialization -----------------------------------------------------

    def to_json(self) -> list:
        return [
            {
                "monomial": [[var_name(v), e] for v, e in mono],
                "coeff": format_fraction(c),
            }
            for mono, c in self.items()
        ]

    @classmethod
    def from_json(cls, data: list) -> "JetPolynomial":
        terms = {}
        for entry in data:
            mono = tuple(sorted((parse_var(name), int(e)) for name, e in entry["monomial"]))
            terms[mono] = terms.get(mono, 0) + to_fraction(entry["coeff"])
        return cls(terms)


def _coerce(x) -> JetPolynomial:
    if isinstance(x, JetPolynomial):
        return x
    if isinstance(x, (int, Fraction, str)):
        return JetPolynomial.constant(x)
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


ZERO = JetPolynomial()
ONE = JetPolynomial.constant(1)


def t_var() -> JetPolynomial:
    return JetPolynomial.var(TIME)


def q(a: int, k: int = 0) -> JetPolynomial:
    return JetPolynomial.var(jet(a, k))


# calculus on the jet space ----------------------------------------------


def free_lagrangian(cfg: ModelConfig) -> JetPolynomial:
    """(m/2) * sum_a (q_a^(n))^2."""
    total = ZERO
    for a in range(1, cfg.d + 1):
        total = total + q(a, cfg.n) ** 2
    return total * (cfg.m / 2)


def total_derivative(p: JetPolynomial, cap: int | None = None) -> JetPolynomial:
    """D_t p = dp/dt + sum q_a^(k+1) dp/dq_a^(k).

    Phase-space variables are treated as constants. With ``cap`` set, a term
    that would need q^(cap+1) raises :class:`OrderCapExceeded`.
    """
    out: dict = {}
    for mono, c in p._terms.items():
        for i, (v, e) in enumerate(mono):
            if v == TIME:
                if e == 1:
                    new = mono[:i] + mono[i + 1 :]
                else:
                    new = mono[:i] + ((v, e - 1),) + mono[i + 1 :]
                out[new] = out.get(new, 0) + c * e
            elif v[0] == "q":
                if cap is not None and v[2] >= cap:
                    raise OrderCapExceeded(
                        f"D_t of {var_name(v)} exceeds order cap {cap}"
                    )
                lowered = mono[:i] + (((v, e - 1),) if e > 1 else ()) + mono[i + 1 :]
                new = _mono_mul(lowered, (((v[0], v[1], v[2] + 1), 1),))
                out[new] = out.get(new, 0) + c * e
    return JetPolynomial._raw({k: v for k, v in out.items() if v})


def total_derivative_n(p: JetPolynomial, times: int, cap: int | None = None) -> JetPolynomial:
    for _ in range(times):
        if not p:
            break
        p = total_derivative(p, cap)
    return p


def euler_derivative(p: JetPolynomial, a: int, cfg: ModelConfig) -> JetPolynomial:
    """sum_k (-D_t)^k dp/dq_a^(k)."""
    if not 1 <= a <= cfg.d:
        raise ValueError(f"component {a} outside 1..{cfg.d}")
    orders = [v[2] for v in p.variables() if is_jet(v) and v[1] == a]
    result = ZERO
    for k in range(max(orders, default=-1) + 1):
        partial = p.diff(jet(a, k))
        if not partial:
            continue
        term = total_derivative_n(partial, k, cfg.order_cap)
        result = result + (term if k % 2 == 0 else -term)
    return result


def is_total_derivative(p: JetPolynomial, cfg: ModelConfig) -> bool:
    """Euler criterion: p = D_t f for some polynomial f."""
    return all(euler_derivative(p, a, cfg).is_zero() for a in range(1, cfg.d + 1))


def antiderivative_time(
    p: JetPolynomial, cfg: ModelConfig, restrict_t_free: bool = False
) -> JetPolynomial | None:
    """Find f with D_t f = p, or ``None`` when no polynomial f exists.

    The search space is bounded by the jet order, jet degree and t-degree
    of ``p``; these bounds are exact for polynomial antiderivatives. The
    additive constant of f is dropped. With ``restrict_t_free`` the
    antiderivative may not depend explicitly on t.
    """
    from .linalg import solve

    if not p:
        return ZERO
    order = p.jet_order() - 1
    degree = p.jet_degree()
    t_max = 0 if restrict_t_free else p.t_degree() + 1
    comps = sorted(p.components())
    jet_vars = [jet(a, k) for a in comps for k in range(order + 1)]

    ansatz = []
    for deg in range(degree + 1):
        for combo in itertools.combinations_with_replacement(jet_vars, deg):
            counts: dict = {}
            for v in combo:
                counts[v] = counts.get(v, 0) + 1
            base = tuple(sorted(counts.items()))
            for te in range(t_max + 1):
                if deg == 0 and te == 0:
                    continue
                mono = _mono_mul(base, ((TIME, te),)) if te else base
                ansatz.append(mono)
    if not ansatz:
        return None

    images = [total_derivative(JetPolynomial._raw({mono: Fraction(1)})) for mono in ansatz]
    row_index: dict = {}
    rows: list = []
    for col, img in enumerate(images):
        for mono, c in img._terms.items():
            if mono not in row_index:
                row_index[mono] = len(rows)
                rows.append({})
            rows[row_index[mono]][col] = c
    rhs = [Fraction(0)] * len(rows)
    for mono, c in p._terms.items():
        if mono not in row_index:
            return None
        rhs[row_index[mono]] = c
    sol = solve(rows, rhs, len(ansatz))
    if sol is None:
        return None
    f = JetPolynomial({mono: x for mono, x in zip(ansatz, sol) if x})
    if total_derivative(f) != p:
        return None
    return f


def on_shell_reduce(p: JetPolynomial, cfg: ModelConfig) -> JetPolynomial:
    """Impose q^(2n) = 0 and its consequences: drop every term with q^(k>=2n)."""
    cutoff = 2 * cfg.n

    def keep(mono, c):
        if any(is_jet(v) and v[2] >= cutoff for v, _ in mono):
            return None
        return mono, c

    return p.map_monomials(keep)


def evaluate(p: JetPolynomial, assignment: Mapping[Variable, object]) -> Fraction:
    return p.evaluate(assignment)
