import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import strategies as st

from noether_gca.jet_algebra import TIME, JetPolynomial, jet

T = sp.Symbol("t")


def sympy_coords(d):
    return [sp.Function(f"q{a}")(T) for a in range(1, d + 1)]


def to_sympy(p: JetPolynomial, d: int):
    """Independent rendering of a jet polynomial as a sympy expression in q_a(t)."""
    qs = sympy_coords(d)
    expr = sp.Integer(0)
    for mono, c in p.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for v, e in mono:
            if v == TIME:
                term *= T**e
            elif v[0] == "q":
                base = qs[v[1] - 1] if v[2] == 0 else sp.Derivative(qs[v[1] - 1], (T, v[2]))
                term *= base**e
            else:
                raise ValueError(v)
        expr += term
    return expr


def random_poly(rng: random.Random, d: int = 1, order: int = 2, degree: int = 2,
                t_degree: int = 2, terms: int = 4) -> JetPolynomial:
    variables = [jet(a, k) for a in range(1, d + 1) for k in range(order + 1)]
    out = {}
    for _ in range(terms):
        exps = {}
        for _ in range(rng.randint(0, degree)):
            v = rng.choice(variables)
            exps[v] = exps.get(v, 0) + 1
        te = rng.randint(0, t_degree)
        if te:
            exps[TIME] = te
        mono = tuple(sorted(exps.items()))
        out[mono] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return JetPolynomial(out)


coefficients = st.fractions(min_value=-4, max_value=4, max_denominator=4)


@st.composite
def jet_polys(draw, d=2, order=2, max_terms=4, max_degree=2):
    """Small random jet polynomials for property tests."""
    variables = [TIME] + [jet(a, k) for a in range(1, d + 1) for k in range(order + 1)]
    n_terms = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n_terms):
        chosen = draw(st.lists(st.sampled_from(variables), max_size=max_degree))
        exps = {}
        for v in chosen:
            exps[v] = exps.get(v, 0) + 1
        terms[tuple(sorted(exps.items()))] = draw(coefficients)
    return JetPolynomial(terms)


@pytest.fixture
def rng():
    return random.Random(20240601)


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary


def pytest_configure(config):
    config._acceptance_results = []


@pytest.fixture
def acceptance(request):
    results = request.config._acceptance_results

    def record(number, description, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {description}"
        if detail:
            line += f" ({detail})"
        results.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
