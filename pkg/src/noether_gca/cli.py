"""Command line entry point: ``noether-gca {derive,algebra,charges,simulate,report}``.

Exit codes: 0 verified, 1 verification failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lie_structure import expected_table, jacobi_check, structure_table, verify_table
from .dynamics import (
    CentralTable,
    Charge,
    charge_algebra,
    charge_jet,
    check_initial,
    conservation_defect,
    to_phase,
)
from .errors import ClassificationFailed, NotClosed
from .jet_algebra import JetPolynomial, ModelConfig, format_fraction
from .simulate import (
    drift_report,
    drift_threshold,
    integrate_numeric,
    phase_environment,
    random_initial,
)
from .symmetry_solver import (
    SymmetryAnsatz,
    build_determining_system,
    classify,
    expected_dimension,
    reconstruct_gauge,
    solve_symmetries,
    structure_facts,
)

COMMANDS = ("derive", "algebra", "charges", "simulate", "report")


class InputError(Exception):
    """Invalid command line input (exit code 2)."""


@dataclass(frozen=True)
class RunSpec:
    command: str
    n: int
    d: int
    m: Fraction = Fraction(1)
    cap: int | None = None
    restricted_gauge: bool = False
    quadratic_ansatz: bool = False
    fmt: str = "json"
    out: str | None = None
    steps: int = 1000
    t0: Fraction = Fraction(0)
    t1: Fraction = Fraction(1)
    initial: dict | None = None
    seed: int = 0
    csv: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if not 1 <= self.n <= 4:
            raise InputError("--n must be in 1..4")
        if not 1 <= self.d <= 3:
            raise InputError("--dim must be in 1..3")
        if self.m <= 0:
            raise InputError("--mass must be positive")
        if self.cap is not None and self.cap < 0:
            raise InputError("--deg-cap must be nonnegative")
        if self.steps < 1:
            raise InputError("--steps must be >= 1")
        if not self.t1 > self.t0:
            raise InputError("--t1 must exceed --t0")

    @property
    def cfg(self) -> ModelConfig:
        return ModelConfig(self.n, self.d, self.m)

    @property
    def degree_cap(self) -> int:
        return 2 * self.n + 2 if self.cap is None else self.cap


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a rational number: {text!r}") from None


def parse_initial(text: str) -> dict:
    """``"a,k=num/den;..."`` -> {(a, k): Fraction}."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(";"))):
        try:
            lhs, rhs = item.split("=")
            a, k = (int(x) for x in lhs.split(","))
        except ValueError:
            raise InputError(f"malformed initial jet {item!r}") from None
        out[(a, k)] = parse_fraction(rhs)
    return out


# shared pipeline ---------------------------------------------------------------


def _solve(spec: RunSpec):
    cfg = spec.cfg
    ansatz = SymmetryAnsatz.default(
        cfg,
        spec.degree_cap,
        include_quadratic=spec.quadratic_ansatz,
        allow_explicit_t_gauge=not spec.restricted_gauge,
    )
    basis = solve_symmetries(build_determining_system(cfg, ansatz))
    return cfg, ansatz, basis


def _combo(entry: dict) -> str:
    if not entry:
        return "0"
    parts = []
    for label, c in entry.items():
        if c == 1:
            parts.append(label)
        elif c == -1:
            parts.append(f"-{label}")
        else:
            parts.append(f"{c}*{label}")
    return " + ".join(parts).replace("+ -", "- ")


# commands ----------------------------------------------------------------------


def cmd_derive(spec: RunSpec) -> tuple[dict, str, int]:
    cfg, ansatz, basis = _solve(spec)
    facts = structure_facts(basis, cfg, spec.restricted_gauge)
    notes = []
    payload = {
        "command": "derive",
        "n": cfg.n,
        "d": cfg.d,
        "mass": format_fraction(cfg.m),
        "N": cfg.N,
        "gauge_mode": "restricted" if spec.restricted_gauge else "full",
        "ansatz": {
            "deg_psi": ansatz.deg_psi,
            "deg_linear": ansatz.deg_linear,
            "deg_shift": ansatz.deg_shift,
            "quadratic": ansatz.include_quadratic,
        },
        "dimension": len(basis),
        "expected_dimension": expected_dimension(cfg, spec.restricted_gauge),
        "solver_basis": [X.to_json() for X in basis],
        "facts": facts,
    }
    code = 0
    try:
        named = classify(basis, cfg)
    except ClassificationFailed as exc:
        notes.append(f"classification failed: {exc}")
        payload.update(k_max=None, generators=[])
        code = 1
    else:
        gens = []
        for label, X in named.items():
            f = reconstruct_gauge(X, cfg, spec.restricted_gauge)
            gens.append({"label": label, "symmetry": X.to_json(gauge=f)})
        payload.update(k_max=named.k_max, generators=gens)
        table = structure_table(named, strict=False)
        if not table.closed:
            pairs = ", ".join(f"[{x},{y}]" for x, y in table.residuals)
            notes.append(
                "NOTE: span does not close under the N-Galilean conformal brackets; "
                f"escaping brackets: {pairs}"
            )
    flags = [v for k, v in facts.items() if isinstance(v, bool)]
    if not all(flags) or len(basis) != payload["expected_dimension"]:
        code = 1
    payload["notes"] = notes

    md = [f"# Symmetries of L = (m/2)|q^({cfg.n})|^2, d = {cfg.d}", ""]
    md.append(f"- gauge mode: {payload['gauge_mode']}")
    md.append(f"- nullspace dimension: {len(basis)} (formula {payload['expected_dimension']})")
    md.append(f"- k_max: {payload['k_max']}")
    for key, value in facts.items():
        md.append(f"- {key}: {value}")
    md.append("")
    if payload["generators"]:
        md.append("| generator | psi | shift | gauge f |")
        md.append("|---|---|---|---|")
        for label, X in named.items():
            f = reconstruct_gauge(X, cfg, spec.restricted_gauge)
            md.append(
                f"| {label} | {X.psi_poly()} | "
                f"{', '.join(str(JetPolynomial.from_tcoeffs(p)) for p in X.shift)} | "
                f"{f} |"
            )
    for note in notes:
        md += ["", note]
    return payload, "\n".join(md) + "\n", code


def _named(spec: RunSpec):
    cfg, _, basis = _solve(spec)
    return cfg, classify(basis, cfg)


def _bracket_markdown(actual, expected) -> list:
    lines = ["| bracket | actual | expected | match |", "|---|---|---|---|"]
    labels = actual.labels
    for i, x in enumerate(labels):
        for y in labels[i + 1 :]:
            a = actual.coeffs.get((x, y), {})
            e = expected.coeffs.get((x, y), {}) if expected else None
            if not a and not e and (x, y) not in actual.residuals:
                continue
            shown = _combo(a)
            if (x, y) in actual.residuals:
                shown += " + (outside span)"
            exp = _combo(e) if expected is not None else "n/a"
            if expected is None:
                match = "n/a"
            else:
                match = "yes" if a == e and (x, y) not in actual.residuals else "NO"
            lines.append(f"| [{x},{y}] | {shown} | {exp} | {match} |")
    return lines


def cmd_algebra(spec: RunSpec) -> tuple[dict, str, int]:
    cfg, named = _named(spec)
    actual = structure_table(named, strict=False)
    payload = {
        "command": "algebra",
        "n": cfg.n,
        "d": cfg.d,
        "N": cfg.N,
        "gauge_mode": "restricted" if spec.restricted_gauge else "full",
        "generators": len(named),
        "k_max": named.k_max,
        "structure_table": actual.to_json(),
    }
    expected = None
    if actual.closed and named.k_max == cfg.N:
        expected = expected_table(cfg, named.k_max)
        report = verify_table(actual, expected)
        jac = jacobi_check(actual)
        verified = report.ok and jac.ok
        payload.update(
            expected_table=expected.to_json(),
            mismatches=report.to_json()["mismatches"],
            jacobi={"ok": jac.ok, "note": jac.note},
            status="VERIFIED" if verified else "MISMATCH",
        )
    else:
        verified = False
        payload.update(
            expected_table=None,
            mismatches=[],
            jacobi={"ok": False, "note": jacobi_check(actual).note},
            status="NOT CLOSED",
            residuals={
                f"[{x},{y}]": r.to_json() for (x, y), r in actual.residuals.items()
            },
        )
    md = [
        f"# Bracket table, n = {cfg.n}, d = {cfg.d} (N = {cfg.N})",
        "",
        f"**{payload['status']}** with {len(named)} generators",
        "",
    ]
    md += _bracket_markdown(actual, expected)
    return payload, "\n".join(md) + "\n", 0 if verified else 1


def _charges(spec: RunSpec, cfg, named) -> tuple[list, list]:
    charges, defects = [], []
    for label, X in named.items():
        f = reconstruct_gauge(X, cfg, spec.restricted_gauge)
        value = to_phase(charge_jet(X, f, cfg), cfg)
        charges.append(Charge(label, value, X, f))
        defects.append(conservation_defect(value, cfg))
    return charges, defects


def cmd_charges(spec: RunSpec) -> tuple[dict, str, int]:
    cfg, named = _named(spec)
    charges, defects = _charges(spec, cfg, named)
    central: CentralTable | None = None
    note = ""
    try:
        central = charge_algebra(charges, cfg)
    except NotClosed as exc:
        note = f"central table unavailable: {exc}"
    payload = {
        "command": "charges",
        "n": cfg.n,
        "d": cfg.d,
        "mass": format_fraction(cfg.m),
        "charges": [
            {
                "label": c.label,
                "value": c.value.to_json(),
                "text": str(c.value),
                "gauge": c.gauge.to_json(),
                "defect": str(dfc),
            }
            for c, dfc in zip(charges, defects)
        ],
        "all_conserved": all(dfc.is_zero() for dfc in defects),
        "central_table": central.to_json() if central else None,
        "note": note,
    }
    md = [f"# Noether charges, n = {cfg.n}, d = {cfg.d}, m = {cfg.m}", ""]
    md += ["| generator | charge | defect |", "|---|---|---|"]
    for c, dfc in zip(charges, defects):
        md.append(f"| {c.label} | {c.value} | {dfc} |")
    if central is not None:
        md += ["", "## Central terms {J_X, J_Y} - J_[X,Y]", ""]
        md += ["| pair | constant | in units of m |", "|---|---|---|"]
        for (x, y), c in central.nonzero().items():
            md.append(f"| **({x}, {y})** | **{c}** | {c / cfg.m} |")
    if note:
        md += ["", note]
    return payload, "\n".join(md) + "\n", 0 if payload["all_conserved"] else 1


def cmd_simulate(spec: RunSpec) -> tuple[dict, str, int]:
    cfg = ModelConfig(spec.n, spec.d, spec.m)
    if spec.initial is None:
        initial = random_initial(cfg, np.random.default_rng(spec.seed))
    else:
        initial = spec.initial
        try:
            check_initial(initial, cfg)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        extra = [k for k in initial if not (1 <= k[0] <= cfg.d and 0 <= k[1] < 2 * cfg.n)]
        if extra:
            raise InputError(f"initial jets out of range: {extra}")
    base = RunSpec(
        "charges", spec.n, spec.d, spec.m, spec.cap, False, spec.quadratic_ansatz
    )
    _, named = _named(base)
    charges, _ = _charges(base, cfg, named)
    samples = integrate_numeric(cfg, initial, spec.t0, spec.t1, spec.steps)
    if spec.csv:
        samples.write_csv(spec.csv)
    env = phase_environment(samples, cfg)
    threshold = drift_threshold(cfg)
    records = [{"generator": c.label, "drift": drift_report(c, samples, cfg, env)} for c in charges]
    worst = max(r["drift"] for r in records)
    payload = {
        "command": "simulate",
        "n": cfg.n,
        "d": cfg.d,
        "mass": format_fraction(cfg.m),
        "steps": spec.steps,
        "t0": format_fraction(spec.t0),
        "t1": format_fraction(spec.t1),
        "initial": {f"{a},{k}": format_fraction(v) for (a, k), v in sorted(initial.items())},
        "threshold": threshold,
        "max_drift": worst,
        "drifts": records,
    }
    md = [f"# RK4 drift, n = {cfg.n}, d = {cfg.d}, {spec.steps} steps", ""]
    md += ["| generator | relative drift |", "|---|---|"]
    md += [f"| {r['generator']} | {r['drift']:.3e} |" for r in records]
    md += ["", f"max drift {worst:.3e} (threshold {threshold:.0e})"]
    return payload, "\n".join(md) + "\n", 0 if worst <= threshold else 1


def cmd_report(spec: RunSpec) -> tuple[dict, str, int]:
    parts = [cmd_derive(spec), cmd_algebra(spec), cmd_charges(spec)]
    if not spec.restricted_gauge:
        parts.append(cmd_simulate(spec))
    payload = {"command": "report", "sections": [p for p, _, _ in parts]}
    md = "\n".join(m for _, m, _ in parts)
    return payload, md, max(c for _, _, c in parts)


HANDLERS = {
    "derive": cmd_derive,
    "algebra": cmd_algebra,
    "charges": cmd_charges,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


# argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noether-gca",
        description="Noether symmetries of free higher-derivative Lagrangians.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, required=True, help="derivative order (1..4)")
    common.add_argument("--dim", type=int, required=True, help="spatial dimension (1..3)")
    common.add_argument("--mass", default="1", help="mass parameter NUM/DEN")
    common.add_argument("--deg-cap", type=int, default=None, help="ansatz degree cap (default 2n+2)")
    common.add_argument("--restricted-gauge", action="store_true", help="require a t-free gauge term")
    common.add_argument("--quadratic-ansatz", action="store_true", help="include q-quadratic terms")
    common.add_argument("--format", choices=("json", "md"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--steps", type=int, default=1000)
    common.add_argument("--t0", default="0")
    common.add_argument("--t1", default="1")
    common.add_argument("--initial", default=None, help='initial jets "a,k=num/den;..."')
    common.add_argument("--seed", type=int, default=0, help="seed for random initial data")
    common.add_argument("--csv", default=None, help="dump sampled states (simulate)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    return RunSpec(
        command=args.command,
        n=args.n,
        d=args.dim,
        m=parse_fraction(args.mass),
        cap=args.deg_cap,
        restricted_gauge=args.restricted_gauge,
        quadratic_ansatz=args.quadratic_ansatz,
        fmt=args.format,
        out=args.out,
        steps=args.steps,
        t0=parse_fraction(args.t0),
        t1=parse_fraction(args.t1),
        initial=parse_initial(args.initial) if args.initial is not None else None,
        seed=args.seed,
        csv=args.csv,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        payload, md, code = HANDLERS[spec.command](spec)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(payload, indent=2) + "\n" if spec.fmt == "json" else md
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
