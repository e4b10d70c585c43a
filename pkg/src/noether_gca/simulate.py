"""Floating-point cross-check: RK4 integration of q^(2n) = 0 and charge drift."""

from __future__ import annotations

import csv
from fractions import Fraction
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dynamics import Charge, check_initial, ostrogradski_momenta
from .jet_algebra import TIME, JetPolynomial, ModelConfig, phase_p, phase_q


@dataclass
class Samples:
    """``states[i, a-1, k]`` is q_a^(k) at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray

    def write_csv(self, path) -> None:
        steps, d, size = self.states.shape
        header = ["t"] + [f"q{a}^{k}" for a in range(1, d + 1) for k in range(size)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, state in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(x)) for x in state.ravel()])


def _rhs(y: np.ndarray) -> np.ndarray:
    dy = np.zeros_like(y)
    dy[:, :-1] = y[:, 1:]
    return dy


def integrate_numeric(cfg: ModelConfig, initial: Mapping, t0, t1, steps: int) -> Samples:
    """Classical RK4 on the companion system y_k' = y_{k+1}, y_{2n-1}' = 0."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    t0, t1 = float(t0), float(t1)
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    values = check_initial(initial, cfg)
    y = np.array(
        [[float(values[(a, k)]) for k in range(2 * cfg.n)] for a in range(1, cfg.d + 1)]
    )
    h = (t1 - t0) / steps
    times = t0 + h * np.arange(steps + 1)
    states = np.empty((steps + 1,) + y.shape)
    states[0] = y
    for i in range(steps):
        k1 = _rhs(y)
        k2 = _rhs(y + 0.5 * h * k1)
        k3 = _rhs(y + 0.5 * h * k2)
        k4 = _rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[i + 1] = y
    return Samples(times, states)


def evaluate_array(p: JetPolynomial, env: Mapping) -> np.ndarray:
    """Evaluate a polynomial on arrays of variable values."""
    total = None
    for mono, c in p.terms.items():
        term = float(c)
        for v, e in mono:
            term = term * env[v] ** e
        total = term if total is None else total + term
    if total is None:
        return np.zeros_like(env[TIME])
    return np.broadcast_to(total, env[TIME].shape)


def phase_environment(samples: Samples, cfg: ModelConfig) -> dict:
    """Phase coordinates along the samples, momenta from the jet formula."""
    env = {TIME: samples.times}
    jets = {}
    for a in range(1, cfg.d + 1):
        for k in range(2 * cfg.n):
            jets[("q", a, k)] = samples.states[:, a - 1, k]
    env.update(jets)
    momenta = ostrogradski_momenta(cfg)
    for a in range(1, cfg.d + 1):
        for j in range(cfg.n):
            env[phase_q(a, j)] = samples.states[:, a - 1, j]
            env[phase_p(a, j)] = evaluate_array(momenta[j][a - 1], env)
    return env


def drift_report(c: Charge, samples: Samples, cfg: ModelConfig, env: Mapping | None = None) -> float:
    """max |J(t) - J(t0)| / max(1, |J(t0)|) over the samples."""
    if env is None:
        env = phase_environment(samples, cfg)
    values = np.asarray(evaluate_array(c.value, env), dtype=float)
    ref = values[0]
    return float(np.max(np.abs(values - ref)) / max(1.0, abs(ref)))


def drift_threshold(cfg: ModelConfig) -> float:
    return 1e-10 if cfg.n <= 2 else 1e-6


def random_initial(cfg: ModelConfig, rng: np.random.Generator, bound: int = 5) -> dict:
    """Random rational initial jets num/den with |num| <= bound, 1 <= den <= bound."""
    out = {}
    for a in range(1, cfg.d + 1):
        for k in range(2 * cfg.n):
            num = int(rng.integers(-bound, bound + 1))
            den = int(rng.integers(1, bound + 1))
            out[(a, k)] = Fraction(num, den)
    return out
