"""Self-checks run by ``twoway-cvqkd validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import finite_size as fs
from . import gaussian_core as gc
from . import protocols as pr
from . import temporal_modes as tm


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_coverage(m=10_000, eps_pe=0.05, trials=10_000, seed=0, jobs=1) -> Check:
    cov = fs.monte_carlo_coverage(math.sqrt(0.5), 1.05, 19.0, m, eps_pe, trials, seed=seed, jobs=jobs)
    p = 1 - eps_pe
    floor = p - 3 * math.sqrt(p * (1 - p) / trials)
    return Check("monte-carlo coverage", cov >= floor, f"coverage {cov:.4f} >= {floor:.4f} (m={m}, eps_pe={eps_pe}, trials={trials})")


def check_physicality() -> Check:
    worst = math.inf
    budget = fs.EstimationBudget.split(10 ** 8)
    for eta in (0.9, 0.97, 1.0):
        for length in np.linspace(0, 60, 13):
            for eps in np.linspace(0, 0.15, 4):
                p = pr.TwoWayParams(length_km=float(length), excess_noise=float(eps),
                                    eta=pr.ModeMatchMatrix.uniform(eta))
                for b in (None, budget):
                    g = pr.cov_fan(p, b)
                    worst = min(worst, gc.symplectic_eigenvalues(g).min(),
                                gc.symplectic_eigenvalues(pr.bob_conditional_cov(g, pr.k_gain(p))).min())
    return Check("symplectic physicality", worst >= 1 - 1e-9, f"min eigenvalue {worst:.12f}")


def check_pure_state() -> Check:
    worst = max(gc.von_neumann_entropy(gc.tmsv(v)) for v in (1.0, 2.0, 20.0, 1000.0))
    return Check("pure-state entropy", worst < 1e-8, f"max TMSV entropy {worst:.3e}")


def check_fan_reduction() -> Check:
    worst = 0.0
    for length in (0.0, 10.0, 30.0, 50.0):
        for eps in (0.0, 0.05, 0.1):
            p = pr.TwoWayParams(length_km=length, excess_noise=eps)
            dev = np.max(np.abs(pr.cov_fan(p, None).matrix - pr.cov_ideal(p).matrix))
            worst = max(worst, dev)
    return Check("FAN -> ideal reduction", worst < 1e-8, f"max deviation {worst:.3e}")


def check_heterodyne(seed=0, trials=100) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        g = gc.tmsv(float(rng.uniform(1.0, 100.0)))
        split = gc.heterodyne_condition(g, 0).matrix
        a, c, b = g.mode_block(0), g.mode_block(1, 0), g.mode_block(1)
        closed = b - c @ np.linalg.inv(a + np.eye(2)) @ c.T
        worst = max(worst, np.max(np.abs(split - closed)))
    return Check("heterodyne conditioning", worst < 1e-8, f"max deviation {worst:.3e}")


def check_overlap() -> Check:
    sigma = 1.0
    grid = (-40.0, 80.0 / 8191, 8192)
    ref = tm.gaussian(sigma, 0.0, grid=grid)
    worst = 0.0
    for ratio in (0.0, 0.5, 1.0, 2.0, 4.0):
        eta = tm.mode_match(ref, tm.gaussian(sigma, ratio * sigma, grid=grid))
        worst = max(worst, abs(eta - math.exp(-ratio ** 2 / 4)))
    return Check("gaussian mode overlap", worst < 1e-8, f"max deviation {worst:.3e}")


CHECKS: dict[str, Callable[..., Check]] = {
    "physicality": check_physicality,
    "pure_state": check_pure_state,
    "fan_reduction": check_fan_reduction,
    "heterodyne": check_heterodyne,
    "overlap": check_overlap,
}


def run_all(seed=0, trials=10_000, jobs=1) -> list[Check]:
    out = [check_coverage(trials=trials, seed=seed, jobs=jobs)]
    out += [fn() for fn in CHECKS.values()]
    return out
