"""Acceptance gates: each check returns a Gate with its measured numbers.

``level="full"`` runs every gate at its stated budget; ``"quick"`` shrinks
Monte Carlo budgets and graph sizes for a fast smoke run (tolerances are
unchanged, so quick results are indicative only).
"""

from __future__ import annotations

import hashlib
import itertools
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .fitness import ExponentialFitness, ParetoFitness, constant_intensity_model
from .graph import degree_sequence_fast, degree_sequence_naive
from .joint import (char_fn, finite_n_isolation_probability, finite_n_joint_pgf, g_r_direct,
                    joint_moment, moment_sequence, sample_joint_limit_batch, sampler_pgf_grid)
from .limits import finite_n_nodal_pmf, fujihara_approx, fujihara_pmf, limit_nodal_pmf
from .streams import stream

P_FUJ_ZERO = 0.1485
EXP = ExponentialFitness(1.0)
ACCEPTANCE_SEED = 2024


@dataclass
class Gate:
    number: int
    name: str
    passed: bool
    runtime: float
    runtime_limit: float
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.runtime:.2f}s / {self.runtime_limit:g}s)"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "runtime": self.runtime, "runtime_limit": self.runtime_limit,
                "details": self.details}


def _budget(level: str, full: int, quick: int) -> int:
    return full if level == "full" else quick


def _timed(number, name, limit, fn, *args):
    t0 = time.perf_counter()
    ok, details = fn(*args)
    dt = time.perf_counter() - t0
    return Gate(number, name, bool(ok and dt < limit), dt, limit,
                {**details, "within_runtime": dt < limit})


# -- the gates ---------------------------------------------------------------------

def _p_fuj_zero(level, seed, threads):
    v = limit_nodal_pmf(EXP, 0)
    return abs(v - P_FUJ_ZERO) <= 5e-4, {"value": v, "target": P_FUJ_ZERO, "tol": 5e-4}


def _approx_bound(level, seed, threads):
    worst = -math.inf
    rows = []
    for d in range(2, 16):
        approx, bound = fujihara_approx(d)
        gap = abs(fujihara_pmf(d) - approx)
        rows.append({"d": d, "gap": gap, "bound": bound})
        worst = max(worst, gap - bound)
    return worst <= 0, {"worst_gap_minus_bound": worst, "rows": rows}


def _unit_poisson(level, seed, threads):
    worst = 0.0
    for model in (ParetoFitness(1.0, 2.0), constant_intensity_model(1.0)):
        for d in range(11):
            worst = max(worst, abs(limit_nodal_pmf(model, d) - math.exp(-1) / math.factorial(d)))
    return worst <= 1e-6, {"max_abs_error": worst, "tol": 1e-6}


def _kernel_equivalence(level, seed, threads):
    mismatches = 0
    for n in (8, 64, 512):
        for i in range(100):
            rng = stream(seed, i, n)
            f = EXP.sample(rng, n)
            # half the instances sit on a lattice so ties and exact sums occur
            if i % 2:
                f = np.round(f * 4) / 4
            theta = float(EXP.scaling(n)) if i % 3 else float(f[0] + f[-1])
            if not np.array_equal(degree_sequence_fast(f, theta), degree_sequence_naive(f, theta)):
                mismatches += 1
    return mismatches == 0, {"mismatches": mismatches, "instances": 300}


def _nodal_convergence(level, seed, threads):
    ns = (1_000, 10_000, 100_000)
    resid = {}
    for n in ns:
        theta = float(EXP.scaling(n))
        resid[n] = [abs(finite_n_nodal_pmf(EXP, n, theta, d) - limit_nodal_pmf(EXP, d))
                    for d in range(21)]
    sup = max(resid[100_000])
    monotone = all(resid[a][d] >= resid[b][d] for a, b in zip(ns, ns[1:]) for d in range(6))
    return sup <= 0.01 and monotone, {
        "sup_residual_n1e5": sup, "monotone_d_le_5": monotone,
        "residuals": {str(n): resid[n][:6] for n in ns}}


JOINT_PROBES = ((0.5, 0.5), (0.0, 0.75), (0.25, 0.5, 0.75))


def _joint_concordance(level, seed, threads):
    samples = _budget(level, 1_000_000, 100_000)
    grid = (0.0, 0.25, 0.5, 0.75, 1.0)
    worst, rows = 0.0, []
    for r in (2, 3):
        zs = np.array(list(itertools.product(grid, repeat=r)))
        samp = sampler_pgf_grid(EXP, zs, samples=samples, seed=seed * 10 + r, threads=threads)
        for i, z in enumerate(zs):
            direct = g_r_direct(EXP, z, samples=samples, seed=seed * 10 + 5 + r, threads=threads)
            se = math.hypot(samp[i, 1], direct.se)
            gap = abs(samp[i, 0] - direct.value)
            z_score = gap / se if se > 0 else (0.0 if gap < 1e-12 else math.inf)
            worst = max(worst, z_score)
    n = 100_000
    theta = float(EXP.scaling(n))
    probe_worst = 0.0
    for j, z in enumerate(JOINT_PROBES):
        fin = finite_n_joint_pgf(EXP, n, theta, z, samples=samples, seed=seed * 10 + 100 + j,
                                 threads=threads)
        lim = g_r_direct(EXP, z, samples=samples, seed=seed * 10 + 5 + len(z), threads=threads)
        z_score = abs(fin.value - lim.value) / math.hypot(fin.se, lim.se)
        rows.append({"z": list(z), "finite_n": fin.value, "limit": lim.value, "z_score": z_score})
        probe_worst = max(probe_worst, z_score)
    return worst <= 3 and probe_worst <= 3, {
        "samples": samples, "worst_grid_z": worst, "worst_probe_z": probe_worst, "probes": rows}


def _constant_intensity(level, seed, threads):
    c, eps = 1.0, 1e-8
    model = constant_intensity_model(c)
    rng = stream(seed, 0, 7)
    all_equal = True
    for r in (2, 3, 5):
        _, _, _, deg = sample_joint_limit_batch(model, r, 50_000, rng)
        all_equal &= bool(np.all(deg == deg[:, :1]))
    worst = 0.0
    for d in (0, 1, 3):
        seq = moment_sequence(model, d, 12)
        p = c ** d * math.exp(-c) / math.factorial(d)
        for t in (0.5, 1.0, 2.0):
            ev = char_fn(model, d, t, eps, moments=seq)
            exact = 1 + (complex(math.cos(t), math.sin(t)) - 1) * p
            worst = max(worst, abs(ev.value - exact))
    return all_equal and worst <= eps, {"sampler_all_equal": all_equal,
                                        "max_charfn_error": worst, "eps": eps}


def _moments_cross_check(level, seed, threads):
    samples = _budget(level, 1_000_000, 200_000)
    m1 = joint_moment(EXP, 1, 0)
    m2 = joint_moment(EXP, 2, 0)
    mc = joint_moment(EXP, 2, 0, "monte-carlo", samples, seed=seed, threads=threads)
    z = abs(m2.value - mc.value) / math.hypot(mc.error, m2.error)
    ok = (abs(m1.value - P_FUJ_ZERO) <= 5e-4 and z <= 3
          and m1.value ** 2 < m2.value < m1.value)
    return ok, {"m1": m1.value, "m2_quadrature": m2.value, "m2_mc": mc.value,
                "m2_mc_se": mc.error, "z_score": z}


def _second_moment(level, seed, threads):
    n, R = _budget(level, 30_000, 10_000), _budget(level, 200, 50)
    mat = ex.run_replications(EXP, n, R, [0], seed, threads)
    theta = mat.theta
    p0 = finite_n_nodal_pmf(EXP, n, theta, 0)
    p2 = finite_n_isolation_probability(EXP, n, theta, 2)
    second_finite = p0 / n + (n - 1) / n * p2
    m2 = joint_moment(EXP, 2, 0).value
    slack = abs(second_finite - m2)
    st = ex.column_stats(mat, 0)
    mean_ok = abs(st["mean"] - p0) <= 3 * st["se"]
    sq_ok = abs(st["second_moment"] - m2) <= 3 * st["second_moment_se"] + slack
    return mean_ok and sq_ok, {
        "n": n, "R": R, "mean": st["mean"], "se": st["se"], "finite_n_pmf": p0,
        "second_moment": st["second_moment"], "second_moment_se": st["second_moment_se"],
        "m2": m2, "finite_n_second_moment": second_finite, "slack": slack}


def _nondegeneracy(level, seed, threads):
    grid = (1_000, 10_000, 30_000) if level == "full" else (1_000, 3_000, 10_000)
    rep = ex.nondegeneracy_report(EXP, grid, 100, [0, 5, 10], seed, threads)
    ks_max = max(rep.ks.values())
    all_fire = all(v is True for v in rep.verdicts.values())
    return all_fire and ks_max <= ex.KS_STABILITY_GATE, {
        "max_ks": ks_max, "verdicts": rep.to_json()["verdicts"]}


def _factorial_identity(level, seed, threads):
    budget = _budget(level, 1_000_000, 100_000)
    rows, worst = [], 0.0
    for r in (2, 3):
        for d in (0, 1):
            chk = ex.factorial_moment_check(EXP, 6, r, d, budget, seed * 100 + 10 * r + d,
                                            threads=threads)
            rows.append({"r": r, "d": d, "lhs": chk.lhs, "rhs": chk.rhs, "z": chk.z_score})
            worst = max(worst, chk.z_score)
    return worst <= 3, {"graphs": budget, "worst_z": worst, "rows": rows}


DETERMINISM_RUNS = {
    "simulate": "run.n = 2000\nrun.R = 6\nrun.export_census = true\nrun.export_edges = true\n",
    "histogram": "run.n_grid = 300, 600\nrun.R = 8\n",
    "limits": "run.n = 1000\nlimits.d_max = 6\n",
    "joint-moments": "joint.method = monte-carlo\nmc.samples = 150000\njoint.r_max = 3\nrun.d_set = 0, 2\n",
    "charfn": "run.d_set = 0\ncharfn.t = 0.5, 1\n",
    "check-scaling": "scaling.n_grid = 10, 1000\n",
}


def _csv_digests(folder: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.glob("*.csv"))}


def _determinism(level, seed, threads):
    from .cli import dispatch
    from .config import parse_config
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for cmd, body in DETERMINISM_RUNS.items():
            digests = []
            for k, th in enumerate((1, 1, max(2, threads))):
                out = Path(tmp) / f"{cmd}-{k}"
                cfg = parse_config(f"fitness.family = exponential\n{body}",
                                   [("run.seed", seed), ("run.threads", th), ("run.out", out)])
                status, _ = dispatch(cmd, cfg)
                if status != 0:
                    mismatched.append(f"{cmd}: exit {status}")
                digests.append(_csv_digests(out))
            if not digests[0] or any(d != digests[0] for d in digests[1:]):
                mismatched.append(cmd)
    return not mismatched, {"commands": sorted(DETERMINISM_RUNS), "mismatched": mismatched}


GATES = (
    (1, "exponential limit pmf at d=0", 1.0, _p_fuj_zero),
    (2, "1/(d(d-1)) approximation within 1/d!", 5.0, _approx_bound),
    (3, "unit Poisson limit for constant intensity", 1.0, _unit_poisson),
    (4, "fast and naive degree kernels agree", 10.0, _kernel_equivalence),
    (5, "finite-n nodal pmf converges", 60.0, _nodal_convergence),
    (6, "joint pgf: sampler, direct and finite-n agree", 300.0, _joint_concordance),
    (7, "constant-intensity closed forms", 30.0, _constant_intensity),
    (8, "moment cross-check and positive variance", 120.0, _moments_cross_check),
    (9, "graph second moment against the limit", 600.0, _second_moment),
    (10, "limit fraction is non-degenerate", 900.0, _nondegeneracy),
    (11, "factorial-moment identity", 300.0, _factorial_identity),
    (12, "byte-identical outputs across thread counts", 120.0, _determinism),
)


def run_gate(number: int, level: str = "full", *, seed: int = ACCEPTANCE_SEED, threads: int = 1) -> Gate:
    for num, name, limit, fn in GATES:
        if num == number:
            return _timed(num, name, limit, fn, level, seed, threads)
    raise KeyError(number)


def run_all(level: str = "quick", *, seed: int = ACCEPTANCE_SEED, threads: int = 1) -> list[Gate]:
    return [run_gate(num, level, seed=seed, threads=threads) for num, *_ in GATES]
