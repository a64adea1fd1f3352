"""Acceptance criteria, each run at its stated tolerance and time limit.

Every test records one ``criterion N: PASS|FAIL ...`` line, shown in the
terminal summary.
"""

import filecmp
import os
import subprocess
import sys
import time

import numpy as np

from cplab.coupling import (PLUS, CouplingBoundSpec, coupling_cost, optimal_coupling,
                            quantile_coupling)
from cplab.dist import (compound_poisson, convolve, family, identity,
                        power, total_variation)
from cplab.harness import fit_slope, run_experiment
from cplab.harness.experiments import hyperplane_counterexample
from cplab.lattice import convolve_lattice, from_lattice, to_lattice
from cplab.metric import kolmogorov_rho
from cplab.models import bernoulli_loss, dkw_bound, exact_D, exact_G, simulate_S, simulate_T
from cplab.polyhedra import Polyhedron, contains_points, measure
from cplab.projection import orthonormal_basis, project_distribution, project_polyhedron

from conftest import ACCEPTANCE_LINES, random_dist
from test_models import random_pmf, vertex_oracle

SEED = 20240501


def record(n, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    line = (f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail} "
            f"[{elapsed:.1f}s of {limit:g}s]")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def slope(table):
    return fit_slope(table.grid, table.distances)


def test_criterion_1_convolution_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_tv = worst_pow = 0.0
    for _ in range(20):
        F = random_dist(rng, atoms=int(rng.integers(1, 12)), span=20)
        G = random_dist(rng, atoms=int(rng.integers(1, 12)), span=20)
        fft = from_lattice(convolve_lattice(to_lattice(F, spacing=[1.0]),
                                            to_lattice(G, spacing=[1.0])))
        worst_tv = max(worst_tv, total_variation(fft, convolve(F, G)))
        n = int(rng.integers(2, 12))
        rep = identity(1)
        for _ in range(n):
            rep = convolve(rep, F)
        worst_pow = max(worst_pow, total_variation(power(F, n), rep))
    record(1, worst_tv <= 1e-10 and worst_pow <= 1e-12,
           f"sparse/FFT tv {worst_tv:.2e}, power/repeated tv {worst_pow:.2e}",
           time.perf_counter() - t0, 5)


def test_criterion_2_compound_poisson_identity():
    t0 = time.perf_counter()
    H, tol = family("lazy-rademacher"), 1e-10
    base = compound_poisson(1.0, H, tol)
    gaps = {n: total_variation(compound_poisson(n, H, tol), power(base, n))
            for n in (2, 16, 64)}
    record(2, all(g <= 10 * n * tol for n, g in gaps.items()),
           "tv " + ", ".join(f"n={n}: {g:.2e}" for n, g in gaps.items()),
           time.perf_counter() - t0, 10)


def test_criterion_3_projection_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    membership_ok = 0
    for _ in range(1000):
        m = int(rng.integers(1, 6))
        F = random_dist(rng, dim=50, atoms=int(rng.integers(1, 101)), integer=False)
        P = Polyhedron.from_raw(rng.normal(size=(m, 50)), rng.normal(size=m) * 5)
        B = orthonormal_basis(P)
        Fp, Pp = project_distribution(F, B), project_polyhedron(P, B)
        worst = max(worst, abs(measure(F, P) - measure(Fp, Pp)))
        membership_ok += bool(np.array_equal(contains_points(P, F.points),
                                             contains_points(Pp, B.coordinates(F.points))))
    record(3, worst <= 1e-12 and membership_ok == 1000,
           f"max measure gap {worst:.2e}, membership agreement {membership_ok}/1000",
           time.perf_counter() - t0, 30)


def test_criterion_4_alpha_one_rate():
    t0 = time.perf_counter()
    r = run_experiment("thm1", {"family": "lazy-rademacher"}, seed=SEED)
    t = r.table("Fn_vs_eNF")
    f = slope(t)
    ok = t.grid == [2.0 ** j for j in range(3, 11)] and t.mode == "exact"
    ok = ok and -1.25 <= f.slope <= -0.80 and f.r_squared >= 0.98
    record(4, ok, f"slope {f.slope:.4f}, r2 {f.r_squared:.4f}", time.perf_counter() - t0, 60)


def test_criterion_5_symmetric_rates():
    t0 = time.perf_counter()
    r = run_experiment("thm3", {"family": "rademacher"}, seed=SEED)
    s_cp = slope(r.table("Fn_vs_eNF")).slope
    s_even = slope(r.table("Fn_vs_Fn+2k_k1")).slope
    s_odd = slope(r.table("Fn_vs_Fn+2k+1_k0")).slope
    ok = (-0.62 <= s_cp <= -0.40 and -1.25 <= s_even <= -0.80 and -0.62 <= s_odd <= -0.40
          and r.table("Fn_vs_eNF").grid[-1] == 1024)
    record(5, ok, f"slopes e(nF) {s_cp:.4f}, n+2 {s_even:.4f}, n+1 {s_odd:.4f}",
           time.perf_counter() - t0, 90)


def test_criterion_6_linearity_in_p():
    t0 = time.perf_counter()
    r = run_experiment("thm2", {"family": "bernoulli-loss", "n": 100}, seed=SEED)
    t = r.table("G_vs_D")
    f = slope(t)
    ratios = [d / p for p, d in zip(t.grid, t.distances)]
    spread = max(ratios) / min(ratios)
    ok = 0.85 <= f.slope <= 1.15 and spread <= 2.0
    record(6, ok, f"slope {f.slope:.4f}, distance/p spread {spread:.3f}",
           time.perf_counter() - t0, 60)


def test_criterion_7_hyperplane_scaling():
    t0 = time.perf_counter()
    r = run_experiment("thm4", {"family": "product2d"}, seed=SEED)
    ratios = []
    for b in (-1, 0, 1):
        t = r.table(f"diff_b{b:+g}")
        scaled = [np.sqrt(n) * d for n, d in zip(t.grid, t.distances)]
        ratios.append(max(scaled) / min(scaled) if min(scaled) > 0 else np.inf)
    _, counter = hyperplane_counterexample([2 ** j for j in range(4, 11)])
    ok = all(x <= 10 for x in ratios) and all(d == 1.0 for d in counter)
    record(7, ok, "sqrt(n)-scaled ratios " + ", ".join(f"{x:.3f}" for x in ratios)
           + f", counterexample all ones: {all(d == 1.0 for d in counter)}",
           time.perf_counter() - t0, 60)


def test_criterion_8_coupling_machinery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    spec = CouplingBoundSpec(PLUS)
    worst = 0.0
    for _ in range(25):
        U, V = random_pmf(rng, 3), random_pmf(rng, 3)
        coup, value = optimal_coupling(U, V, spec)
        C = coupling_cost(coup.rows[:, None], coup.cols[None, :], spec)
        worst = max(worst, abs(value - vertex_oracle(U.masses[coup.rows],
                                                     V.masses[coup.cols], C)))
    dominated = 0
    for _ in range(100):
        U, V = random_pmf(rng, 4, 15), random_pmf(rng, 5, 15)
        dominated += quantile_coupling(U, V).cost(spec) >= optimal_coupling(U, V, spec)[1] - 1e-12
    same = run_experiment("thm5", {"family": "lazy-rademacher"}, seed=SEED, quick=True)
    same_ok = [c.passed for c in same.checks if c.name.startswith("U = V")] == [True]
    U = random_pmf(rng, 5)
    zero = optimal_coupling(U, U, spec)[1] == 0.0
    ok = worst <= 1e-9 and dominated == 100 and same_ok and zero
    record(8, ok, f"LP vs vertex oracle {worst:.1e}, quantile >= LP {dominated}/100, "
                  f"U = V zero: {same_ok and zero}", time.perf_counter() - t0, 30)


def test_criterion_9_monte_carlo_consistency():
    t0 = time.perf_counter()
    model = bernoulli_loss(100, 0.05)
    G, D = exact_G(model), exact_D(model)
    N = 100_000
    eps = dkw_bound(N, 0.999)
    inside_S = inside_T = 0
    for trial in range(100):
        inside_S += kolmogorov_rho(simulate_S(model, N, seed=trial).to_distribution(),
                                   G).value <= eps
        inside_T += kolmogorov_rho(simulate_T(model, N, seed=10_000 + trial).to_distribution(),
                                   D).value <= eps
    record(9, inside_S >= 98 and inside_T >= 98,
           f"within DKW radius {eps:.5f}: S {inside_S}/100, T {inside_T}/100",
           time.perf_counter() - t0, 120)


def _trees_equal(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(
        _trees_equal(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def test_criterion_10_determinism(tmp_path):
    env = dict(os.environ, NO_COLOR="1")
    times, outputs = [], []
    for run in ("a", "b"):
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "cplab.cli", "experiment", "all",
                               "--quick", "--seed", "7", "--out", str(tmp_path / run)],
                              capture_output=True, text=True, env=env)
        times.append(time.perf_counter() - t0)
        outputs.append(proc.stdout)
    same = _trees_equal(tmp_path / "a", tmp_path / "b") and outputs[0] == outputs[1]
    files = sum(len(f) for _, _, f in os.walk(tmp_path / "a"))
    ok = same and files > 0 and max(times) < 60
    record(10, ok, f"{files} files byte-identical: {same}", max(times), 60)
