"""Acceptance criteria 1-13, one PASS/FAIL line each.

Each test prints its line as it finishes (visible with ``pytest -s``), and
the lines are repeated in an "acceptance criteria" section at the end of
every run.  Criterion 13 is a stretch goal and only runs when
``FOCKCC_STRETCH=1``.
"""

import os
import random
import time
from itertools import product

import numpy as np
import pytest

from fockcc.ccsystem import assemble_cc_system, monodromy_seed, random_hamiltonian
from fockcc.combinatorics import first_n
from fockcc.expparam import (
    cluster_variables,
    correspondence,
    forward_map,
    inverse_coordinate,
    inverse_map,
    master_polynomial,
    numeric_forward,
    symbolic_cluster_matrix,
)
from fockcc.fd_algebra import ANN, CRE, jw_matrix, kron_matrix, matrix_entry, verify_groebner
from fockcc.homotopy import TrackerConfig, cc_degree, monodromy_solve, variety_degree
from fockcc.multipoly import SparsePolynomial, psi_var, t_var
from fockcc.truncation import (
    FLAG,
    SPINOR,
    LevelSet,
    TruncationGrid,
    census,
    dimension,
    flag_parameterization,
    is_linear,
    spinor_parameterization,
)
from reference import MASTER_D2, MASTER_D3, cluster_matrix_entries, parse_latex, psi_column_entries

CFG = TrackerConfig()
HAM_SEEDS = (0, 1, 2)
LINES = []
SLICE_SEEDS = (0, 1)

# (name, d, n, sigma, expected degree, expected CC degree)
INSTANCES = [
    ("flag (2,4)", 2, 4, FLAG, 12, 74),
    ("spinor n=4", 2, 4, SPINOR, 2, 13),
    ("spinor n=5", 2, 5, SPINOR, 12, 98),
]


def report(k, ok, detail, seconds, limit=None):
    timely = limit is None or seconds < limit
    status = "PASS" if ok and timely else "FAIL"
    budget = f" (limit {limit:g} s)" if limit is not None else ""
    line = f"criterion {k:>2}: {status}  {detail}  [{seconds:.1f} s{budget}]"
    LINES.append(line)
    print("\n" + line, flush=True)
    assert ok, line
    assert timely, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def letters(n):
    return [(k, p) for p in range(1, n + 1) for k in (ANN, CRE)]


def kron_word(word, n):
    M = np.eye(1 << n, dtype=np.int64)
    for letter in word:
        M = M @ kron_matrix(letter, n)
    return M


def random_t(d, n, rng, sigma=None):
    return {v: complex(*rng.normal(size=2)) for v in cluster_variables(d, n, sigma)}


@pytest.fixture(scope="module")
def variety_reports():
    return {}


@pytest.fixture(scope="module")
def cc_reports():
    return {}


def _variety(cache, name, d, n, sigma):
    if name not in cache:
        cache[name] = variety_degree(d, n, sigma, CFG, seeds=SLICE_SEEDS)
    return cache[name]


def _cc(cache, name, d, n, sigma):
    if name not in cache:
        cache[name] = cc_degree(d, n, sigma, CFG, seeds=HAM_SEEDS)
    return cache[name]


def test_criterion_01_groebner():
    with Timer() as tm:
        reps = {n: verify_groebner(n) for n in (2, 3, 4)}
    ok = all(r.passed for r in reps.values())
    detail = ", ".join(f"n={n}: {len(r.pairs)} S-elements reduce to 0" if r.passed else f"n={n}: failures"
                       for n, r in reps.items())
    report(1, ok, detail, tm.seconds, 10)


def test_criterion_02_matrix_entries():
    bad = checked = 0
    with Timer() as tm:
        for n in range(1, 5):
            for length in range(0, 5):
                for w in product(letters(n), repeat=length):
                    K = kron_word(w, n)
                    for I, J in product(range(1 << n), repeat=2):
                        checked += 1
                        bad += matrix_entry(w, I, J, n) != K[I, J]
        rng = random.Random(2024)
        for _ in range(500):
            n = rng.randint(1, 5)
            w = tuple(rng.choice(letters(n)) for _ in range(rng.randint(0, 8)))
            K = kron_word(w, n)
            for I, J in product(range(1 << n), repeat=2):
                checked += 1
                bad += matrix_entry(w, I, J, n) != K[I, J]
    report(2, bad == 0, f"{checked} entries compared, {bad} mismatches", tm.seconds, 60)


def test_criterion_03_anticommutators():
    bad = 0
    with Timer() as tm:
        for n in range(1, 7):
            eye = np.eye(1 << n, dtype=np.int64)
            a = {p: jw_matrix((ANN, p), n).to_dense(int) for p in range(1, n + 1)}
            c = {p: jw_matrix((CRE, p), n).to_dense(int) for p in range(1, n + 1)}
            for p, q in product(range(1, n + 1), repeat=2):
                bad += not np.array_equal(a[p] @ a[q] + a[q] @ a[p], 0 * eye)
                bad += not np.array_equal(c[p] @ c[q] + c[q] @ c[p], 0 * eye)
                bad += not np.array_equal(a[p] @ c[q] + c[q] @ a[p], eye * (p == q))
    report(3, bad == 0, f"n=1..6, {bad} violated identities", tm.seconds, 30)


def test_criterion_04_master_polynomials():
    with Timer() as tm:
        counts = [len(master_polynomial(d)) for d in range(1, 5)]
        d2 = master_polynomial(2) == parse_latex(MASTER_D2)
        d3 = master_polynomial(3) == parse_latex(MASTER_D3)
    ok = counts == [1, 4, 31, 379] and d2 and d3
    report(4, ok, f"term counts {counts}, d=2 display {'match' if d2 else 'differ'}, "
                  f"d=3 display {'match' if d3 else 'differ'}", tm.seconds, 5)


def test_criterion_05_printed_parameterization():
    with Timer() as tm:
        printed = cluster_matrix_entries()
        ours = symbolic_cluster_matrix(2, 4)
        bad_matrix = sum(ours.get((r, c), SparsePolynomial()) != printed[r][c] for r in range(16) for c in range(16))
        column = list(forward_map(2, 4))
        bad_column = sum(a != b for a, b in zip(column, psi_column_entries()))
    ok = bad_matrix == 0 and bad_column == 0 and len(column) == 16
    report(5, ok, f"cluster matrix: {bad_matrix} of 256 entries differ; column: {bad_column} of 16 differ",
           tm.seconds, 5)


def test_criterion_06_round_trip():
    bad_sym = 0
    worst = 0.0
    with Timer() as tm:
        cases = [(d, n) for d in range(1, 4) for n in range(d, 7)]
        for d, n in cases:
            F = forward_map(d, n)
            sub = {psi_var(J): F[J] for J in range(1 << n) if J != first_n(d)}
            for J, x in inverse_map(d, n, "psi").items():
                bad_sym += x.substitute(sub) != SparsePolynomial.variable(t_var(*correspondence(J, d)))
        rng = np.random.default_rng(6)
        for k in range(100):
            d, n = cases[k % len(cases)]
            tv = random_t(d, n, rng)
            num = numeric_forward(tv, d, n)
            pt = {psi_var(J): num[J] for J in range(1 << n)}
            for J in range(1 << n):
                if J != first_n(d):
                    got = complex(inverse_coordinate(J, d, n, "psi").evaluate(pt))
                    err = abs(got - tv[t_var(*correspondence(J, d))]) / (1 + np.abs(num).max() ** 2)
                    worst = max(worst, err)
    ok = bad_sym == 0 and worst <= 1e-10
    report(6, ok, f"symbolic mismatches {bad_sym}; numeric max scaled error {worst:.1e}", tm.seconds, 120)


def test_criterion_07_censuses():
    expected = {(2, 4): (254, 119, 74), (3, 6): (32766, 4790, 2186)}
    with Timer() as tm:
        got = {}
        for key in expected:
            c = census(*key)
            got[key] = (c["level_sets"], c["linear"], c["hypothesis"])
    detail = "; ".join(f"{key}: got {got[key]}, expected {expected[key]}" for key in expected)
    report(7, got == expected, detail, tm.seconds, 60)


def test_criterion_08_structured_parameterizations():
    with Timer() as tm:
        rng = np.random.default_rng(8)
        flag_err = max(flag_parameterization(random_t(2, 4, rng, FLAG), 2, 4)["max_error"] for _ in range(100))
        spin_err = max(spinor_parameterization(random_t(2, 4, rng, SPINOR), 2, 4)["max_error"] for _ in range(100))
    ok = flag_err <= 1e-12 and spin_err <= 1e-12
    report(8, ok, f"flag minors max error {flag_err:.1e}; spinor Pfaffians max error {spin_err:.1e}", tm.seconds, 10)


def test_criterion_09_variety_degrees(variety_reports):
    with Timer() as tm:
        reps = {name: _variety(variety_reports, name, d, n, sigma) for name, d, n, sigma, _, _ in INSTANCES}
    ok = all(reps[name].counts == [deg] * len(SLICE_SEEDS) for name, _, _, _, deg, _ in INSTANCES)
    detail = "; ".join(f"{name}: counts {reps[name].counts}, expected {deg}" for name, _, _, _, deg, _ in INSTANCES)
    report(9, ok, detail, tm.seconds, 300)


def test_criterion_10_cc_degrees(cc_reports):
    with Timer() as tm:
        reps = {name: _cc(cc_reports, name, d, n, sigma) for name, d, n, sigma, _, _ in INSTANCES}
        system = assemble_cc_system(random_hamiltonian(4, 0), 2, 4, SPINOR)
        mono = monodromy_solve(system, monodromy_seed(2, 4, SPINOR, seed=0), cfg=CFG, loop_seed=0).n_finite
    ok = all(reps[name].counts == [cc] * len(HAM_SEEDS) for name, _, _, _, _, cc in INSTANCES)
    ok = ok and mono == reps["spinor n=4"].counts[0]
    detail = "; ".join(f"{name}: counts {reps[name].counts} ({reps[name].method}), expected {cc}"
                       for name, _, _, _, _, cc in INSTANCES)
    report(10, ok, f"{detail}; spinor n=4 monodromy {mono}", tm.seconds, 1800)


def _random_linear_level_sets(count, seed=11):
    rng = np.random.default_rng(seed)
    grids = [(2, 4), (2, 5), (3, 6)]
    out = []
    while len(out) < count:
        d, n = grids[len(out) % 3]
        pts = sorted(TruncationGrid(d, n).points)
        sigma = LevelSet(p for p in pts if rng.uniform() < 0.3)
        if sigma and len(sigma) < len(pts) and is_linear(sigma, d, n) and (d, n, sigma) not in out:
            out.append((d, n, sigma))
    return out


def test_criterion_11_linear_case():
    bad = []
    with Timer() as tm:
        cases = _random_linear_level_sets(20)
        for d, n, sigma in cases:
            rep = cc_degree(d, n, sigma, CFG, seeds=HAM_SEEDS)
            dim = dimension(sigma, d, n)
            if rep.counts != [dim + 1] * len(HAM_SEEDS) or rep.n_real != rep.counts:
                bad.append(f"({d},{n}) {sigma}: counts {rep.counts}, real {rep.n_real}, dim+1 {dim + 1}")
    detail = f"{len(cases)} linear level sets over (2,4),(2,5),(3,6); " + ("all ccdeg = dim+1, all real" if not bad
                                                                         else "; ".join(bad))
    report(11, not bad, detail, tm.seconds, 300)


def test_criterion_12_upper_bound(variety_reports, cc_reports):
    parts = []
    ok = True
    with Timer() as tm:
        for name, d, n, sigma, _, _ in INSTANCES:
            deg = _variety(variety_reports, name, d, n, sigma).degree
            cc = _cc(cc_reports, name, d, n, sigma)
            dim = dimension(sigma, d, n)
            for count in cc.counts:
                ok = ok and deg is not None and count <= (dim + 1) * deg
            parts.append(f"{name}: {max(cc.counts)} <= {dim + 1}*{deg} = {(dim + 1) * (deg or 0)}")
    report(12, ok, "; ".join(parts), tm.seconds)


STRETCH = os.environ.get("FOCKCC_STRETCH") == "1"


def test_criterion_13_stretch():
    if not STRETCH:
        LINES.append("criterion 13: SKIPPED  stretch goal; set FOCKCC_STRETCH=1 to run")
        print("\ncriterion 13: SKIPPED  stretch goal (flag (2,5) -> 713, FSCCSD (3,6) -> 1195); "
              "set FOCKCC_STRETCH=1 to run", flush=True)
        pytest.skip("stretch criterion; set FOCKCC_STRETCH=1")
    with Timer() as tm:
        flag = cc_degree(2, 5, FLAG, CFG, seeds=(0,), method="monodromy")
        fsccsd = cc_degree(3, 6, {(1, 0), (2, 1), (1, 1), (2, 2)}, CFG, seeds=(0,), method="monodromy")
    ok = flag.ccdeg == 713 and fsccsd.ccdeg == 1195
    report(13, ok, f"flag (2,5): {flag.ccdeg} (expected 713); FSCCSD (3,6): {fsccsd.ccdeg} (expected 1195)",
           tm.seconds, 24 * 3600)
