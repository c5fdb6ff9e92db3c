"""Release gate: one end-to-end check per pinned criterion.

Every test prints a single [PASS]/[FAIL] line (run with -s to see them all)
and then asserts, so the printed table and the pytest outcome always agree.
Tolerances, seeds, fixture sizes, and time budgets are frozen; loosening any
of them to get a line green defeats the point of the gate.
"""

import filecmp
import json
import time
from pathlib import Path

import numpy as np
from numpy.random import default_rng

from povm_entangle import (
    HermitianOperator,
    McConfig,
    PovmSet,
    back_transform,
    bell_model,
    combine_outcomes,
    draw_counts,
    expected_frequencies,
    ghz_probe,
    lambda_gmax_analytic,
    lambda_operator,
    me_probe,
    negativity_report,
    noise_threshold,
    noisy_ghz_element,
    noisy_me_element,
    optimal_quasidistribution,
    partial_transpose,
    physicality_correct,
    propagate,
    reconstruct_povm,
    relative_frequencies,
    separability_eigenvalue_numeric,
    to_standard_form,
    witness_evaluate,
)
from povm_entangle.cli import main
from povm_entangle.tomography import CoincidenceCounts


def _verdict(num, label, ok, detail="", elapsed=None):
    tag = "PASS" if ok else "FAIL"
    timing = f" [{elapsed:.2f} s]" if elapsed is not None else ""
    line = f"[{tag}] criterion {num}: {label}{timing}"
    if detail:
        line += f" -- {detail}"
    print("\n" + line, flush=True)
    return ok


def _random_element(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    return HermitianOperator(m / np.trace(m).real, (2, 2))


def test_criterion_1_ideal_quasidistribution_grids():
    t0 = time.perf_counter()
    freqs = expected_frequencies(bell_model())
    povm = reconstruct_povm(freqs)
    ok = True
    worst = 0.0
    for lbl in povm.labels:
        form = to_standard_form(povm.element(lbl))
        qd = optimal_quasidistribution(form)
        rep = negativity_report(qd)
        g = qd.grid
        n_neg = int(np.sum(np.abs(g + 1 / 6) < 1e-10))
        n_pos = int(np.sum(np.abs(g - 1 / 3) < 1e-10))
        n_zero = int(np.sum(np.abs(g) < 1e-10))
        cross = max(
            np.max(np.abs(g[2 * a : 2 * a + 2, 2 * b : 2 * b + 2]))
            for a in range(3)
            for b in range(3)
            if a != b
        )
        worst = max(worst, cross, abs(rep.cumulative_negativity + 1.0))
        if not (n_neg == 6 and n_pos == 6 and n_zero == 24):
            ok = False
    elapsed = time.perf_counter() - t0
    ok = ok and worst < 1e-10 and elapsed < 1.0
    assert _verdict(
        1,
        "ideal grids: six -1/6, six +1/3, cross-axis zeros, cumulative -1",
        ok,
        f"worst deviation {worst:.2e}",
        elapsed,
    )


def test_criterion_2_pairwise_merge_is_separable():
    t0 = time.perf_counter()
    freqs = expected_frequencies(bell_model())
    counts = CoincidenceCounts(
        freqs.outcomes, np.rint(freqs.probs * 400).astype(np.int64), freqs.basis_map
    )
    worst = -np.inf
    for groups in ([["AA", "AD"], ["DA", "DD"]], [["AA", "DA"], ["AD", "DD"]]):
        merged = combine_outcomes(counts, groups)
        povm = reconstruct_povm(relative_frequencies(merged))
        povm, _, _ = physicality_correct(povm)
        for lbl in povm.labels:
            qd = optimal_quasidistribution(to_standard_form(povm.element(lbl)))
            worst = max(worst, float(-qd.grid.min()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 1.0
    assert _verdict(
        2,
        "pairwise outcome merges give nonnegative grids",
        ok,
        f"most negative entry {-worst:.2e}",
        elapsed,
    )


def test_criterion_3_physicality_correction_values():
    spoiled = [np.diag([-0.05, 0.25, 0.25, 0.25]).astype(complex)]
    spoiled += [np.diag([1.05 / 3, 0.25, 0.25, 0.25]).astype(complex)] * 3
    povm = PovmSet(
        ("AA", "AD", "DA", "DD"), tuple(HermitianOperator(m, (2, 2)) for m in spoiled)
    )
    corrected, p, lam = physicality_correct(povm)
    before = sum(el.matrix for el in povm.elements)
    after = sum(el.matrix for el in corrected.elements)
    residual_shift = float(np.max(np.abs(before - after)))
    ok = (
        abs(lam - 0.05001) < 1e-12
        and abs(p - 0.05001 / 0.30001) < 1e-12
        and residual_shift < 1e-12
    )
    assert _verdict(
        3,
        "correction reports lambda 0.05001, p 0.05001/0.30001, completeness intact",
        ok,
        f"lambda {lam:.6f}, p {p:.6f}, completeness shift {residual_shift:.2e}",
    )


def test_criterion_4_witness_noise_thresholds():
    checks = []
    tau_ghz = noise_threshold("ghz", 2)
    checks.append(abs(tau_ghz - 0.2) < 1e-9)
    tau_me = noise_threshold("me", 2)
    checks.append(abs(tau_me - 0.2) < 1e-9)
    checks.append(abs(noise_threshold("ghz", 30) - 1 / 3) < 1e-8)
    for eps, want in ((tau_ghz - 1e-9, "entangled"), (tau_ghz + 1e-9, "inconclusive")):
        res = witness_evaluate(noisy_ghz_element(2, eps), ghz_probe(2))
        checks.append(res.verdict == want)
    for eps, want in ((tau_me - 1e-9, "entangled"), (tau_me + 1e-9, "inconclusive")):
        res = witness_evaluate(noisy_me_element(2, eps), me_probe(2))
        checks.append(res.verdict == want)
    ok = all(checks)
    assert _verdict(
        4,
        "verdicts flip at eps 0.2 (ghz n=2, me d=2); ghz threshold tends to 1/3",
        ok,
        f"thresholds {tau_ghz:.10f} / {tau_me:.10f}",
    )


def test_criterion_5_solver_cross_validation():
    t0 = time.perf_counter()
    worst_gap = 0.0
    worst_spec = 0.0
    for n in (2, 3, 4):
        for d in (2, 3, 4):
            if d**n > 4096:
                continue
            op = lambda_operator(n, d)
            analytic = lambda_gmax_analytic(n, d)
            res = separability_eigenvalue_numeric(op, restarts=12, seed=0)
            worst_gap = max(worst_gap, abs(analytic - res.gmax))
            spectrum = np.linalg.eigvalsh(op.matrix)
            worst_spec = max(
                worst_spec, abs(spectrum[0] + 1.0), abs(spectrum[-1] - (d - 1))
            )
    elapsed = time.perf_counter() - t0
    ok = worst_gap < 1e-6 and worst_spec < 1e-9 and elapsed < 60.0
    assert _verdict(
        5,
        "numeric separability bound matches the closed form on all (n, d)",
        ok,
        f"worst gap {worst_gap:.2e}, spectrum endpoint error {worst_spec:.2e}",
        elapsed,
    )


def test_criterion_6_ppt_oracle_equivalence():
    t0 = time.perf_counter()
    rng = default_rng(6001)
    disagreements = 0
    for _ in range(1000):
        el = _random_element(rng)
        q = optimal_quasidistribution(to_standard_form(el)).q
        by_q = q < -1e-9
        by_ppt = float(np.linalg.eigvalsh(partial_transpose(el).matrix)[0]) < -1e-9
        if by_q != by_ppt:
            disagreements += 1
    elapsed = time.perf_counter() - t0
    ok = disagreements == 0 and elapsed < 120.0
    assert _verdict(
        6,
        "negativity verdict agrees with the partial-transpose oracle 1000/1000",
        ok,
        f"{disagreements} disagreements",
        elapsed,
    )


def test_criterion_7_back_transformation_closure():
    t0 = time.perf_counter()
    rng = default_rng(7001)
    worst = 0.0
    for _ in range(500):
        el = _random_element(rng)
        form = to_standard_form(el)
        tilde = back_transform(form, optimal_quasidistribution(form))
        recomposed = np.zeros((4, 4), dtype=complex)
        for j, sa in enumerate(tilde.states_a):
            pa = np.outer(sa, sa.conj())
            for k, sb in enumerate(tilde.states_b):
                recomposed += tilde.grid[j, k] * np.kron(pa, np.outer(sb, sb.conj()))
        worst = max(worst, float(np.max(np.abs(recomposed - el.matrix))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8
    assert _verdict(
        7,
        "transformed product decomposition reproduces 500 random elements",
        ok,
        f"worst entrywise error {worst:.2e}",
        elapsed,
    )


def test_criterion_8_desk_scale_error_propagation():
    t0 = time.perf_counter()
    counts = draw_counts(bell_model(counts_per_setting=10000), seed=0)
    report = propagate(counts, McConfig(sample_size=1000, seed=0))
    elapsed = time.perf_counter() - t0
    sig_ok = True
    mean_ok = True
    details = []
    for e in report.elements:
        sig_ok &= e.negativity_significance > 5.0
        mean_ok &= abs(e.max_negativity_mean + 1 / 6) <= 3.0 * e.max_negativity_std
        details.append(
            f"{e.label}: min-entry mean {e.max_negativity_mean:+.4f}"
            f" +/- {e.max_negativity_std:.4f}, significance {e.negativity_significance:.1f}"
        )
    for line in details:
        print("    " + line)
    ok = sig_ok and mean_ok and elapsed < 600.0
    assert _verdict(
        8,
        "10^4 counts, 1000 samples: significance > 5 and mean within 3 sigma of -1/6",
        ok,
        f"significance sub-check {sig_ok}, 3-sigma sub-check {mean_ok}",
        elapsed,
    )


def test_criterion_9_byte_identical_reruns(tmp_path):
    t0 = time.perf_counter()
    checks = []

    sim_a = tmp_path / "sim_a.json"
    sim_b = tmp_path / "sim_b.json"
    for target in (sim_a, sim_b):
        assert main(["simulate", "--counts", "400", "--seed", "5", "-o", str(target)]) == 0
    checks.append(sim_a.read_bytes() == sim_b.read_bytes())

    counts_csv = tmp_path / "counts.csv"
    assert main(["simulate", "--counts", "400", "--seed", "5", "-o", str(counts_csv)]) == 0
    rec_a = tmp_path / "rec_a.json"
    rec_b = tmp_path / "rec_b.json"
    for target in (rec_a, rec_b):
        assert main(["reconstruct", "--counts", str(counts_csv), "-o", str(target)]) == 0
    checks.append(rec_a.read_bytes() == rec_b.read_bytes())

    err_dirs = []
    for name, workers in (("err_w1", "1"), ("err_w2", "2")):
        out_dir = tmp_path / name
        rc = main(
            [
                "errors",
                "--counts",
                str(counts_csv),
                "--samples",
                "40",
                "--seed",
                "3",
                "--workers",
                workers,
                "-o",
                str(out_dir),
            ]
        )
        assert rc == 0
        err_dirs.append(out_dir)
    names = sorted(p.name for p in err_dirs[0].iterdir())
    checks.append(names == sorted(p.name for p in err_dirs[1].iterdir()))
    match, mismatch, errors = filecmp.cmpfiles(err_dirs[0], err_dirs[1], names, shallow=False)
    checks.append(mismatch == [] and errors == [] and len(match) == len(names))

    wit_a = tmp_path / "wit_a.json"
    wit_b = tmp_path / "wit_b.json"
    for target in (wit_a, wit_b):
        rc = main(
            ["witness", "--lambda", "-n", "3", "-d", "2", "--restarts", "8", "--seed", "2", "-o", str(target)]
        )
        assert rc == 0
    checks.append(wit_a.read_bytes() == wit_b.read_bytes())

    elapsed = time.perf_counter() - t0
    ok = all(checks)
    assert _verdict(
        9,
        "seeded reruns are byte identical, independent of worker count",
        ok,
        f"{sum(checks)}/{len(checks)} comparisons equal",
        elapsed,
    )
