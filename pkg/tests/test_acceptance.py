"""Exit criteria.

Each test records one PASS/FAIL line, printed in the "acceptance criteria"
section of the pytest summary. Tolerances are fixed here.

  1. estimator identity on an exhaustive balanced 4-gate design   rel L2 <= 1e-9, < 5 s
  2. self inner product equals M over 100 random combinations      exact, < 5 s
  3. cross inner product |sum T T'| / M <= 5 / sqrt(M), M = 1e4     >= 95 of 100 seeds, < 30 s
  4. noise error ratio err(1e4) / err(2.5e3) within 0.5 +- 30 %     20 seeds, < 2 min
  5. common-mode offset changes the estimate by                    rel L2 <= 1e-12
  6. KL (8 restarts) vs exhaustive minimum balanced cut            >= 90 % exact, never > +1, < 1 min
  7. trapezoid voltage vs (I0 tau / C)(1 - exp(-t / tau))          <= 1 % at dt = tau / 50
  8. selftest and every CLI command byte-identical across two runs
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from sco import fixtures
from sco.netlist import serialize_netlist, transition_alphabet_size
from sco.oracles import exhaustive_min_bisection, partition_estimate
from sco.powermodel import (NoiseSpec, Waveform, generate_trace_set, random_pairs,
                            subtract_ensemble_mean, synthetic_templates)
from sco.recovery import (activation_sequence, empirical_orthogonality, estimate_response,
                          reference_response)
from sco.refine import LoadModel, min_cut_bisect, voltage_from_current

pytestmark = pytest.mark.acceptance


def _rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_estimator_identity(criterion):
    t0 = time.perf_counter()
    c = fixtures.independent()              # INV, BUF, NAND2, XOR2 on disjoint inputs
    tmpl = synthetic_templates(c, length=100, seed=11)
    v = range(1 << c.width)
    raw = generate_trace_set(c, tmpl, list(itertools.product(v, v)))
    ts = subtract_ensemble_mean(raw)
    worst = worst_ref = 0.0
    for g in c.gates:
        for j in range(transition_alphabet_size(g)):
            seq = activation_sequence(c, ts, g.id, j)
            est = estimate_response(ts, seq).estimate.samples
            worst = max(worst, _rel(est, partition_estimate(raw.traces, seq.signs)))
            worst_ref = max(worst_ref, _rel(est, reference_response(c, tmpl, (g.id, j)).samples))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and worst_ref <= 1e-9 and elapsed < 5
    criterion(1, ok, f"max rel L2 vs partition oracle {worst:.2e}, vs isolated target "
                     f"{worst_ref:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-9
    assert worst_ref <= 1e-9
    assert elapsed < 5


def test_self_orthogonality(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    circuits = [fixtures.c17(), fixtures.independent(), fixtures.chain(4)]
    bad = 0
    for _ in range(100):
        c = circuits[rng.integers(len(circuits))]
        k = int(rng.integers(c.num_gates))
        j = int(rng.integers(transition_alphabet_size(c.gates[k])))
        m = int(rng.integers(1, 2000))
        pairs = random_pairs(c.width, m, int(rng.integers(2**31)))
        inner, norm = empirical_orthogonality(c, pairs, (k, j), (k, j))
        bad += inner != m or norm != 1.0
    elapsed = time.perf_counter() - t0
    criterion(2, bad == 0 and elapsed < 5, f"{100 - bad}/100 exact, {elapsed:.2f} s")
    assert bad == 0
    assert elapsed < 5


def test_cross_orthogonality_decay(criterion):
    t0 = time.perf_counter()
    c = fixtures.independent()
    m = 10_000
    bound = 5 / math.sqrt(m)
    targets = [((0, 0), (2, 3)), ((1, 1), (3, 6)), ((0, 1), (1, 0))]
    vals = []
    for seed in range(100):
        a, b = targets[seed % len(targets)]
        vals.append(empirical_orthogonality(c, random_pairs(c.width, m, seed), a, b)[1])
    vals = np.abs(vals)
    hits = int(np.sum(vals <= bound))
    elapsed = time.perf_counter() - t0
    ok = hits >= 95 and elapsed < 30
    criterion(3, ok, f"{hits}/100 seeds within {bound:.3f}; median |normalized| "
                     f"{np.median(vals):.3f}, {elapsed:.2f} s")
    assert hits >= 95, (f"only {hits}/100 seeds satisfy |sum T T'|/M <= {bound}; "
                        f"median {np.median(vals):.3f}")
    assert elapsed < 30


def test_noise_convergence(criterion):
    t0 = time.perf_counter()
    c = fixtures.independent()
    tmpl = synthetic_templates(c, length=100, seed=11)
    target = (0, 0)
    truth = reference_response(c, tmpl, target).samples
    sigma = 1e-3

    def rms_error(m, seed):
        raw = generate_trace_set(c, tmpl, m=m, seed=seed, noise=NoiseSpec(sigma, seed + 10**6))
        ts = subtract_ensemble_mean(raw)
        est = estimate_response(ts, activation_sequence(c, ts, *target)).estimate.samples
        return float(np.sqrt(np.mean((est - truth) ** 2)))

    small = np.mean([rms_error(2_500, s) for s in range(20)])
    large = np.mean([rms_error(10_000, s) for s in range(20)])
    ratio = large / small
    elapsed = time.perf_counter() - t0
    ok = 0.35 <= ratio <= 0.65 and elapsed < 120
    criterion(4, ok, f"RMS error ratio {ratio:.3f} (target 0.5 +- 30 %), {elapsed:.1f} s")
    assert 0.35 <= ratio <= 0.65
    assert elapsed < 120


def test_common_mode_rejection(criterion):
    c = fixtures.c17()
    tmpl = synthetic_templates(c, length=120, seed=4)
    raw = generate_trace_set(c, tmpl, m=3000, seed=8, noise=NoiseSpec(2e-4, 3))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(5):
        offset = Waveform(rng.normal(0, 1e-3, tmpl.length) + 5e-3, tmpl.dt)
        shifted = raw.with_offset(offset)
        for k, j in [(0, 0), (3, 5), (5, 11)]:
            seq = activation_sequence(c, raw, k, j)
            a = estimate_response(subtract_ensemble_mean(raw), seq).estimate.samples
            b = estimate_response(subtract_ensemble_mean(shifted), seq).estimate.samples
            worst = max(worst, _rel(b, a))
    criterion(5, worst <= 1e-12, f"max rel L2 change {worst:.2e}")
    assert worst <= 1e-12


def test_bisection_quality(criterion):
    t0 = time.perf_counter()
    exact = 0
    worst = 0
    for s in range(50):
        n = int(np.random.default_rng([77, s]).integers(4, 13))
        c = fixtures.random_dag(n, int(np.random.default_rng([78, s]).integers(2, 6)), seed=s)
        kl = min_cut_bisect(c, seed=s, restarts=8).cut_size
        best = exhaustive_min_bisection(c)
        exact += kl == best
        worst = max(worst, kl - best)
    elapsed = time.perf_counter() - t0
    ok = exact >= 45 and worst <= 1 and elapsed < 60
    criterion(6, ok, f"{exact}/50 at exhaustive minimum, worst excess {worst}, "
                     f"{elapsed:.1f} s")
    assert exact >= 45
    assert worst <= 1
    assert elapsed < 60


def test_voltage_derivation(criterion):
    i0, tau, cap = 1e-3, 2e-10, 10e-15
    dt = tau / 50
    t = np.arange(1000) * dt
    v = voltage_from_current(Waveform(i0 * np.exp(-t / tau), dt), LoadModel(cap, 0.0)).samples
    exact = i0 * tau / cap * (1 - np.exp(-t / tau))
    err = float(np.max(np.abs(v[1:] - exact[1:]) / exact[1:]))
    criterion(7, err <= 0.01, f"max pointwise relative error {err:.2e}")
    assert err <= 0.01


def _run(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "sco", *args], cwd=cwd, capture_output=True)
    return proc.returncode, proc.stdout


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_cli_determinism(tmp_path, criterion):
    (tmp_path / "c17.net").write_text(serialize_netlist(fixtures.c17()))
    commands = [
        ["selftest"],
        ["gen", "--netlist", "../c17.net", "--m", "300", "--seed", "4", "--sigma", "1e-5",
         "--length", "60", "--out", "gen"],
        ["recover", "--netlist", "../c17.net", "--traces", "gen/traces.csv", "--gate", "4",
         "--j", "3", "--truth", "gen/templates.csv", "--out", "rec.csv"],
        ["ortho", "--netlist", "../c17.net", "--traces", "gen/traces.csv", "--a", "0,1",
         "--b", "2,3"],
        ["bisect", "--netlist", "../c17.net", "--seed", "3", "--out", "bisect.json"],
        ["probe", "--netlist", "../c17.net", "--traces", "gen/traces.csv", "--templates",
         "gen/templates.csv", "--net", "N22", "--j", "0", "--volts", "--out", "probe"],
    ]
    runs = []
    for name in ("run1", "run2"):
        d = tmp_path / name
        d.mkdir()
        outputs = [_run(cmd, d) for cmd in commands]
        runs.append((outputs, _snapshot(d)))
    (out1, files1), (out2, files2) = runs
    codes = [rc for rc, _ in out1]
    same = out1 == out2 and files1 == files2
    ok = same and all(rc == 0 for rc in codes)
    criterion(8, ok, f"{len(commands)} commands, {len(files1)} files, exit codes {codes}, "
                     f"byte-identical={same}")
    assert all(rc == 0 for rc in codes)
    assert out1 == out2
    assert files1 == files2
