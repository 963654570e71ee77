"""Command-line entry point: ``sco <command> [options]``.

Exit codes: 0 success, 1 internal error, 2 usage or validation error,
3 model-capacity (arity cap) failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fixtures
from .formats import (FormatError, atomic_write, dump_templates, dump_trace_set, dump_waveform,
                      read_templates, read_trace_set)
from .netlist import DEFAULT_ARITY_CAP, ArityCapExceeded, NetlistError, parse_netlist, \
    serialize_netlist
from .powermodel import NoiseSpec, generate_trace_set, subtract_ensemble_mean, \
    synthetic_templates
from .recovery import activation_sequence, empirical_orthogonality, estimate_response, \
    reference_response
from .refine import LoadModel, min_cut_bisect, probe_net, voltage_from_current

log = logging.getLogger("sco")


class UsageError(Exception):
    pass


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def _target(s):
    try:
        g, j = (int(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected GATE,J, got {s!r}") from None
    return g, j


def _load_circuit(args):
    if getattr(args, "fixture", None):
        return fixtures.FIXTURES[args.fixture]()
    if not args.netlist:
        raise UsageError("one of --netlist or --fixture is required")
    return parse_netlist(Path(args.netlist).read_text(encoding="utf-8"))


def _load_traces(path, circuit):
    ts = read_trace_set(path)
    if ts.pairs.max(initial=0) >> circuit.width:
        raise UsageError(f"trace file {path} has input vectors wider than the "
                         f"netlist's {circuit.width} primary inputs")
    return ts


def cmd_gen(args):
    circuit = _load_circuit(args)
    if args.templates:
        templates = read_templates(args.templates)
    else:
        templates = synthetic_templates(
            circuit, dt=args.dt, length=args.length, peak=args.peak,
            tau_rise=args.tau_rise, tau_fall=args.tau_fall,
            seed=args.seed if args.template_seed is None else args.template_seed)
    templates.check(circuit)
    ts = generate_trace_set(circuit, templates, m=args.m, seed=args.seed,
                            noise=NoiseSpec(args.sigma, args.seed))
    # render everything first so a failure leaves no partial output
    out = Path(args.out)
    files = {
        out / "circuit.net": serialize_netlist(circuit),
        out / "templates.csv": dump_templates(templates),
        out / "traces.csv": dump_trace_set(ts),
    }
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for path, text in files.items():
            atomic_write(path, text)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    print(f"gates={circuit.num_gates} inputs={circuit.width} M={ts.m} "
          f"length={ts.length} dt={ts.dt!r} out={out}")
    return 0


def cmd_recover(args):
    circuit = _load_circuit(args)
    ts = _load_traces(args.traces, circuit)
    seq = activation_sequence(circuit, ts, args.gate, args.j)
    if not ts.mean_removed:
        log.info("removing ensemble mean from %d traces", ts.m)
        ts = subtract_ensemble_mean(ts)
    truth = None
    if args.truth:
        templates = read_templates(args.truth)
        templates.check(circuit)
        if templates.dt != ts.dt or templates.length != ts.length:
            raise UsageError("truth templates and traces are on different sample grids")
        truth = reference_response(circuit, templates, (args.gate, args.j), ts.pairs)
    rec = estimate_response(ts, seq, truth)
    atomic_write(args.out, dump_waveform(rec.estimate, rec.gate, rec.index, rec.m,
                                         rec.positives))
    snr = "n/a" if rec.snr_db is None else f"{rec.snr_db:.3f}"
    print(f"gate={rec.gate} j={rec.index} M={rec.m} positives={rec.positives} snr_db={snr}")
    return 0


def cmd_ortho(args):
    circuit = _load_circuit(args)
    if args.traces:
        pairs = _load_traces(args.traces, circuit).pairs
    else:
        from .powermodel import random_pairs
        pairs = random_pairs(circuit.width, args.m, args.seed)
    inner, norm = empirical_orthogonality(circuit, pairs, args.a, args.b)
    print(f"a={args.a[0]},{args.a[1]} b={args.b[0]},{args.b[1]} M={len(pairs)} "
          f"inner={inner} normalized={norm!r}")
    return 0


def cmd_bisect(args):
    circuit = _load_circuit(args)
    part = min_cut_bisect(circuit, seed=args.seed, restarts=args.restarts)
    doc = {
        "side_a": sorted(part.side_a),
        "side_b": sorted(part.side_b),
        "cut_nets": sorted(part.cut_nets),
        "cut_size": part.cut_size,
    }
    text = json.dumps(doc, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_probe(args):
    circuit = _load_circuit(args)
    ts = _load_traces(args.traces, circuit)
    templates = None
    if args.templates:
        templates = read_templates(args.templates)
        templates.check(circuit)
    if not ts.mean_removed:
        log.info("removing ensemble mean from %d traces", ts.m)
        ts = subtract_ensemble_mean(ts)
    result = probe_net(circuit, templates, ts, args.net, args.j, seed=args.seed,
                       cap=args.cap, restarts=args.restarts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write(out / "tree.json", result.report())
    if not result.ok:
        print(f"error: {result.error}", file=sys.stderr)
        return 3
    leaf = result.leaf
    atomic_write(out / "leaf.csv", dump_waveform(leaf.estimate, leaf.gate, leaf.index,
                                                 leaf.m, leaf.positives))
    if args.volts:
        v = voltage_from_current(leaf.estimate, LoadModel(args.capacitance, args.v0))
        atomic_write(out / "leaf_volts.csv",
                     dump_waveform(v, leaf.gate, leaf.index, leaf.m, leaf.positives,
                                   tag="SCO-VOLTAGE"))
    snr = "n/a" if leaf.snr_db is None else f"{leaf.snr_db:.3f}"
    print(f"net={args.net} gate={leaf.gate} j={leaf.index} depth={len(result.path) - 1} "
          f"cut_sizes={result.cut_sizes} snr_db={snr}")
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest
    return 0 if run_selftest() else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="sco", description="Side-channel oscilloscope: synthesize power traces of a "
        "combinational circuit and recover single-gate current responses.")
    sub = p.add_subparsers(dest="command", required=True)

    def circuit_args(sp, fixture=False):
        sp.add_argument("--netlist", help="netlist file")
        if fixture:
            sp.add_argument("--fixture", choices=sorted(fixtures.FIXTURES),
                            help="use a built-in circuit instead of --netlist")

    sp = sub.add_parser("gen", help="write netlist, template and trace-set files")
    circuit_args(sp, fixture=True)
    sp.add_argument("--templates", help="template file (default: synthetic templates)")
    sp.add_argument("--m", type=_positive_int, required=True, help="number of traces M")
    sp.add_argument("--seed", type=int, default=0, help="seed for pairs and noise")
    sp.add_argument("--sigma", type=_nonneg_float, default=0.0, help="noise std (A)")
    sp.add_argument("--dt", type=_positive_float, default=1e-11, help="sample period (s)")
    sp.add_argument("--length", type=_positive_int, default=200, help="samples per trace")
    sp.add_argument("--peak", type=float, default=1e-3, help="nominal template peak (A)")
    sp.add_argument("--tau-rise", type=_positive_float, default=5e-11)
    sp.add_argument("--tau-fall", type=_positive_float, default=2e-10)
    sp.add_argument("--template-seed", type=int, default=None,
                    help="seed for synthetic templates (default: --seed)")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("recover", help="recover one gate transition's response")
    circuit_args(sp, fixture=True)
    sp.add_argument("--traces", required=True)
    sp.add_argument("--gate", type=int, required=True)
    sp.add_argument("--j", type=int, required=True, help="transition index")
    sp.add_argument("--truth", help="template file for an SNR against ground truth")
    sp.add_argument("--out", default="recovered.csv")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("ortho", help="inner product of two activation sequences")
    circuit_args(sp, fixture=True)
    sp.add_argument("--traces", help="take pairs from a trace file")
    sp.add_argument("--m", type=_positive_int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--a", type=_target, required=True, metavar="GATE,J")
    sp.add_argument("--b", type=_target, required=True, metavar="GATE,J")
    sp.set_defaults(func=cmd_ortho)

    sp = sub.add_parser("bisect", help="balanced min-cut bisection of the circuit")
    circuit_args(sp, fixture=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=_positive_int, default=8)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bisect)

    sp = sub.add_parser("probe", help="recursive refinement down to one net")
    circuit_args(sp, fixture=True)
    sp.add_argument("--traces", required=True)
    sp.add_argument("--templates", help="template file for per-level SNR")
    sp.add_argument("--net", required=True)
    sp.add_argument("--j", type=int, required=True, help="driver gate transition index")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=_positive_int, default=8)
    sp.add_argument("--cap", type=_positive_int, default=DEFAULT_ARITY_CAP,
                    help="composite arity cap")
    sp.add_argument("--volts", action="store_true", help="also write the leaf voltage")
    sp.add_argument("--capacitance", type=_positive_float, default=10e-15, help="farads")
    sp.add_argument("--v0", type=float, default=0.0, help="initial voltage")
    sp.add_argument("--out", default="probe")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("selftest", help="run the small-fixture oracle checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ArityCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, NetlistError, FormatError, ValueError, OSError, IndexError,
            KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
