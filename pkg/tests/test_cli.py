import json
import subprocess
import sys

import numpy as np
import pytest

from sco.cli import main
from sco.fixtures import INVERTER, chain
from sco.formats import read_templates, read_trace_set, read_waveform
from sco.netlist import parse_netlist, serialize_netlist
from sco.oracles import partition_estimate
from sco.recovery import activation_sequence
from sco.refine import LoadModel, voltage_from_current


@pytest.fixture
def inv_net(tmp_path):
    p = tmp_path / "inv.net"
    p.write_text(INVERTER)
    return p


def _gen(tmp_path, netlist, m=8, seed=1, sigma=0.0, out="gen", extra=()):
    out = tmp_path / out
    rc = main(["gen", "--netlist", str(netlist), "--m", str(m), "--seed", str(seed),
               "--sigma", str(sigma), "--length", "40", "--out", str(out), *extra])
    assert rc == 0
    return out


def test_gen_writes_files(tmp_path, inv_net, capsys):
    out = _gen(tmp_path, inv_net)
    assert (out / "traces.csv").read_text().startswith("SCO-TRACES,v1,8,40,")
    assert read_trace_set(out / "traces.csv").m == 8
    assert parse_netlist((out / "circuit.net").read_text()) == parse_netlist(INVERTER)
    assert read_templates(out / "templates.csv").num_gates == 1
    assert "M=8" in capsys.readouterr().out


def test_gen_twice_identical(tmp_path, inv_net):
    a = _gen(tmp_path, inv_net, sigma=1e-4, out="a")
    b = _gen(tmp_path, inv_net, sigma=1e-4, out="b")
    for name in ("circuit.net", "templates.csv", "traces.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_gen_m_zero_is_usage_error(tmp_path, inv_net):
    with pytest.raises(SystemExit) as info:
        main(["gen", "--netlist", str(inv_net), "--m", "0", "--out", str(tmp_path)])
    assert info.value.code == 2
    assert not (tmp_path / "traces.csv").exists()


def test_gen_bad_netlist_leaves_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text("input a\ngate g0 INV b -> y\n")
    rc = main(["gen", "--netlist", str(bad), "--m", "4", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "no driver" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_recover_matches_oracle(tmp_path, inv_net, capsys):
    out = _gen(tmp_path, inv_net, m=64, seed=3)
    capsys.readouterr()
    rc = main(["recover", "--netlist", str(inv_net), "--traces", str(out / "traces.csv"),
               "--gate", "0", "--j", "0", "--out", str(tmp_path / "rec.csv")])
    assert rc == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("gate=0 j=0 M=64 positives=") and line.endswith("snr_db=n/a")
    w, meta = read_waveform(tmp_path / "rec.csv")
    raw = read_trace_set(out / "traces.csv")
    signs = activation_sequence(parse_netlist(INVERTER), raw, 0, 0).signs
    ref = partition_estimate(raw.traces, signs)
    assert np.max(np.abs(w.samples - ref)) <= 1e-9 * np.max(np.abs(ref))
    assert meta["positives"] == int(np.sum(signs == 1))


def test_recover_out_of_range(tmp_path, inv_net, capsys):
    out = _gen(tmp_path, inv_net)
    rc = main(["recover", "--netlist", str(inv_net), "--traces", str(out / "traces.csv"),
               "--gate", "0", "--j", "99", "--out", str(tmp_path / "r.csv")])
    assert rc == 2
    assert "transition index 99 ≥ N_k=2" in capsys.readouterr().err


def test_recover_with_truth(tmp_path, inv_net, capsys):
    out = _gen(tmp_path, inv_net, m=200)
    capsys.readouterr()
    rc = main(["recover", "--netlist", str(inv_net), "--traces", str(out / "traces.csv"),
               "--gate", "0", "--j", "1", "--truth", str(out / "templates.csv"),
               "--out", str(tmp_path / "r.csv")])
    assert rc == 0
    snr = capsys.readouterr().out.split("snr_db=")[1].strip()
    assert np.isfinite(float(snr))


def test_recover_logs_mean_removal(tmp_path, inv_net, caplog):
    out = _gen(tmp_path, inv_net)
    with caplog.at_level("INFO", logger="sco"):
        main(["recover", "--netlist", str(inv_net), "--traces", str(out / "traces.csv"),
              "--gate", "0", "--j", "0", "--out", str(tmp_path / "r.csv")])
    assert any("ensemble mean" in r.message for r in caplog.records)


def test_recover_width_mismatch(tmp_path, inv_net):
    # c17 traces carry 5-bit vectors; the inverter netlist has one input
    assert main(["gen", "--fixture", "c17", "--m", "20", "--out", str(tmp_path / "w")]) == 0
    rc = main(["recover", "--netlist", str(inv_net), "--traces",
               str(tmp_path / "w" / "traces.csv"), "--gate", "0", "--j", "0",
               "--out", str(tmp_path / "r.csv")])
    assert rc == 2


def test_ortho(tmp_path, inv_net, capsys):
    rc = main(["ortho", "--netlist", str(inv_net), "--m", "100", "--seed", "2",
               "--a", "0,0", "--b", "0,0"])
    assert rc == 0
    assert "M=100 inner=100 normalized=1.0" in capsys.readouterr().out


def test_bisect_chain(tmp_path, capsys):
    p = tmp_path / "chain.net"
    p.write_text(serialize_netlist(chain(4)))
    assert main(["bisect", "--netlist", str(p), "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["cut_size"] == 1 and doc["cut_nets"] == ["n1"]


def test_probe_depth_zero_with_volts(tmp_path, inv_net):
    out = _gen(tmp_path, inv_net, m=32)
    rc = main(["probe", "--netlist", str(inv_net), "--traces", str(out / "traces.csv"),
               "--templates", str(out / "templates.csv"), "--net", "y", "--j", "0",
               "--volts", "--capacitance", "2e-14", "--v0", "0.3",
               "--out", str(tmp_path / "p")])
    assert rc == 0
    report = json.loads((tmp_path / "p" / "tree.json").read_text())
    assert report["tree"]["children"] == [] and report["cut_sizes"] == []
    leaf, _ = read_waveform(tmp_path / "p" / "leaf.csv")
    volts, meta = read_waveform(tmp_path / "p" / "leaf_volts.csv", tag="SCO-VOLTAGE")
    assert volts == voltage_from_current(leaf, LoadModel(2e-14, 0.3))
    assert meta["gate"] == 0


def test_probe_chain_cut_sizes(tmp_path):
    net = tmp_path / "chain.net"
    net.write_text(serialize_netlist(chain(4)))
    out = _gen(tmp_path, net, m=300)
    rc = main(["probe", "--netlist", str(net), "--traces", str(out / "traces.csv"),
               "--net", "n3", "--j", "0", "--out", str(tmp_path / "p")])
    assert rc == 0
    report = json.loads((tmp_path / "p" / "tree.json").read_text())
    assert report["cut_sizes"] == [1, 1]


def test_probe_arity_cap_exit_3(tmp_path, capsys):
    net = tmp_path / "wide.net"
    lines = [f"input a{i}" for i in range(9)] + ["output y0"]
    lines += [f"gate g{i} INV a{i} -> y{i}" for i in range(9)]
    net.write_text("\n".join(lines))
    out = _gen(tmp_path, net, m=10)
    capsys.readouterr()
    rc = main(["probe", "--netlist", str(net), "--traces", str(out / "traces.csv"),
               "--net", "y3", "--j", "0", "--cap", "8", "--out", str(tmp_path / "p")])
    assert rc == 3
    err = capsys.readouterr().err
    assert "level 0" in err and "arity 9" in err
    assert json.loads((tmp_path / "p" / "tree.json").read_text())["failed_level"] == 0


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.strip().endswith("passed")


def test_missing_file_exit_2(tmp_path):
    assert main(["bisect", "--netlist", str(tmp_path / "nope.net")]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sco", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    for cmd in ("gen", "recover", "ortho", "bisect", "probe", "selftest"):
        assert cmd in proc.stdout
