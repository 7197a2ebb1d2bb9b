import csv
import json
from pathlib import Path

import numpy as np
import pytest

from cqavwc import cli, families, qmath
from cqavwc.channel import channel_to_dict, random_channel

CHANNELS = Path(__file__).resolve().parent.parent / "channels"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out), out


def write_channel(tmp_path, raw, name="ch.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


class TestValidate:
    def test_valid_qubit_file(self, capsys):
        code, rep, _ = run(capsys, "validate", CHANNELS / "jammer_qubit.json")
        assert code == cli.EXIT_OK
        assert rep["results"]["valid"] and rep["results"]["violations"] == []
        assert rep["command"] == "validate" and rep["tool_version"]

    def test_missing_key_is_named(self, capsys, tmp_path):
        raw = channel_to_dict(random_channel(np.random.default_rng(61), 2, 2, 2, 2))
        raw["inputs"], raw["states"] = ["1", "2"], ["1", "2"]
        raw["rho"] = {f"{x}|{t}": v for (x, t), v in zip(
            [(x, t) for x in "12" for t in "12"], raw["rho"].values())}
        raw["sigma"] = {f"{x}|{t}": v for (x, t), v in zip(
            [(x, t) for x in "12" for t in "12"], raw["sigma"].values())}
        del raw["rho"]["1|2"]
        code, rep, _ = run(capsys, "validate", write_channel(tmp_path, raw))
        assert code == cli.EXIT_VALIDATION
        (v,) = rep["results"]["violations"]
        assert (v["x"], v["t"], v["invariant"]) == ("1", "2", "missing_key")
        assert "1|2" in json.dumps(v)

    def test_trace_violation(self, capsys, tmp_path):
        raw = channel_to_dict(families.jammer_channel())
        raw["rho"]["0|a"] = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.4, 0.0]]]
        code, rep, _ = run(capsys, "validate", write_channel(tmp_path, raw))
        assert code == cli.EXIT_VALIDATION
        (v,) = rep["results"]["violations"]
        assert v["invariant"] == "unit_trace" and v["measured"] == pytest.approx(0.9)

    def test_parse_errors(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema_version": 1,\n  "inputs": [}')
        code, rep, _ = run(capsys, "validate", bad)
        assert code == cli.EXIT_PARSE
        assert rep["error"]["type"] == "ParseError" and "bad.json:2:" in rep["error"]["context"]
        code, rep, _ = run(capsys, "validate", tmp_path / "absent.json")
        assert code == cli.EXIT_PARSE
        raw = channel_to_dict(families.jammer_channel())
        raw["schema_version"] = 2
        code, _, _ = run(capsys, "validate", write_channel(tmp_path, raw))
        assert code == cli.EXIT_PARSE


class TestSymmetrize:
    def test_xor_joint(self, capsys):
        code, rep, _ = run(capsys, "symmetrize", CHANNELS / "xor_symmetrizable.json", "--mode", "joint")
        verdict = rep["results"]["joint"]
        assert code == 0 and verdict["symmetrizable"] and verdict["residual"] <= 1e-7
        assert set(verdict["certificate"]) == {"0", "1"}

    def test_state_independent_per_t(self, capsys, tmp_path):
        ch = families.state_blind_channel([families.basis_state(0), np.full((2, 2), 0.5)], n_states=3)
        code, rep, _ = run(capsys, "symmetrize", write_channel(tmp_path, channel_to_dict(ch)))
        per_t = rep["results"]["per_t"]
        assert code == 0 and set(per_t) == {"0", "1", "2"}
        assert not any(v["symmetrizable"] for v in per_t.values())

    def test_repeatable(self, capsys, tmp_path):
        path = write_channel(tmp_path, channel_to_dict(random_channel(np.random.default_rng(62), 2, 2, 2, 2)))
        outs = [run(capsys, "symmetrize", path, "--mode", "joint")[2] for _ in range(2)]
        assert outs[0] == outs[1]


class TestBound:
    def test_orthogonal_constant(self, capsys):
        code, rep, _ = run(capsys, "bound", CHANNELS / "orthogonal_constant.json")
        assert code == 0
        assert rep["results"]["bound_value"] == pytest.approx(1.0, abs=1e-3)

    def test_symmetrizable_cites_gate(self, capsys):
        for mode in ("no-csi", "csi"):
            code, rep, _ = run(capsys, "bound", CHANNELS / "xor_symmetrizable.json", "--mode", mode)
            res = rep["results"]
            assert code == 0 and res["bound_value"] == 0.0
            assert "(Eq. t3)" in res["symmetrizability_note"]
            assert res["gate"]["joint"] is True

    def test_resource_cap(self, capsys):
        code, rep, _ = run(capsys, "bound", CHANNELS / "jammer_qubit.json", "--n", "3", "--max-dim", "4")
        assert code == cli.EXIT_RESOURCE
        assert rep["error"]["cap"] == "max_dim"

    def test_repeatable(self, capsys):
        args = ("bound", CHANNELS / "jammer_qubit.json", "--mode", "csi", "--grid-step", "0.125")
        assert run(capsys, *args)[2] == run(capsys, *args)[2]


class TestSimulate:
    def test_noiseless_secure_rows(self, capsys, tmp_path):
        out = tmp_path / "rows.csv"
        code, rep, _ = run(capsys, "simulate", CHANNELS / "orthogonal_constant.json",
                           "--n", "4", "--J", "4", "--seed", "1", "--csv", out)
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 1 and rows[0]["t_seq"] == "s|s|s|s"
        assert float(rows[0]["max_error"]) == pytest.approx(0.0, abs=1e-9)
        assert float(rows[0]["leakage_bits"]) == pytest.approx(0.0, abs=1e-12)
        assert rep["seeds"] == [1]

    def test_single_message_gap_column(self, capsys, tmp_path):
        out = tmp_path / "rows.csv"
        code, _, _ = run(capsys, "simulate", CHANNELS / "jammer_qubit.json",
                         "--n", "3", "--J", "1", "--L", "2", "--seeds", "3", "--csv", out)
        assert code == 0
        with out.open() as fh:
            reader = csv.reader(fh)
            assert next(reader) == cli.CSV_HEADER
            rows = list(reader)
        assert len(rows) == 3 * 8
        assert [r[0] for r in rows] == [s for s in ("0", "1", "2") for _ in range(8)]
        assert all(float(r[4]) == 0.0 for r in rows)

    def test_csv_round_trip_and_bytes(self, capsys, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            run(capsys, "simulate", CHANNELS / "jammer_qubit.json", "--n", "3", "--L", "2", "--seed", "7", "--csv", p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        with paths[0].open() as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == cli.CSV_HEADER
        assert all(0.0 <= float(r["max_error"]) <= 1.0 for r in rows)
        assert float(rows[0]["rate_total"]) == pytest.approx(2 / 3)

    def test_stage_tagged_error(self, capsys):
        code, rep, _ = run(capsys, "simulate", CHANNELS / "jammer_qubit.json", "--n", "3", "--delta", "0.1")
        assert code == cli.EXIT_VALIDATION
        assert rep["error"]["stage"] == "typical_set"

    def test_bad_weights(self, capsys):
        code, rep, _ = run(capsys, "simulate", CHANNELS / "jammer_qubit.json", "--p", "0.5,0.2")
        assert code == cli.EXIT_VALIDATION


class TestLemmas:
    @pytest.mark.parametrize("dim", [2, 4])
    def test_all_pass(self, capsys, dim):
        code, rep, _ = run(capsys, "lemmas", "--dim", dim, "--trials", 200)
        res = rep["results"]
        assert code == 0 and res["all_pass"]
        assert res["gentle_measurement"]["violations"] == 0
        assert res["fannes"]["violations"] == 0

    def test_violation_exits_nonzero(self, capsys, monkeypatch):
        monkeypatch.setattr(qmath, "gentle_damage", lambda rho, x: (1.0, 0.0))
        code, rep, _ = run(capsys, "lemmas", "--trials", 10)
        assert code == cli.EXIT_LEMMA and not rep["results"]["all_pass"]

    def test_repeatable(self, capsys):
        assert run(capsys, "lemmas", "--trials", 50, "--seed", 3)[2] == run(capsys, "lemmas", "--trials", 50, "--seed", 3)[2]


def test_out_file_and_timing(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["validate", str(CHANNELS / "jammer_qubit.json"), "--out", str(out), "--timing"]) == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    assert rep["wall_clock_seconds"] >= 0.0
