import csv
import io
import json
import math

import numpy as np
import pytest

from risuav import cli
from risuav.experiment import (
    COLUMNS,
    ConfigError,
    SweepResult,
    derive,
    emit,
    load_config,
    parse_config,
    run_optimize,
    run_sweep,
)

from conftest import CONFIGS

MINIMAL = {"ris": [{"n_elements": 5}], "sweep": {"variable": "avg_snr_db", "start": 0, "stop": 30, "steps": 4}}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


class TestLoadConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.carrier_frequency_hz == 2e9
        assert cfg.gamma_out_db == 0.0
        assert cfg.ris[0].g1_dbi == 5.0 and cfg.ris[0].g2_dbi == 5.0
        assert cfg.environment.k0_db == 4.77
        assert cfg.mc is None

    def test_negative_elements(self):
        doc = dict(MINIMAL, ris=[{"n_elements": -3}])
        with pytest.raises(ConfigError) as info:
            parse_config(doc)
        assert info.value.path == "ris[0].n_elements"

    @pytest.mark.parametrize("patch,path", [
        ({"sweep": {"variable": "avg_snr_db", "start": 0, "stop": 1, "steps": 1}}, "sweep.steps"),
        ({"sweep": {"variable": "colour", "start": 0, "stop": 1, "steps": 3}}, "sweep.variable"),
        ({"modulation": "QAM"}, "modulation"),
        ({"bogus": 1}, "bogus"),
        ({"environment": {"loss_convention": "x"}}, "environment"),
        ({"mc": {"trials": 0}}, "mc"),
        ({"ris": [{"n_elements": 5, "m1": "one"}]}, "ris[0].m1"),
    ])
    def test_field_paths(self, patch, path):
        with pytest.raises(ConfigError) as info:
            parse_config(dict(MINIMAL, **patch))
        assert info.value.path == path

    def test_parse_error_location(self, tmp_path):
        path = _write(tmp_path, '{"ris": [\n  {"n_elements": 5},\n]')
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert ":3:" in str(info.value)

    def test_figure_one(self):
        cfg = load_config(CONFIGS / "fig1.json")
        assert len(cfg.ris) == 3
        assert all(s.n_elements == 15 and s.m1 == s.m2 == 1 and s.omega1 == s.omega2 == 1 for s in cfg.ris)
        assert cfg.environment.k0_db == 4.77
        labels = {v["label"] for v in cfg.variants}
        assert labels == {f"K={k},N={n}" for k in (1, 2, 3) for n in (5, 15)}

    def test_psk_preset(self):
        cfg = parse_config(dict(MINIMAL, modulation="8-PSK"))
        assert cfg.modulation.q == pytest.approx(math.sin(math.pi / 8) ** 2)

    def test_all_shipped(self):
        for path in sorted(CONFIGS.glob("*.json")):
            load_config(path)


class TestDerive:
    def test_scene_geometry(self):
        cfg = load_config(CONFIGS / "fig6.json")
        d = derive(cfg, {"uav_x": 100.0})
        assert d.environment.r0 == 0.0
        assert d.environment.h == 50.0

    def test_n_ris_override(self):
        cfg = load_config(CONFIGS / "fig3.json")
        assert len(derive(cfg, {"n_ris": 7}).fits) == 7

    def test_geometry_needs_scene(self):
        doc = dict(MINIMAL, sweep={"variable": "uav_height", "start": 10, "stop": 20, "steps": 2})
        with pytest.raises(ConfigError):
            run_sweep(parse_config(doc))


class TestSweeps:
    def test_rows_and_ranges(self):
        result = run_sweep(parse_config(MINIMAL))
        assert len(result.rows) == 4
        for row in result.rows:
            for key in ("op", "op_a", "op_b", "asep", "asep_a", "asep_b"):
                assert 0.0 <= row[key] <= 1.0

    def test_snr_monotone(self):
        op = run_sweep(parse_config(MINIMAL)).column("op")
        assert np.all(np.diff(op) <= 0)

    def test_threads_do_not_change_output(self):
        cfg = load_config(CONFIGS / "fig4.json")
        assert emit(run_sweep(cfg, threads=1)) == emit(run_sweep(cfg, threads=4))

    def test_optimize(self):
        cfg = load_config(CONFIGS / "fig7.json")
        result = run_optimize(cfg)
        for row in result.rows:
            e_s, e_u = 10 ** (row["e_s_db"] / 10), 10 ** (row["e_u_db"] / 10)
            assert e_s + e_u == pytest.approx(10 ** (row["sweep_value"] / 10), rel=1e-12)
            assert row["op_asymptotic"] <= row["op_asymptotic_equal_split"] * (1 + 1e-12)

    def test_wrong_runner(self):
        with pytest.raises(ConfigError):
            run_optimize(parse_config(MINIMAL))
        with pytest.raises(ConfigError):
            run_sweep(load_config(CONFIGS / "fig7.json"))

    def test_mc_columns(self):
        doc = dict(MINIMAL, mc={"trials": 2000, "seed": 1})
        row = run_sweep(parse_config(doc)).rows[0]
        assert row["mc_op"] is not None and row["mc_op_se"] is not None


class TestEmit:
    def test_empty(self):
        text = emit(SweepResult({}, []), "csv")
        assert text == ",".join(COLUMNS) + "\n"

    def test_fixed_columns(self):
        text = emit(run_sweep(parse_config(MINIMAL)), "csv")
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == COLUMNS
        assert all(len(r) == len(COLUMNS) for r in rows)
        mc_col = COLUMNS.index("mc_op")
        assert all(r[mc_col] == "" for r in rows[1:])
        assert text.endswith("\n")

    def test_json_round_trip(self):
        result = run_sweep(parse_config(MINIMAL))
        doc = json.loads(emit(result, "json"))
        assert doc["config"] == MINIMAL
        assert doc["rows"] == [{c: r[c] for c in COLUMNS} for r in result.rows]

    def test_csv_round_trip(self):
        result = run_sweep(parse_config(MINIMAL))
        rows = list(csv.DictReader(io.StringIO(emit(result, "csv"))))
        assert [float(r["op"]) for r in rows] == [r["op"] for r in result.rows]

    def test_write(self, tmp_path):
        out = tmp_path / "x.csv"
        text = emit(run_sweep(parse_config(MINIMAL)), "csv", out)
        assert out.read_text() == text

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit(SweepResult({}, []), "xml")


class TestCli:
    def test_sweep(self, tmp_path, capsys):
        path = _write(tmp_path, MINIMAL)
        assert cli.main(["sweep", "--config", str(path)]) == 0
        assert capsys.readouterr().out.startswith("variant,")

    def test_config_error(self, tmp_path, capsys):
        path = _write(tmp_path, dict(MINIMAL, ris=[{"n_elements": -1}]))
        assert cli.main(["sweep", "--config", str(path)]) == 2
        assert "ris[0].n_elements" in capsys.readouterr().err

    def test_parse_error(self, tmp_path):
        assert cli.main(["sweep", "--config", str(_write(tmp_path, "{oops"))]) == 2

    def test_missing_config(self, tmp_path):
        assert cli.main(["sweep", "--config", str(tmp_path / "none.json")]) == 3

    def test_unwritable_output(self, tmp_path):
        path = _write(tmp_path, MINIMAL)
        assert cli.main(["sweep", "--config", str(path), "--out", str(tmp_path / "no" / "x.csv")]) == 3

    def test_numeric_failure(self, tmp_path, monkeypatch):
        path = _write(tmp_path, MINIMAL)

        def boom(*args, **kwargs):
            raise ArithmeticError("series blew up")

        monkeypatch.setattr(cli, "run_sweep", boom)
        assert cli.main(["sweep", "--config", str(path)]) == 4

    def test_json_format(self, tmp_path, capsys):
        path = _write(tmp_path, MINIMAL)
        assert cli.main(["sweep", "--config", str(path), "--format", "json"]) == 0
        assert len(json.loads(capsys.readouterr().out)["rows"]) == 4

    def test_trials_enable_mc(self, tmp_path, capsys):
        path = _write(tmp_path, MINIMAL)
        assert cli.main(["sweep", "--config", str(path), "--trials", "1000", "--seed", "5"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert rows[0]["mc_op"] != ""

    def test_mc_validate(self, tmp_path, capsys):
        path = _write(tmp_path, MINIMAL)
        assert cli.main(["mc-validate", "--config", str(path), "--trials", "20000"]) == 0
        out = capsys.readouterr().out
        assert "std errors" in out and out.count("\n") == 4

    def test_show_derived(self, capsys):
        assert cli.main(["show-derived", "--config", str(CONFIGS / "fig5.json")]) == 0
        doc = json.loads(capsys.readouterr().out)
        entry = doc["variants"][0]
        assert {"a", "b", "path_loss"} <= set(entry["ris"][0])
        assert {"a2g_loss", "k0", "p_los"} <= set(entry)

    def test_optimize(self, tmp_path):
        out = tmp_path / "o.csv"
        assert cli.main(["optimize", "--config", str(CONFIGS / "fig8.json"), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 32
