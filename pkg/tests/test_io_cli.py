"""File formats, state configs, and the four CLI commands end to end."""

import json

import numpy as np
import pytest

from cpca.cli import main
from cpca.errors import ConfigError, DataFormatError
from cpca.io import (
    FRAME_MAGIC,
    StateConfig,
    dump_json,
    format_float,
    read_frames,
    read_tmf_csv,
    tmf_from_json_dict,
    tmf_to_json_dict,
    write_frames,
    write_tmf_csv,
)
from cpca.modes import TMF, TimeGrid, mode_match, normalize, superpose, timebin_pair
from cpca.simulate import FrameSet, generate_frames
from cpca.states import fock_mode_state

GRID = TimeGrid(1.5e-6, 64)
ISQ2 = 1 / np.sqrt(2)


def qubit_config(tmp_path, loss_p=0.0, bins=64, name="state.json"):
    cfg = {
        "constructor": "single_photon_qubit",
        "parameters": {"p1": [ISQ2, 0.0], "p2": [0.0, ISQ2]},
        "grid": {"duration_s": 1.5e-6, "bins": bins},
        "loss_p": loss_p,
    }
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


class TestFrameFile:
    def test_roundtrip(self, tmp_path):
        state = fock_mode_state(timebin_pair(GRID)[0], 1)
        frames = generate_frames(state, GRID, 50, seed=3)
        path = tmp_path / "frames.cpca"
        write_frames(path, frames)
        back = read_frames(path)
        assert back.grid.compatible(GRID)
        assert np.array_equal(back.data, frames.data)

    def test_exact_size(self, tmp_path):
        n, m = 200, 64
        frames = FrameSet(GRID, np.zeros((n, m), dtype=complex))
        path = tmp_path / "frames.cpca"
        write_frames(path, frames)
        assert path.stat().st_size == 8 + 16 + n * m * 16

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.cpca"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(DataFormatError):
            read_frames(path)

    def test_truncated_body(self, tmp_path):
        state = fock_mode_state(timebin_pair(GRID)[0], 1)
        frames = generate_frames(state, GRID, 10, seed=1)
        path = tmp_path / "frames.cpca"
        write_frames(path, frames)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataFormatError):
            read_frames(path)


class TestTmfCsv:
    def test_roundtrip(self, tmp_path):
        w1, _ = timebin_pair(GRID)
        mode = superpose([ISQ2, 1j * ISQ2], [w1, timebin_pair(GRID)[1]])
        path = tmp_path / "mode.csv"
        write_tmf_csv(path, mode, manifest_ref="m.json")
        back = read_tmf_csv(path)
        assert back.grid.M == GRID.M
        assert back.grid.T == pytest.approx(GRID.T)
        assert np.max(np.abs(back.amp - mode.amp)) < 1e-15

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("bin_index,time_s,re,im\n0,1,2\n")
        with pytest.raises(DataFormatError):
            read_tmf_csv(path)

    def test_json_roundtrip(self, tmp_path):
        w1, w2 = timebin_pair(GRID)
        mode = superpose([ISQ2, 1j * ISQ2], [w1, w2])
        path = tmp_path / "mode.json"
        dump_json(tmf_to_json_dict(mode), path)
        back = tmf_from_json_dict(json.loads(path.read_text()))
        assert back.grid.compatible(GRID)
        assert np.max(np.abs(back.amp - mode.amp)) < 1e-15


class TestJson:
    def test_float_formatting_17_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert float(format_float(np.pi)) == np.pi

    def test_complex_as_pair(self, tmp_path):
        path = tmp_path / "x.json"
        dump_json({"z": 1 + 2j, "a": [0.5, None, True]}, path)
        data = json.loads(path.read_text())
        assert data["z"] == [1.0, 2.0]
        assert data["a"] == [0.5, None, True]


class TestStateConfig:
    def test_build_qubit(self, tmp_path):
        cfg = StateConfig.from_file(qubit_config(tmp_path))
        state, grid = cfg.build()
        assert grid.M == 64
        w1, w2 = timebin_pair(grid)
        target = superpose([ISQ2, 1j * ISQ2], [w1, w2])
        assert mode_match(state.carriers[0], target) == pytest.approx(1.0, abs=1e-10)

    def test_loss_applied(self, tmp_path):
        cfg = StateConfig.from_file(qubit_config(tmp_path, loss_p=0.5))
        state, _ = cfg.build()
        assert state.loss_p == 0.5

    def test_unknown_constructor(self):
        with pytest.raises(ConfigError):
            StateConfig.from_dict({"constructor": "nonsense"}).build()

    def test_missing_parameter(self):
        with pytest.raises(ConfigError):
            StateConfig.from_dict({"constructor": "single_photon_qubit"}).build()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            StateConfig.from_dict({"constructor": "vacuum_state", "bogus": 1})

    def test_two_photon_from_coefficients(self):
        cfg = StateConfig.from_dict(
            {
                "constructor": "two_photon_state",
                "parameters": {
                    "r1": [ISQ2, 0.0],
                    "r2": [0.0, ISQ2],
                    "r3": [ISQ2, 0.0],
                    "r4": [0.0, -ISQ2],
                },
            }
        )
        state, _ = cfg.build()
        assert len(state.carriers) == 2


class TestCliPipeline:
    def test_simulate_analyze_decompose_report(self, tmp_path):
        cfg = tmp_path / "qutrit.json"
        cfg.write_text(
            json.dumps(
                {
                    "constructor": "two_photon_state",
                    "parameters": {
                        "r1": [1.0, 0.0],
                        "r2": [0.0, 0.0],
                        "r3": [0.2, 0.0],
                        "r4": [0.0, 0.9797958971132712],
                    },
                    "grid": {"duration_s": 1.5e-6, "bins": 48},
                }
            )
        )
        frames_path = tmp_path / "frames.cpca"
        rc = main(
            [
                "simulate",
                "--state-config",
                str(cfg),
                "--frames",
                "6000",
                "--seed",
                "77",
                "--out",
                str(frames_path),
            ]
        )
        assert rc == 0
        assert frames_path.stat().st_size == 24 + 6000 * 48 * 16
        manifest = json.loads((tmp_path / "frames.cpca.manifest.json").read_text())
        assert manifest["seed"] == 77
        assert str(frames_path) in manifest["outputs"]

        analysis_path = tmp_path / "analysis.json"
        rc = main(["analyze", "--frames", str(frames_path), "--modes", "6", "--out", str(analysis_path)])
        assert rc == 0
        payload = json.loads(analysis_path.read_text())
        assert len(payload["eigenvalues"]) == 6
        assert (tmp_path / payload["modes_csv"][0]).exists()

        solution_path = tmp_path / "solution.json"
        rc = main(["decompose2", "--frames", str(frames_path), "--out", str(solution_path)])
        assert rc == 0
        sol = json.loads(solution_path.read_text())
        assert sol["branch"] in ("nondegenerate", "degenerate", "exact-11")
        assert (tmp_path / sol["f1_csv"]).exists()

        report_dir = tmp_path / "report"
        rc = main(
            [
                "report",
                "--decomposition",
                str(analysis_path),
                "--frames",
                str(frames_path),
                "--wigner",
                "--wigner-resolution",
                "21",
                "--out",
                str(report_dir),
            ]
        )
        assert rc == 0
        report = json.loads((report_dir / "report.json").read_text())
        assert "spectrum.csv" in report["files"]
        assert (report_dir / "spectrum.csv").exists()
        assert (report_dir / "joint_photon.csv").exists()
        assert report["pearson_photon_correlation"] is not None
        listed = json.loads((report_dir / "report.manifest.json").read_text())
        for name in report["files"]:
            assert any(name in k for k in listed["outputs"])

    def test_simulate_deterministic_digest(self, tmp_path):
        cfg = qubit_config(tmp_path, bins=32)
        out1, out2 = tmp_path / "a.cpca", tmp_path / "b.cpca"
        for out in (out1, out2):
            rc = main(
                [
                    "simulate",
                    "--state-config",
                    str(cfg),
                    "--frames",
                    "500",
                    "--seed",
                    "5",
                    "--out",
                    str(out),
                ]
            )
            assert rc == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_paper_scale_grid_accepted(self, tmp_path):
        cfg = qubit_config(tmp_path, bins=1500)
        out = tmp_path / "big.cpca"
        rc = main(
            [
                "simulate",
                "--state-config",
                str(cfg),
                "--frames",
                "3",
                "--seed",
                "1",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert read_frames(out).grid.M == 1500

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"constructor": "nonsense"}))
        rc = main(
            ["simulate", "--state-config", str(bad), "--out", str(tmp_path / "x.cpca")]
        )
        assert rc == 2
        err = capsys.readouterr().err.strip()
        assert err.startswith("ECONFIG:") and "\n" not in err

    def test_data_error_exit_code(self, tmp_path, capsys):
        junk = tmp_path / "junk.cpca"
        junk.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        rc = main(["analyze", "--frames", str(junk), "--out", str(tmp_path / "a.json")])
        assert rc == 3
        assert capsys.readouterr().err.startswith("EDATA:")

    def test_missing_file_exit_code(self, tmp_path, capsys):
        rc = main(["analyze", "--frames", str(tmp_path / "nope.cpca"), "--out", str(tmp_path / "a.json")])
        assert rc == 3

    def test_mode_count_error_on_single_photon(self, tmp_path, capsys):
        cfg = qubit_config(tmp_path, bins=32)
        frames_path = tmp_path / "frames.cpca"
        main(
            [
                "simulate",
                "--state-config",
                str(cfg),
                "--frames",
                "4000",
                "--seed",
                "3",
                "--out",
                str(frames_path),
            ]
        )
        rc = main(["decompose2", "--frames", str(frames_path), "--out", str(tmp_path / "s.json")])
        assert rc == 3
        assert "EMODECOUNT" in capsys.readouterr().err

    def test_vacuum_run_flat_spectrum_report(self, tmp_path):
        cfg = tmp_path / "vac.json"
        cfg.write_text(json.dumps({"constructor": "vacuum_state", "grid": {"duration_s": 1.5e-6, "bins": 24}}))
        frames = tmp_path / "vac.cpca"
        analysis = tmp_path / "vac_analysis.json"
        assert main(["simulate", "--state-config", str(cfg), "--frames", "8000", "--seed", "2", "--out", str(frames)]) == 0
        assert main(["analyze", "--frames", str(frames), "--modes", "24", "--out", str(analysis)]) == 0
        payload = json.loads(analysis.read_text())
        nbars = np.asarray(payload["nbar"])
        assert np.max(np.abs(nbars)) < 0.2  # flat, vacuum-level spectrum
        report_dir = tmp_path / "vacreport"
        assert main(["report", "--decomposition", str(analysis), "--out", str(report_dir)]) == 0
        spectrum = (report_dir / "spectrum.csv").read_text().splitlines()
        assert len(spectrum) == 1 + 24

    def test_oracle_decompose_circular_qutrit(self, tmp_path):
        cfg = tmp_path / "circular.json"
        cfg.write_text(
            json.dumps(
                {
                    "constructor": "two_photon_state",
                    "parameters": {
                        "r1": [ISQ2, 0.0],
                        "r2": [0.0, ISQ2],
                        "r3": [ISQ2, 0.0],
                        "r4": [0.0, -ISQ2],
                    },
                }
            )
        )
        out = tmp_path / "sol.json"
        rc = main(["decompose2", "--oracle", str(cfg), "--out", str(out)])
        assert rc == 0
        sol = json.loads(out.read_text())
        assert sol["branch"] == "degenerate"
        f1 = read_tmf_csv(tmp_path / sol["f1_csv"])
        grid = TimeGrid(1.5e-6, 64)
        w1, w2 = timebin_pair(grid)
        plus = superpose([ISQ2, 1j * ISQ2], [w1, w2])
        minus = superpose([ISQ2, -1j * ISQ2], [w1, w2])
        assert max(mode_match(f1, plus), mode_match(f1, minus)) >= 0.999

    def test_determinism_across_worker_counts(self, tmp_path, monkeypatch):
        cfg = qubit_config(tmp_path, bins=32)
        digests = []
        for workers in ("1", "3"):
            monkeypatch.setenv("CPCA_THREADS", workers)
            subdir = tmp_path / f"run{workers}"
            subdir.mkdir()
            out = subdir / "frames.cpca"
            sol = subdir / "analysis.json"
            main(
                [
                    "simulate",
                    "--state-config",
                    str(cfg),
                    "--frames",
                    "2000",
                    "--seed",
                    "8",
                    "--out",
                    str(out),
                ]
            )
            main(["analyze", "--frames", str(out), "--modes", "4", "--out", str(sol)])
            digests.append((out.read_bytes(), sol.read_text()))
        assert digests[0] == digests[1]
