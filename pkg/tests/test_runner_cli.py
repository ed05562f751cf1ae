import os

import numpy as np
import pytest

from ncamaps.cli import cli_entry
from ncamaps.config import parse_config
from ncamaps.runner import (
    read_manifest,
    run_dynamics,
    run_spectrum,
    run_steady_sweep,
    run_transmission_map,
)

SMALL_DYNAMICS = """
bath.alpha = 0.05, 0.3
method = nca, born_markov
grid.dt = 0.1
grid.t_max = 150
"""


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = np.array([[float(x) for x in line.split(",")] for line in fh if line.strip()])
    return header, rows


@pytest.fixture(scope="module")
def dynamics_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("dyn")
    cfg = parse_config(SMALL_DYNAMICS + f"outputs.directory = {out}\n")
    manifest = run_dynamics(cfg)
    return out, manifest


class TestDynamicsPipeline:
    def test_one_file_per_point_with_schema(self, dynamics_out):
        out, manifest = dynamics_out
        files = sorted(f for f in os.listdir(out) if f.startswith("dynamics"))
        assert len(files) == 4
        header, rows = read_csv(out / files[0])
        assert header == ["t", "sx", "sz", "trace", "min_eig", "purity"]
        assert rows.shape[1] == 6

    def test_divergence_recorded_without_suppressing_others(self, dynamics_out):
        out, manifest = dynamics_out
        by_key = {(r.method, r.alpha): r for r in manifest.records}
        assert by_key[("born_markov", 0.3)].status.startswith("diverged at t")
        assert by_key[("born_markov", 0.05)].status == "completed"
        assert by_key[("nca", 0.3)].status == "completed"
        # truncated output still written
        _, rows = read_csv(out / by_key[("born_markov", 0.3)].file)
        assert len(rows) > 10
        assert manifest.exit_code() == 2

    def test_manifest_complete_and_round_trips(self, dynamics_out):
        out, manifest = dynamics_out
        emitted = {f for f in os.listdir(out) if f != "manifest.txt"}
        listed = {r.file for r in manifest.records}
        assert emitted == listed
        loaded = read_manifest(out / "manifest.txt")
        assert {(r.method, r.alpha, r.file) for r in loaded.records} == {
            (r.method, r.alpha, r.file) for r in manifest.records
        }
        assert "method = nca, born_markov" in loaded.config_echo

    def test_rerun_byte_reproduces_csvs(self, dynamics_out, tmp_path):
        out, _ = dynamics_out
        cfg = parse_config(SMALL_DYNAMICS + f"outputs.directory = {tmp_path}\n")
        run_dynamics(cfg)
        for name in os.listdir(out):
            if name == "manifest.txt":  # wall times differ
                continue
            assert (tmp_path / name).read_bytes() == (out / name).read_bytes()

    def test_worker_pool_matches_serial(self, dynamics_out, tmp_path):
        out, _ = dynamics_out
        cfg = parse_config(SMALL_DYNAMICS + f"outputs.directory = {tmp_path}\nworkers = 2\n")
        manifest = run_dynamics(cfg)
        assert manifest.exit_code() == 2
        for name in os.listdir(out):
            if name == "manifest.txt":
                continue
            assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


class TestSteadyPipeline:
    def test_sweep_schema_and_monotonicity(self, tmp_path):
        cfg = parse_config(
            "bath.alpha = 0.1, 0.3, 0.5\nmethod = nca\ngrid.t_max = 300\n"
            f"outputs.directory = {tmp_path}\n"
        )
        manifest = run_steady_sweep(cfg)
        assert manifest.exit_code() == 0
        header, rows = read_csv(tmp_path / "steady_nca.csv")
        assert header == ["alpha", "sx_steady", "sz_steady"]
        # |<sx>| shrinks as the coupling grows
        assert np.all(np.diff(np.abs(rows[:, 1])) < 0)


class TestSpectrumPipeline:
    def test_schema(self, tmp_path):
        cfg = parse_config(
            "bath.alpha = 0.5\nmethod = nca\ngrid.t_max = 100\n"
            "spectrum.t_window = 400\nspectrum.eta = 0.01\n"
            "spectrum.omega_min = 0.005\nspectrum.omega_max = 0.1\nspectrum.omega_points = 40\n"
            f"outputs.directory = {tmp_path}\n"
        )
        manifest = run_spectrum(cfg)
        assert manifest.exit_code() == 0
        header, rows = read_csv(tmp_path / "spectrum_nca_alpha0p5.csv")
        assert header == ["omega", "cz", "re_chi", "im_chi", "t2"]
        assert len(rows) == 40


class TestTransmissionPipeline:
    def test_map_schema(self, tmp_path):
        cfg = parse_config(
            "bath.alpha = 0.3\nmethod = nca\ngrid.t_max = 60\n"
            "transmission.t_window = 80\ntransmission.eta = 0.02\n"
            "transmission.epsilon_points = 3\ntransmission.omega_points = 11\n"
            f"outputs.directory = {tmp_path}\n"
        )
        manifest = run_transmission_map(cfg)
        assert manifest.exit_code() == 0
        header, rows = read_csv(tmp_path / "transmission_nca_alpha0p3.csv")
        assert header == ["epsilon", "omega", "t2"]
        assert len(rows) == 3 * 11
        assert len(np.unique(rows[:, 0])) == 3


class TestCli:
    def test_presets_listing(self, capsys):
        assert cli_entry(["presets"]) == 0
        out = capsys.readouterr().out
        for name in ("fig2", "spectra", "transmission"):
            assert name in out

    def test_unknown_subcommand_exits_1_with_synopsis(self, capsys):
        assert cli_entry(["frobnicate"]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_no_subcommand(self, capsys):
        assert cli_entry([]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_bad_config_value_exits_1(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("grid.dt = -0.1\n")
        assert cli_entry(["dynamics", "--config", str(path)]) == 1
        assert "grid.dt" in capsys.readouterr().err

    def test_dynamics_partial_divergence_exit_2(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("bath.alpha = 0.05, 0.3\nmethod = born_markov\ngrid.t_max = 150\n")
        code = cli_entry(["dynamics", "--config", str(path), "--out", str(tmp_path / "o")])
        assert code == 2
        out = capsys.readouterr().out
        assert "diverged" in out

    def test_dynamics_success_exit_0(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("bath.alpha = 0.1\nmethod = nca\ngrid.t_max = 20\n")
        assert cli_entry(["dynamics", "--config", str(path), "--out", str(tmp_path / "o")]) == 0

    def test_method_alpha_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("bath.alpha = 0.9\nmethod = born\ngrid.t_max = 20\n")
        code = cli_entry(
            [
                "dynamics",
                "--config",
                str(path),
                "--out",
                str(tmp_path / "o"),
                "--method",
                "nca",
                "--alpha",
                "0.2",
            ]
        )
        assert code == 0
        assert (tmp_path / "o" / "dynamics_nca_alpha0p2.csv").exists()

    def test_convergence_subcommand(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("bath.alpha = 0.1\nmethod = nca_markov\ngrid.t_max = 10\n")
        assert cli_entry(["convergence", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "convergence.csv").exists()
        assert "order" in capsys.readouterr().out
