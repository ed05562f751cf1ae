import numpy as np
import pytest

from ncafigs.cli import cli_entry
from ncafigs.manifest import SchemaError, load_csv, read_manifest
from ncafigs.render import FigureRecipe, render


def write_manifest(path, records):
    lines = ["version = 0.1.0", "config.method = nca"]
    for i, rec in enumerate(records):
        for key, val in rec.items():
            lines.append(f"run.{i}.{key} = {val}")
    path.write_text("\n".join(lines) + "\n")


def synth_dynamics(path, diverge_at=None):
    t = np.linspace(0, 300, 601)
    if diverge_at is not None:
        t = t[t <= diverge_at]
    sx = -np.exp(-0.01 * t)
    sz = -np.cos(0.1 * 2 * np.pi * t) * np.exp(-0.02 * t)
    with open(path, "w") as fh:
        fh.write("t,sx,sz,trace,min_eig,purity\n")
        for k in range(len(t)):
            fh.write(f"{t[k]},{sx[k]},{sz[k]},1.0,0.0,1.0\n")


def synth_spectrum(path):
    om = np.linspace(0.001, 0.3, 120)
    cz = om / ((om - 0.08) ** 2 + 1e-4)
    with open(path, "w") as fh:
        fh.write("omega,cz,re_chi,im_chi,t2\n")
        for k in range(len(om)):
            fh.write(f"{om[k]},{cz[k]},0.1,-0.05,{1 + 0.1 * cz[k]}\n")


def synth_transmission(path):
    eps = np.linspace(-0.5, 0.5, 5)
    om = np.linspace(0.005, 0.3, 7)
    with open(path, "w") as fh:
        fh.write("epsilon,omega,t2\n")
        for e in eps:
            for w in om:
                fh.write(f"{e},{w},{1.0 / (1 + ((w - np.hypot(0.1, e)) / 0.02) ** 2)}\n")


@pytest.fixture()
def workspace(tmp_path):
    records = []
    for method in ("nca", "nca_markov", "born"):
        for alpha in (0.1, 0.5):
            fname = f"dynamics_{method}_alpha{alpha}.csv"
            synth_dynamics(tmp_path / fname)
            records.append(
                dict(kind="dynamics", method=method, alpha=alpha, status="completed",
                     wall_time=1.0, file=fname)
            )
    # one diverging strong-coupling point, truncated output
    fname = "dynamics_born_markov_alpha0.3.csv"
    synth_dynamics(tmp_path / fname, diverge_at=80.0)
    records.append(
        dict(kind="dynamics", method="born_markov", alpha=0.3,
             status="diverged at t = 80", wall_time=1.0, file=fname)
    )
    for alpha in (0.1, 0.5):
        fname = f"spectrum_nca_alpha{alpha}.csv"
        synth_spectrum(tmp_path / fname)
        records.append(
            dict(kind="spectrum", method="nca", alpha=alpha, status="completed",
                 wall_time=1.0, file=fname)
        )
    for alpha in (0.1, 0.6):
        fname = f"transmission_nca_alpha{alpha}.csv"
        synth_transmission(tmp_path / fname)
        records.append(
            dict(kind="transmission", method="nca", alpha=alpha, status="completed",
                 wall_time=1.0, file=fname)
        )
    manifest = tmp_path / "manifest.txt"
    write_manifest(manifest, records)
    return tmp_path, manifest


class TestManifest:
    def test_reads_entries(self, workspace):
        _, manifest_path = workspace
        m = read_manifest(str(manifest_path))
        assert len(m.of_kind("dynamics")) == 7
        assert len(m.of_kind("spectrum")) == 2
        diverged = [e for e in m.entries if e.diverged]
        assert len(diverged) == 1 and diverged[0].method == "born_markov"

    def test_schema_mismatch_names_column(self, workspace):
        tmp_path, manifest_path = workspace
        bad = tmp_path / "dynamics_nca_alpha0.1.csv"
        content = bad.read_text().replace("t,sx,sz", "t,sx,spin_z")
        bad.write_text(content)
        m = read_manifest(str(manifest_path))
        entry = next(e for e in m.of_kind("dynamics") if e.file == bad.name)
        with pytest.raises(SchemaError, match="'sz'"):
            load_csv(m, entry)

    def test_missing_file_reported(self, workspace):
        tmp_path, manifest_path = workspace
        (tmp_path / "spectrum_nca_alpha0.1.csv").unlink()
        m = read_manifest(str(manifest_path))
        entry = next(e for e in m.of_kind("spectrum"))
        with pytest.raises(SchemaError, match="missing"):
            load_csv(m, entry)


class TestRender:
    @pytest.mark.parametrize(
        "figure_id,expected",
        [
            ("fig2", {"fig2.png", "fig2_sx_nca.png", "fig2_sx_born.png",
                      "fig2_sz_nca.png", "fig2_sz_born.png"}),
            ("spectra", {"spectra.png", "spectra_nca.png"}),
            ("transmission", {"transmission.png", "transmission_nca_alpha0p1.png",
                              "transmission_nca_alpha0p6.png"}),
        ],
    )
    def test_expected_files(self, workspace, tmp_path_factory, figure_id, expected):
        _, manifest_path = workspace
        out = tmp_path_factory.mktemp(f"img_{figure_id}")
        recipe = FigureRecipe(str(manifest_path), figure_id, str(out))
        written = render(recipe)
        assert {p.split("/")[-1] for p in written} == expected
        for p in written:
            assert open(p, "rb").read(8) == b"\x89PNG\r\n\x1a\n"

    def test_byte_identical_reruns(self, workspace, tmp_path_factory):
        _, manifest_path = workspace
        out1 = tmp_path_factory.mktemp("img_a")
        out2 = tmp_path_factory.mktemp("img_b")
        for fig in ("fig2", "spectra", "transmission"):
            a = render(FigureRecipe(str(manifest_path), fig, str(out1)))
            b = render(FigureRecipe(str(manifest_path), fig, str(out2)))
            for pa, pb in zip(sorted(a), sorted(b)):
                assert open(pa, "rb").read() == open(pb, "rb").read()

    def test_unknown_figure_id(self, workspace):
        _, manifest_path = workspace
        with pytest.raises(ValueError, match="figure id"):
            FigureRecipe(str(manifest_path), "fig9", "out")


class TestCli:
    def test_renders_via_cli(self, workspace, tmp_path_factory, capsys):
        _, manifest_path = workspace
        out = tmp_path_factory.mktemp("cli_img")
        code = cli_entry(
            ["--manifest", str(manifest_path), "--figure", "fig2", "--out", str(out)]
        )
        assert code == 0
        assert "wrote" in capsys.readouterr().out

    def test_empty_manifest_says_nothing_to_render(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.txt"
        write_manifest(manifest, [])
        code = cli_entry(
            ["--manifest", str(manifest), "--figure", "spectra", "--out", str(tmp_path / "o")]
        )
        assert code == 0
        assert "nothing to render" in capsys.readouterr().out

    def test_schema_error_exits_1(self, workspace, tmp_path_factory, capsys):
        tmp_path, manifest_path = workspace
        bad = tmp_path / "spectrum_nca_alpha0.1.csv"
        bad.write_text("omega,signal\n0.1,1.0\n")
        out = tmp_path_factory.mktemp("cli_bad")
        code = cli_entry(
            ["--manifest", str(manifest_path), "--figure", "spectra", "--out", str(out)]
        )
        assert code == 1
        assert "cz" in capsys.readouterr().err
