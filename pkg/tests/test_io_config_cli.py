import csv
import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lambda_xray import Chart, Ellipse, PhasePoint, Spiral, UnitCircle, projection_pair, solve_frame_ode, square_grid
from lambda_xray.cli import main, run_experiment
from lambda_xray.config import (ExperimentConfig, family_descriptor, load_config, parse_config, parse_family,
                                with_op)
from lambda_xray.errors import ConfigError, GridFormatError
from lambda_xray.grid import GridFunction
from lambda_xray.io import jacobi_rows, projection_rows, read_grid, write_csv, write_grid, write_image, write_json


def read_pgm(path):
    raw = path.read_bytes()
    magic, dims, maxval, rest = raw.split(b"\n", 3)
    nx, ny = map(int, dims.split())
    assert magic == b"P5" and maxval == b"255"
    return np.frombuffer(rest, dtype=np.uint8).reshape(ny, nx)


class TestGridFiles:
    def test_round_trip(self, tmp_path, rng):
        g = GridFunction(7, 5, -1.25, 0.1, 0.037, rng.normal(size=(5, 7)))
        write_grid(g, tmp_path / "g.gfd")
        back = read_grid(tmp_path / "g.gfd")
        assert back.geometry == g.geometry
        assert back.values.tobytes() == g.values.tobytes()

    @given(st.integers(2, 9), st.integers(2, 9), st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-3, 2.0),
           st.integers(0, 2**31))
    def test_round_trip_property(self, nx, ny, x0, y0, h, seed):
        import tempfile
        from pathlib import Path

        vals = np.random.default_rng(seed).normal(size=(ny, nx))
        g = GridFunction(nx, ny, x0, y0, h, vals)
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "g.gfd"
            write_grid(g, p)
            back = read_grid(p)
        assert back.geometry == g.geometry
        assert np.array_equal(back.values, g.values)

    def test_hand_written(self, tmp_path):
        p = tmp_path / "h.gfd"
        p.write_bytes(b"GFD1 2 2 0 0 1\n" + struct.pack("<4d", 1.0, 2.0, 3.0, 4.0))
        g = read_grid(p)
        assert g.geometry == (2, 2, 0.0, 0.0, 1.0)
        np.testing.assert_array_equal(g.values, [[1, 2], [3, 4]])

    def test_truncated(self, tmp_path):
        p = tmp_path / "t.gfd"
        p.write_bytes(b"GFD1 2 2 0 0 1\n" + struct.pack("<3d", 1.0, 2.0, 3.0))
        with pytest.raises(GridFormatError, match="truncated"):
            read_grid(p)

    def test_oversized(self, tmp_path):
        p = tmp_path / "o.gfd"
        p.write_bytes(b"GFD1 2 2 0 0 1\n" + struct.pack("<5d", *range(5)))
        with pytest.raises(GridFormatError, match="oversized"):
            read_grid(p)

    @pytest.mark.parametrize("header", [b"GFD2 2 2 0 0 1\n", b"GFD1 2 2 0 0\n", b"GFD1 a 2 0 0 1\n",
                                        b"GFD1 2 2 0 0 0\n", b"no newline at all"])
    def test_bad_header(self, tmp_path, header):
        p = tmp_path / "b.gfd"
        p.write_bytes(header + struct.pack("<4d", 1, 2, 3, 4))
        with pytest.raises(GridFormatError):
            read_grid(p)


class TestImages:
    def test_constant_is_gray(self, tmp_path):
        write_image(square_grid(4, 1.0, np.full((8, 8), 3.0)), tmp_path / "c.pgm")
        assert np.all(read_pgm(tmp_path / "c.pgm") == 128)

    def test_extremes(self, tmp_path):
        v = np.zeros((8, 8))
        v[0, 0], v[7, 7] = -1.0, 2.0
        write_image(square_grid(4, 1.0, v), tmp_path / "e.pgm")
        img = read_pgm(tmp_path / "e.pgm")
        # top image row is the largest y
        assert img[7, 0] == 0 and img[0, 7] == 255

    def test_range_clips(self, tmp_path):
        v = np.linspace(-2, 2, 64).reshape(8, 8)
        write_image(square_grid(4, 1.0, v), tmp_path / "r.pgm", value_range=(-1, 1))
        img = read_pgm(tmp_path / "r.pgm")
        assert img.min() == 0 and img.max() == 255

    def test_native_resolution(self, tmp_path):
        write_image(square_grid(40), tmp_path / "n.pgm")
        assert read_pgm(tmp_path / "n.pgm").shape == (240, 240)


class TestTables:
    def test_csv_and_json(self, tmp_path):
        write_csv(tmp_path / "t.csv", ["k", "v", "flag"], [(0, 0.1, True), (1, np.float64(1 / 3), False)])
        rows = list(csv.reader(open(tmp_path / "t.csv")))
        assert rows[0] == ["k", "v", "flag"] and rows[2] == ["1", repr(1 / 3), "0"]
        write_json(tmp_path / "m.json", {"a": np.arange(3), "b": np.float64(np.nan), "c": np.bool_(True)})
        assert json.loads((tmp_path / "m.json").read_text()) == {"a": [0, 1, 2], "b": None, "c": True}

    def test_jacobi_and_projection_rows(self):
        sol = solve_frame_ode(UnitCircle(), PhasePoint(0, 0, 0), t_end=1.0, dt=0.1)
        rows = list(jacobi_rows(sol))
        assert len(rows) == 11 and len(rows[0]) == 4
        pair = projection_pair(UnitCircle(), 0.0, 1.0, Chart(), t_end=1.0, dt=0.1)
        prow = list(projection_rows(pair))
        assert len(prow) == 11 and prow[0][2] == 0.0


class TestConfig:
    def test_example(self):
        cfg = parse_config("N=40\nfamily=circle")
        assert cfg.h == 1 / 40
        assert isinstance(cfg.family_object(), UnitCircle)

    def test_empty_defaults(self):
        cfg = parse_config("")
        assert (cfg.N, cfg.L, cfg.family, cfg.weight) == (40, 3.0, "circle", 1.0)

    def test_invariant_names_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("# comment\nN=0\n")
        assert exc.value.key == "N" and exc.value.line == 2
        assert "N" in str(exc.value)

    @pytest.mark.parametrize("text, key", [
        ("bogus = 1", "bogus"),
        ("N = 40\nN = 41", "N"),
        ("N = forty", "N"),
        ("family = hyperbola", "family"),
        ("[phantom]\nsigma = 0.5\nr_c = 0.6", "r_c"),
        ("[phantom]\nkind = gaussian\nk = 1, 0", "k"),
        ("[landweber]\nstep = -1", "step"),
        ("[landweber]\nR = 2\nsupport_radius = 2", "R"),
        ("[conjugate]\nk_max = 0", "k_max"),
        ("op = explode", "op"),
    ])
    def test_rejections(self, text, key):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.key == key

    def test_syntax_errors(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("N = 40\nnot a pair\n")
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[nowhere]\n")

    def test_sections(self):
        cfg = parse_config(
            "family = ellipse:a=2,b=1\n[phantom]\nkind = coherent\nk = 6, 2\n"
            "[landweber]\nR = 2.5\nn_iter = 7\n[conjugate]\nbase = 0.5, -0.5\neta = 1.2\n"
            "[output]\ndir = somewhere\nprefix = run1\n")
        assert cfg.phantom.k == (6.0, 2.0)
        assert cfg.landweber.support_radius == 2.5 and cfg.landweber.n_iter == 7
        assert cfg.conjugate.base == (0.5, -0.5)
        assert (cfg.out_dir, cfg.prefix) == ("somewhere", "run1")
        assert isinstance(cfg.family_object(), Ellipse)

    @given(st.integers(8, 80), st.floats(0.5, 5.0), st.sampled_from(["circle", "ellipse:a=2.0,b=1.0",
                                                                     "spiral:a=-0.25,orientation=-1"]),
           st.booleans(), st.integers(0, 500), st.floats(0.05, 0.3), st.one_of(st.none(), st.floats(1e-3, 1.0)))
    def test_round_trip(self, N, L, family, coherent, n_iter, sigma, step):
        kind = "coherent" if coherent else "gaussian"
        text = (f"N = {N}\nL = {L!r}\nfamily = {family}\n[phantom]\nkind = {kind}\nsigma = {sigma!r}\n"
                f"r_c = {3 * sigma + 0.01!r}\n[landweber]\nn_iter = {n_iter}\n"
                + (f"step = {step!r}\n" if step is not None else ""))
        cfg = parse_config(text)
        assert parse_config(cfg.to_text()) == cfg

    def test_families(self):
        s = parse_family("spiral:a=-0.5,orientation=-1")
        assert isinstance(s, Spiral) and s.a == -0.5 and s.orientation == -1
        for fam in (UnitCircle(), UnitCircle(orientation=-1), Ellipse(3.0, 0.5), Spiral(-0.25)):
            assert parse_family(family_descriptor(fam)) == fam
        with pytest.raises(ConfigError):
            parse_family("ellipse:a=2,c=1")

    def test_with_op(self):
        assert with_op(ExperimentConfig(), "fbp").op == "fbp"
        with pytest.raises(ConfigError):
            with_op(ExperimentConfig(), "nothing")

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")


def small_config(tmp_path, body=""):
    p = tmp_path / "exp.cfg"
    p.write_text("N = 10\nL = 2\n" + body + f"\n[output]\ndir = {tmp_path / 'out'}\n")
    return p


class TestCLI:
    def test_backproject(self, tmp_path, capsys):
        cfg = small_config(tmp_path)
        assert main(["backproject", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        meta = json.loads((out / "result.json").read_text())
        assert meta["op"] == "backproject"
        assert meta["errors"]["relative_error_vs_analytic"] < 0.05
        for name in ("result.gfd", "result.pgm", "result_analytic.gfd", "result_input.gfd", "result.cfg"):
            assert (out / name).is_file()
        assert "relative_error_vs_analytic" in capsys.readouterr().out
        # the written config reproduces the run
        assert load_config(out / "result.cfg") == with_op(load_config(cfg), "backproject")

    def test_landweber_csv_length(self, tmp_path):
        cfg = small_config(tmp_path, "[landweber]\nn_iter = 4\nR = 1.5\n")
        assert main(["landweber", "--config", str(cfg)]) == 0
        rows = list(csv.reader(open(tmp_path / "out" / "result_residuals.csv")))
        assert rows[0] == ["k", "residual"] and len(rows) == 1 + 5

    def test_conjugate_chain(self, tmp_path):
        cfg = small_config(tmp_path, "[conjugate]\nbase = 0, 0\neta = 0\nR = 3\n")
        assert main(["conjugate-chain", "--config", str(cfg)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "out" / "result_chain.csv")))
        assert [int(r["k"]) for r in rows] == [-2, -1, 0, 1, 2]
        assert [r["escaped"] for r in rows] == ["1", "0", "0", "0", "1"]

    def test_conjugate_locus(self, tmp_path):
        cfg = small_config(tmp_path, "[conjugate]\nn_angles = 16\n")
        assert main(["conjugate-locus", "--config", str(cfg)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "out" / "result_locus.csv")))
        d = [math.hypot(float(r["x"]), float(r["y"])) for r in rows]
        np.testing.assert_allclose(d, 2.0, atol=1e-6)

    def test_forward_then_compare(self, tmp_path):
        cfg = small_config(tmp_path)
        assert main(["forward", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["forward", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
        a, b = tmp_path / "a" / "result.gfd", tmp_path / "b" / "result.gfd"
        assert a.read_bytes() == b.read_bytes()
        cmp_cfg = tmp_path / "cmp.cfg"
        cmp_cfg.write_text(f"N = 10\nL = 2\n[input]\na = {a}\nb = {b}\n[output]\ndir = {tmp_path / 'c'}\n")
        assert main(["compare", "--config", str(cmp_cfg)]) == 0
        meta = json.loads((tmp_path / "c" / "result.json").read_text())
        assert meta["errors"]["relative_error"] == 0.0

    def test_adjoint_and_fbp_from_file(self, tmp_path):
        g = square_grid(10, 2.0)
        X, Y = g.coords()
        write_grid(g.like(np.exp(-(X**2 + Y**2) / 0.1)), tmp_path / "in.gfd")
        cfg = small_config(tmp_path, f"[input]\ngrid = {tmp_path / 'in.gfd'}\n")
        for op in ("adjoint", "fbp"):
            assert main([op, "--config", str(cfg), "--out", str(tmp_path / op)]) == 0
            assert read_grid(tmp_path / op / "result.gfd").geometry == g.geometry

    def test_config_error_exit(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("N = 0\n")
        assert main(["forward", "--config", str(p)]) == 2
        assert "N" in capsys.readouterr().err

    def test_missing_input_exit(self, tmp_path):
        cfg = small_config(tmp_path, f"[input]\ngrid = {tmp_path / 'nope.gfd'}\n")
        assert main(["forward", "--config", str(cfg)]) == 2

    def test_bad_grid_file_exit(self, tmp_path):
        (tmp_path / "bad.gfd").write_bytes(b"GFD1 3 3 0 0 1\n\x00")
        cfg = small_config(tmp_path, f"[input]\ngrid = {tmp_path / 'bad.gfd'}\n")
        assert main(["forward", "--config", str(cfg)]) == 2

    def test_phantom_off_grid_exit(self, tmp_path):
        cfg = small_config(tmp_path, "[phantom]\ncenter = 1.8, 0\n")
        assert main(["forward", "--config", str(cfg)]) == 2

    def test_numerical_failure_exit(self, tmp_path):
        cfg = small_config(tmp_path, "[landweber]\nn_iter = 30\nR = 1.5\nnorm_estimate = 0.01\nstep = 15000\n")
        assert main(["landweber", "--config", str(cfg)]) == 3

    def test_run_experiment_needs_op(self, tmp_path):
        with pytest.raises(ConfigError):
            run_experiment(ExperimentConfig(out_dir=str(tmp_path)))

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version", "forward", "--config", "x"])
        assert exc.value.code == 0
        assert "0.1.0" in capsys.readouterr().out
