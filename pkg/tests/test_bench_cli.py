import json
import math

import numpy as np
import pytest

from aqcsketch import bench, cli, objective
from aqcsketch.io import CSV_HEADER, TargetFile, dumps, read_rows


def run(argv):
    return cli.main([str(a) for a in argv])


class TestTargets:
    @pytest.mark.parametrize("n, L, p", [(9, 27, 135), (12, 24, 132)])
    def test_angle_count(self, tmp_path, n, L, p):
        out = tmp_path / "t.json"
        assert run(["gen-target", "--n", n, "--cnots", L, "--seed", 1, "--out", out]) == 0
        data = json.loads(out.read_text())
        assert len(data["theta_u"]) == p and data["n"] == n and data["L"] == L

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["gen-target", "--n", 5, "--cnots", 6, "--seed", 9, "--out", a])
        run(["gen-target", "--n", 5, "--cnots", 6, "--seed", 9, "--out", b])
        assert a.read_bytes() == b.read_bytes()

    def test_roundtrip_exact(self, tmp_path):
        t = bench.make_target(4, 3, 2)
        t.save(tmp_path / "t.json")
        assert TargetFile.load(tmp_path / "t.json") == t

    def test_invalid_shape(self, tmp_path):
        assert run(["gen-target", "--n", 1, "--cnots", 2, "--seed", 0, "--out", tmp_path / "x.json"]) == 1

    def test_length_invariant(self):
        with pytest.raises(ValueError, match="3n\\+4L"):
            TargetFile(n=3, L=1, theta_u=(0.0,) * 12, seed=0)

    @pytest.mark.parametrize(
        "text",
        ["{", "[]", '{"version": "other", "n": 2, "L": 0, "theta_u": [], "seed": 0}',
         '{"version": "aqcsketch.target/1", "n": 2, "L": 0, "seed": 0}'],
    )
    def test_malformed(self, tmp_path, text):
        p = tmp_path / "bad.json"
        p.write_text(text)
        with pytest.raises(ValueError):
            TargetFile.load(p)


def test_json_17_digits():
    assert dumps({"x": 0.1}).strip() == '{\n  "x": 0.10000000000000001\n}'
    assert json.loads(dumps([math.nan]))[0] != json.loads(dumps([math.nan]))[0]
    for x in np.random.default_rng(0).standard_normal(100):
        assert json.loads(dumps(float(x))) == x


class TestCompile:
    @pytest.fixture
    def target(self, tmp_path):
        p = tmp_path / "t.json"
        run(["gen-target", "--n", 4, "--cnots", 4, "--seed", 5, "--out", p])
        return p

    def test_forced_init(self, tmp_path, target):
        out = tmp_path / "r.json"
        code = run(["compile", "--target", target, "--method", "ss1", "--sketch-dim", 4,
                    "--epochs", 1, "--seed", 0, "--out", out, "--force-init-target"])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["success"] and report["fidelity"] == pytest.approx(1.0, abs=1e-10)

    def test_sgd_fails_exit_2(self, tmp_path, target):
        out = tmp_path / "r.json"
        code = run(["compile", "--target", target, "--method", "sgd", "--sketch-dim", 4,
                    "--epochs", 1, "--epoch-iters", 20, "--seed", 0, "--out", out])
        assert code == 2
        report = json.loads(out.read_text())
        assert report["method"] == "sgd" and not report["success"]

    def test_malformed_target_exit_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run(["compile", "--target", bad, "--method", "ss1", "--sketch-dim", 2,
                    "--out", tmp_path / "r.json"]) == 1

    def test_missing_target_exit_1(self, tmp_path):
        assert run(["compile", "--target", tmp_path / "none.json", "--method", "ss2",
                    "--sketch-dim", 2, "--out", tmp_path / "r.json"]) == 1

    def test_oversized_sketch_exit_1(self, tmp_path, target):
        assert run(["compile", "--target", target, "--method", "ss1", "--sketch-dim", 17,
                    "--out", tmp_path / "r.json"]) == 1

    def test_report_matches_fidelity(self, tmp_path, target):
        out = tmp_path / "r.json"
        run(["compile", "--target", target, "--method", "ss2", "--sketch-dim", 4,
             "--epochs", 2, "--epoch-iters", 50, "--seed", 1, "--out", out])
        report = json.loads(out.read_text())
        t = TargetFile.load(target)
        assert report["fidelity"] == objective.fidelity(t.structure, np.array(report["theta"]), t.theta)
        assert report["success"] == (report["fidelity"] >= 0.999)


def bench_args(tmp_path, tag, *extra, dims="2,4", targets=2, trials=2):
    return ["bench", "--n", 4, "--cnots", 4, "--method", "ss2", "--sketch-dims", dims,
            "--targets", targets, "--trials", trials, "--epochs", 2, "--epoch-iters", 30,
            "--seed", 7, "--out-csv", tmp_path / f"{tag}.csv",
            "--out-summary", tmp_path / f"{tag}.json", *extra]


class TestBench:
    def test_single_row(self, tmp_path):
        assert run(bench_args(tmp_path, "one", "--threads", 1, dims="4", targets=1, trials=1)) == 0
        lines = (tmp_path / "one.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 2

    def test_header_exact(self):
        assert ",".join(CSV_HEADER) == (
            "n,L,m,method,target_id,trial_id,seed,epochs,"
            "final_sketched_objective,fidelity,success,wall_time_s"
        )

    def test_deterministic_and_parallel_independent(self, tmp_path, monkeypatch):
        run(bench_args(tmp_path, "a", "--threads", 1))
        monkeypatch.setenv("THREADS", "2")
        run(bench_args(tmp_path, "b"))
        ra, rb = read_rows(tmp_path / "a.csv"), read_rows(tmp_path / "b.csv")
        assert len(ra) == 8
        strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rows]
        assert strip(ra) == strip(rb)

    def test_rows_consistent(self, tmp_path):
        run(bench_args(tmp_path, "c", "--threads", 1))
        rows = read_rows(tmp_path / "c.csv")
        assert {(r["m"], r["target_id"], r["trial_id"]) for r in rows} == {
            (m, t, k) for m in (2, 4) for t in range(2) for k in range(2)
        }
        for r in rows:
            assert r["success"] == int(r["fidelity"] >= 0.999)

    def test_summary_recomputed(self, tmp_path):
        run(bench_args(tmp_path, "s", "--threads", 1))
        summary = json.loads((tmp_path / "s.json").read_text())
        rows = read_rows(tmp_path / "s.csv")
        for entry in summary["per_m"]:
            group = [r for r in rows if r["m"] == entry["m"]]
            rates = [np.mean([r["success"] for r in group if r["target_id"] == t]) for t in range(2)]
            times = [r["wall_time_s"] for r in group]
            assert entry["per_target_success_rate"] == pytest.approx(rates, abs=0)
            assert entry["success_rate_mean"] == pytest.approx(np.mean(rates), rel=1e-15)
            assert entry["success_rate_std"] == pytest.approx(np.std(rates, ddof=1), rel=1e-15)
            assert entry["wall_time_mean_s"] == pytest.approx(np.mean(times), rel=1e-12)
            assert entry["wall_time_std_s"] == pytest.approx(np.std(times, ddof=1), rel=1e-12)
        recomputed = bench.summarize(rows)
        for a, b in zip(recomputed["per_m"], summary["per_m"]):
            for key in ("per_target_success_rate", "success_rate_mean", "success_rate_std", "trials", "successes"):
                assert a[key] == b[key]

    def test_failures_recorded(self, monkeypatch):
        grid = bench.BenchGrid(n=3, L=2, sketch_dims=(2,), targets=1, trials=2, epochs=1, epoch_iters=5)
        real = bench.sketch_and_solve

        def flaky(structure, theta_u, plan, seed, **kw):
            if seed == grid.trial_seed(0, 1):
                raise FloatingPointError("boom")
            return real(structure, theta_u, plan, seed, **kw)

        monkeypatch.setattr(bench, "sketch_and_solve", flaky)
        rows = bench.run_grid(grid)
        assert len(rows) == 2
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("error: FloatingPointError") and not rows[1]["success"]
        summary = bench.summarize(rows)
        assert summary["per_m"][0]["failures"][0]["trial_id"] == 1

    def test_reference_sweep_accepted(self):
        grid = bench.BenchGrid(n=9, L=27, sketch_dims=tuple(range(20, 100, 10)))
        assert len(grid.tasks()) == 8 * 10 * 24

    @pytest.mark.parametrize(
        "kw", [{"targets": 0}, {"trials": 0}, {"epochs": 0}, {"sketch_dims": ()}, {"sketch_dims": (17,)},
               {"method": "sgd"}, {"threads": 0}]
    )
    def test_grid_validation(self, kw):
        with pytest.raises(ValueError):
            bench.BenchGrid(n=4, L=4, **kw)

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("THREADS", "3")
        assert bench.default_threads() == 3
        monkeypatch.delenv("THREADS")
        assert bench.default_threads() >= 1


class TestVerifyCommand:
    def test_fast_exit_0(self, capsys, tmp_path):
        out = tmp_path / "v.json"
        assert run(["verify", "--level", "fast", "--seed", 0, "--out", out]) == 0
        assert capsys.readouterr().out.count("[PASS]") == 4
        assert len(json.loads(out.read_text())) == 4

    def test_flipped_sign_nonzero(self, monkeypatch, capsys):
        real = objective.gradient_sketched
        monkeypatch.setattr(objective, "gradient_sketched", lambda ctx, th: -real(ctx, th))
        assert run(["verify", "--level", "fast", "--seed", 0]) != 0
        captured = capsys.readouterr()
        assert "[FAIL] gradient_fd" in captured.out
        assert "gradient_fd" in captured.err
