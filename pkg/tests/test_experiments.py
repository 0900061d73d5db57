import json
import math
from dataclasses import replace

import pytest

from qmemsim.experiments import (
    ExperimentConfig,
    config_hash,
    default_config,
    run_channel_mc,
    run_experiment,
    run_fig2,
    run_fig3,
    run_limits,
    run_verify,
    write_csv,
)


def small_fig2():
    return replace(default_config("fig2"), points=5, d_min=0.1, d_max=20.0)


def small_fig3():
    return replace(default_config("fig3"), points=4, d_min=0.1, d_max=20.0,
                   n_side=3)


class TestConfig:
    def test_defaults(self):
        cfg = default_config("fig3")
        assert cfg.n_side == 8 and not cfg.periodic
        assert default_config("fig2").n_side == 1
        assert default_config("fig2").r0 == pytest.approx(math.log(3.0))

    @pytest.mark.parametrize("kwargs", [
        {"experiment": "fig9"}, {"d_min": 0.0}, {"d_max": 0.01},
        {"points": 1}, {"n_side": 0}, {"atom_var": 0.0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**{"experiment": "fig2", **kwargs})

    def test_hash_stable_and_sensitive(self):
        a = default_config("fig2")
        assert config_hash(a) == config_hash(default_config("fig2"))
        assert config_hash(a) != config_hash(replace(a, seed=1))
        assert len(config_hash(a)) == 12

    def test_hash_ignores_output_destination(self):
        a = default_config("fig2")
        assert config_hash(a) == config_hash(replace(a, out="other.csv"))


class TestRunFig2:
    def test_rows(self):
        rows = run_fig2(small_fig2())
        assert len(rows) == 5
        assert list(rows[0].keys()) == [
            "D", "cov_with_lens", "cov_without_lens", "status", "config_hash"]
        assert all(r["status"] == "ok" for r in rows)
        assert rows[0]["D"] == pytest.approx(0.1)
        assert rows[-1]["D"] == pytest.approx(20.0)

    def test_lens_ordering_and_monotonicity(self):
        rows = run_fig2(small_fig2())
        with_lens = [r["cov_with_lens"] for r in rows]
        without = [r["cov_without_lens"] for r in rows]
        assert all(w >= c for c, w in zip(with_lens, without))
        assert all(b < a for a, b in zip(with_lens, with_lens[1:]))

    def test_no_pump_row_is_flat_half(self):
        rows = run_fig2(replace(small_fig2(), r0=0.0))
        assert all(r["cov_with_lens"] == pytest.approx(0.5) for r in rows)

    def test_orientation_flag_flips_quadratures(self):
        # psi0 = 0 puts the anti-squeezed axis along X: large pixels then
        # see amplified rather than squeezed noise
        cfg = replace(default_config("fig2"), points=2, d_min=10.0,
                      d_max=30.0, psi0=0.0)
        rows = run_fig2(cfg)
        assert all(r["cov_with_lens"] > 0.5 for r in rows)


class TestRunFig3:
    def test_rows_and_properties(self):
        rows = run_fig3(small_fig3())
        assert list(rows[0].keys()) == [
            "D", "f_av_coherent", "f_av_squeezed", "f_classical_benchmark",
            "config_hash", "status"]
        coh = [r["f_av_coherent"] for r in rows]
        sq = [r["f_av_squeezed"] for r in rows]
        assert all(r["f_classical_benchmark"] == 0.5 for r in rows)
        assert all(v > 0.5 for v in coh + sq)
        assert all(b > a for a, b in zip(coh, coh[1:]))
        assert all(s > c for c, s in zip(coh, sq))

    def test_periodic_grid_variant_runs(self):
        cfg = replace(small_fig3(), periodic=True, n_side=4)
        rows = run_fig3(cfg)
        assert all(r["status"] == "ok" for r in rows)


class TestRunLimits:
    def test_scenarios(self):
        rows = run_limits(default_config("limits"))
        names = [r["scenario"] for r in rows]
        assert names == ["coherent_small_pixel", "coherent_large_pixel",
                         "squeezed_large_pixel", "squeezed_small_pixel"]
        by_name = {r["scenario"]: r for r in rows}
        assert by_name["coherent_small_pixel"]["f_av"] == pytest.approx(
            math.sqrt(0.5), abs=1e-9)
        assert by_name["coherent_small_pixel"]["within_tolerance"]
        assert by_name["squeezed_small_pixel"]["within_tolerance"]


class TestRunChannelMc:
    def test_within_statistics(self):
        cfg = replace(default_config("channel-mc"), mc_samples=50_000)
        rows = run_channel_mc(cfg)
        assert all(r["within_5_sigma"] for r in rows)

    def test_deterministic(self):
        cfg = replace(default_config("channel-mc"), mc_samples=20_000)
        a = run_channel_mc(cfg)
        b = run_channel_mc(cfg)
        assert [r["z_score"] for r in a] == [r["z_score"] for r in b]

    def test_seed_changes_z_scores(self):
        cfg = replace(default_config("channel-mc"), mc_samples=20_000)
        other = replace(cfg, seed=777)
        assert ([r["z_score"] for r in run_channel_mc(cfg)]
                != [r["z_score"] for r in run_channel_mc(other)])


class TestRunVerify:
    def test_all_checks_pass(self):
        report = run_verify(default_config("verify"))
        assert report.passed
        names = [c.name for c in report.checks]
        assert "symplectic-protocol-maps" in names
        assert "kernel-vs-surface-oracle" in names
        assert "dense-vs-circulant-fidelity" in names

    def test_injected_failure(self):
        report = run_verify(default_config("verify"), inject_failure=True)
        assert not report.passed
        failing = [c for c in report.checks if not c.passed]
        assert [c.name for c in failing] == ["injected-non-symplectic"]


class TestWriteCsv:
    def test_byte_identical_reruns(self, tmp_path):
        cfg = replace(small_fig2(), out=str(tmp_path / "a.csv"))
        rows = run_fig2(cfg)
        p1 = write_csv(tmp_path / "a.csv", rows, cfg)
        first = p1.read_bytes()
        rows2 = run_fig2(cfg)
        write_csv(tmp_path / "a.csv", rows2, cfg)
        assert p1.read_bytes() == first

    def test_header_comments_and_meta(self, tmp_path):
        cfg = small_fig2()
        rows = run_fig2(cfg)
        path = write_csv(tmp_path / "sweep.csv", rows, cfg)
        text = path.read_text()
        assert f"# config_hash={config_hash(cfg)}" in text
        assert "# r0=1.09861228867" in text
        header = next(line for line in text.splitlines()
                      if not line.startswith("#"))
        assert header == "D,cov_with_lens,cov_without_lens,status,config_hash"
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        assert meta["config_hash"] == config_hash(cfg)
        assert meta["n_rows"] == len(rows)

    def test_twelve_significant_digits(self, tmp_path):
        cfg = small_fig2()
        path = write_csv(tmp_path / "s.csv", run_fig2(cfg), cfg)
        data_line = path.read_text().splitlines()[-1]
        value = data_line.split(",")[1]
        assert len(value.replace(".", "").replace("-", "").lstrip("0")) >= 11

    def test_rows_carry_config_hash(self):
        cfg = small_fig2()
        for row in run_fig2(cfg):
            assert row["config_hash"] == config_hash(cfg)


class TestRunExperiment:
    def test_dispatch_fig2(self):
        rows, ok = run_experiment(small_fig2())
        assert ok and len(rows) == 5

    def test_dispatch_verify(self):
        rows, ok = run_experiment(default_config("verify"))
        assert ok
        assert all(r["passed"] for r in rows)

    def test_dispatch_limits_reports_failure(self):
        rows, ok = run_experiment(default_config("limits"))
        # two scenarios are out of tolerance for this squeezing model
        assert not ok
