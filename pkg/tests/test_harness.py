import json
from dataclasses import replace

import numpy as np
import pytest

from qdemon import harness, sac
from qdemon.nets import flatten_params
from qdemon.presets import load_preset


TINY_STEPS = 900


def tiny_preset(name="fig3"):
    preset = load_preset(name)
    hyper = replace(
        preset.hyper,
        steps=TINY_STEPS,
        init_random_steps=150,
        first_update_step=300,
        buffer_size=2000,
        batch_size=32,
        hidden=(24, 16),
        eval_every=450,
        eval_steps=300,
    )
    return replace(preset, hyper=hyper)


@pytest.fixture(scope="module")
def train_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    preset = tiny_preset()
    result = harness.train_job(preset, 1.0, seed=3, out_dir=out, final_eval_steps=1500)
    return preset, result, out


class TestCsvRoundTrip:
    def test_pareto_round_trip(self, tmp_path):
        rows = [
            {
                "source": "rl",
                "policy": "sac",
                "params": "",
                "c": 0.8,
                "seed": 3,
                "avg_power": 0.123456789,
                "avg_dissipation": 0.5,
                "efficiency": 0.2469,
                "f_c": 0.001,
                "error": "",
            },
            {
                "source": "baseline",
                "policy": "swap",
                "params": json.dumps({"u_bar": 0.4}),
                "c": 0.7,
                "seed": 0,
                "avg_power": None,
                "avg_dissipation": None,
                "efficiency": None,
                "f_c": None,
                "error": "boom",
            },
        ]
        path = tmp_path / "pareto.csv"
        harness.write_csv(path, harness.PARETO_FIELDS, rows, {"artifact": "pareto", "scale_factor": 0.25})
        meta, back = harness.read_csv(path)
        assert meta["artifact"] == "pareto"
        assert float(meta["scale_factor"]) == 0.25
        assert back[0]["avg_power"] == rows[0]["avg_power"]
        assert back[0]["seed"] == 3
        assert back[1]["efficiency"] is None
        assert back[1]["error"] == "boom"

    def test_atomic_write_replaces(self, tmp_path):
        path = tmp_path / "x.txt"
        harness.atomic_write_text(path, "one")
        harness.atomic_write_text(path, "two")
        assert path.read_text() == "two"
        assert list(tmp_path.iterdir()) == [path]


class TestTrainJob:
    def test_artifacts_exist_and_parse(self, train_artifacts):
        preset, result, out = train_artifacts
        meta, rows = harness.read_csv(result.curve_path)
        assert meta["preset"] == "fig3"
        assert float(meta["scale_factor"]) == preset.scale_factor
        assert [r["step"] for r in rows] == [450, 900]
        assert result.metrics.avg_dissipation >= 0.0

    def test_checkpoint_reload_reproduces_policy(self, train_artifacts):
        preset, result, out = train_artifacts
        agent, config, meta = harness.load_checkpoint(result.checkpoint_path)
        assert meta["preset"] == "fig3"
        assert meta["c"] == 1.0
        assert config.regime == "ThermDominated"
        # reloaded metrics match a fresh evaluation of the same parameters
        m1 = harness.evaluate_checkpoint(result.checkpoint_path, n_steps=800, seed=5)
        m2 = harness.evaluate_checkpoint(result.checkpoint_path, n_steps=800, seed=5)
        assert m1 == m2

    def test_checkpoint_version_gate(self, train_artifacts, tmp_path):
        preset, result, out = train_artifacts
        data = dict(np.load(result.checkpoint_path))
        meta = json.loads(bytes(data.pop("meta")).decode())
        meta["version"] = 999
        bad = tmp_path / "bad.npz"
        np.savez(bad, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **data)
        with pytest.raises(harness.CheckpointVersionError):
            harness.load_checkpoint(bad)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            harness.load_checkpoint(tmp_path / "nope.npz")

    def test_training_determinism_byte_identical_curves(self, tmp_path):
        preset = tiny_preset()
        r1 = harness.train_job(preset, 1.0, seed=9, out_dir=tmp_path / "a", final_eval_steps=600)
        r2 = harness.train_job(preset, 1.0, seed=9, out_dir=tmp_path / "b", final_eval_steps=600)
        b1 = open(r1.curve_path, "rb").read()
        b2 = open(r2.curve_path, "rb").read()
        assert b1 == b2
        a1, _, _ = harness.load_checkpoint(r1.checkpoint_path)
        a2, _, _ = harness.load_checkpoint(r2.checkpoint_path)
        assert np.array_equal(flatten_params(a1.policy), flatten_params(a2.policy))


class TestTrace:
    def test_trace_round_trips_and_has_required_fields(self, train_artifacts, tmp_path):
        preset, result, out = train_artifacts
        path, records = harness.trace(result.checkpoint_path, 50, tmp_path / "traj.jsonl", seed=2)
        back = harness.read_trajectory(path)
        assert back == records
        required = {"step", "discrete_action", "u", "rho_flat", "heat", "dissipation", "reward", "outcome"}
        assert required <= set(records[0])
        assert {"bloch_x", "bloch_z", "purity"} <= set(records[0])
        assert len(records[0]["rho_flat"]) == 8
        assert [r["step"] for r in records] == list(range(50))

    def test_trace_deterministic_by_default(self, train_artifacts, tmp_path):
        preset, result, out = train_artifacts
        _, rec1 = harness.trace(result.checkpoint_path, 40, tmp_path / "t1.jsonl", seed=2)
        _, rec2 = harness.trace(result.checkpoint_path, 40, tmp_path / "t2.jsonl", seed=2)
        assert rec1 == rec2

    def test_two_qubit_trace_reports_concurrence(self, tmp_path):
        preset = tiny_preset("fig11")
        result = harness.train_job(preset, 1.0, seed=1, out_dir=tmp_path, final_eval_steps=400)
        path, records = harness.trace(result.checkpoint_path, 30, tmp_path / "tq.jsonl", seed=4)
        assert "concurrence" in records[0]
        assert len(records[0]["rho_flat"]) == 32


class TestSweepAndBaseline:
    def test_sweep_csv_schema_and_sorting(self, tmp_path):
        preset = tiny_preset()
        path, rows = harness.sweep(
            preset, tmp_path, workers=1, c_values=[1.0, 0.9], seeds=[3], final_eval_steps=600
        )
        meta, parsed = harness.read_csv(path)
        assert meta["artifact"] == "pareto"
        assert [r["c"] for r in parsed] == [1.0, 0.9]
        assert all(r["source"] == "rl" for r in parsed)
        assert all(not r["error"] for r in parsed)

    def test_sweep_idempotent(self, tmp_path):
        preset = tiny_preset()
        p1, _ = harness.sweep(preset, tmp_path / "s1", c_values=[1.0], seeds=[3], final_eval_steps=500)
        p2, _ = harness.sweep(preset, tmp_path / "s2", c_values=[1.0], seeds=[3], final_eval_steps=500)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_parallel_workers_match_serial(self, tmp_path):
        preset = tiny_preset()
        p1, rows1 = harness.sweep(
            preset, tmp_path / "serial", c_values=[1.0, 0.9], seeds=[3], final_eval_steps=400
        )
        p2, rows2 = harness.sweep(
            preset, tmp_path / "par", workers=2, c_values=[1.0, 0.9], seeds=[3], final_eval_steps=400
        )
        assert rows1 == rows2

    def test_baseline_front_schema(self, tmp_path):
        preset = load_preset("fig3")
        path, rows = harness.baseline_front(preset, tmp_path, c_values=[1.0, 0.8])
        meta, parsed = harness.read_csv(path)
        assert [r["policy"] for r in parsed] == ["measure-flip-thermalize"] * 2
        for r in parsed:
            params = json.loads(r["params"])
            assert "u_bar" in params and "tau_bar" in params
            assert r["efficiency"] <= 1.0 + 1e-6

    def test_baseline_unsupported_regime(self, tmp_path):
        preset = load_preset("fig8_x_strong")
        from qdemon.baselines import UnsupportedRegimeError

        with pytest.raises(UnsupportedRegimeError):
            harness.baseline_front(preset, tmp_path)


class TestMeanConsecutiveMeasurements:
    def test_counts_runs(self):
        actions = ["measure", "measure", "thermalize", "measure", "unitary", "measure", "measure", "measure"]
        assert harness.mean_consecutive_measurements(actions) == 2.0

    def test_empty(self):
        assert harness.mean_consecutive_measurements(["unitary"]) == 0.0
