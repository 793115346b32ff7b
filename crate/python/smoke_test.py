#!/usr/bin/env python3
"""Builds the wpmec_py extension module and exercises it end to end:
deterministic runs, feasibility, the assignment solver, and config I/O."""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def build_extension(workdir: Path) -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "wpmec-py"], cwd=ROOT, check=True
    )
    built = ROOT / "target" / "release" / "libwpmec_py.so"
    shutil.copy(built, workdir / "wpmec_py.so")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        build_extension(workdir)
        sys.path.insert(0, str(workdir))
        import wpmec_py

        # Config defaults, resizing, and scalar properties.
        cfg = wpmec_py.Config()
        assert cfg.n_wd == 30 and cfg.m_ap == 5, repr(cfg)
        cfg.n_wd = 4
        cfg.m_ap = 2
        cfg.horizon = 60
        cfg.penalty_v = 2.0
        cfg.set_uniform_arrival_rate(1e5)
        cfg.validate()
        assert cfg.arrival_rates == [1e5] * 4

        # Config file round trip.
        conf = workdir / "small.conf"
        conf.write_text("[system]\nn_wd = 3\nm_ap = 2\npenalty_v = 7\n")
        loaded = wpmec_py.Config.from_file(conf)
        assert loaded.n_wd == 3 and loaded.penalty_v == 7.0

        # Full runs: deterministic, feasible, all three schedulers.
        first = wpmec_py.run(cfg, "proposed", seed=1)
        second = wpmec_py.run(cfg, "proposed", seed=1)
        assert first == second, "identical seeds must reproduce identical metrics"
        assert first["violations"] == 0
        assert first["slots"] == 60
        for name in ("lco", "fo"):
            result = wpmec_py.run(cfg, name, seed=1)
            assert result["violations"] == 0, name
        try:
            wpmec_py.run(cfg, "bogus", seed=1)
        except ValueError:
            pass
        else:
            raise AssertionError("unknown scheduler must raise ValueError")

        # Assignment solver against a hand-checked instance.
        assigned, cost = wpmec_py.solve_assignment(
            [[-1.0, 5.0], [5.0, -1.0]], allow_skip=True
        )
        assert assigned == [0, 1] and cost == -2.0

        # Single-slot scheduling from an explicit state.
        decision = wpmec_py.schedule_slot(
            cfg,
            "proposed",
            queues=[1e6] * 4,
            batteries=[100.0] * 4,
            h_u=[[1e-6, 2e-6]] * 4,
            h_d=[[2e-6, 4e-6]] * 4,
        )
        assert decision["feasible"]
        assert len(decision["cpu_freq"]) == 4
        assert len(decision["wpt_time"]) == 2
        served = sum(decision["local_bits"]) + sum(decision["offload_bits"])
        assert served > 0.0, "loaded queues should get some service"

    print("smoke test passed")


if __name__ == "__main__":
    main()
