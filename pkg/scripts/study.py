"""Shared runner for the experiment scripts in this directory."""

import argparse
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from gxesym.core import PrevalenceSpec
from gxesym.simgen import get_scenario, run_replication


@dataclass
class StudyConfig:
    scenarios: list[str]
    methods: list[str] = field(default_factory=lambda: ["logistic", "spmle_x", "symmetric"])
    R: int = 200
    n0: int = 500
    n1: int = 500
    B: int = 200
    seed: int = 42
    pi1: float | None = None  # None: each scenario's own target rate
    rare: bool = False
    workers: int = 1
    out_dir: str = "results"

    def prevalence(self, scenario):
        if self.rare:
            return PrevalenceSpec.rare()
        return PrevalenceSpec.known(self.pi1 if self.pi1 is not None else scenario.target_pi1)


def parse_config(description, **defaults) -> StudyConfig:
    cfg = StudyConfig(**defaults)
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--R", type=int, default=cfg.R)
    ap.add_argument("--n0", type=int, default=cfg.n0)
    ap.add_argument("--n1", type=int, default=cfg.n1)
    ap.add_argument("--B", type=int, default=cfg.B)
    ap.add_argument("--seed", type=int, default=cfg.seed)
    ap.add_argument("--workers", type=int, default=len(os.sched_getaffinity(0)))
    ap.add_argument("--out-dir", default=cfg.out_dir)
    ap.add_argument("--methods", default=",".join(cfg.methods))
    args = ap.parse_args()
    cfg.R, cfg.n0, cfg.n1, cfg.B, cfg.seed = args.R, args.n0, args.n1, args.B, args.seed
    cfg.workers, cfg.out_dir = args.workers, args.out_dir
    cfg.methods = args.methods.split(",")
    return cfg


def run(cfg: StudyConfig, tag: str):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for name in cfg.scenarios:
        sc = get_scenario(name)
        prev = cfg.prevalence(sc)
        rep = run_replication(sc, cfg.methods, R=cfg.R, n0=cfg.n0, n1=cfg.n1, B=cfg.B, seed=cfg.seed,
                              prevalence_assumed=prev, workers=cfg.workers)
        print(f"== {name}, analysed with {prev.label()} ({rep.runtime_seconds:.0f}s, "
              f"{len(rep.replications_completed)}/{cfg.R} replications)")
        print(rep.format_table())
        print()
        reports[name] = rep.to_dict(include_runtime=True)
    path = out / f"{tag}.json"
    path.write_text(json.dumps({"config": asdict(cfg), "reports": reports}, indent=1))
    print(f"wrote {path}")
    return reports
