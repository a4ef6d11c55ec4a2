"""Base scenario, known and rare prevalence, all five estimators."""

from study import parse_config, run

if __name__ == "__main__":
    cfg = parse_config(__doc__, scenarios=["base"],
                       methods=["logistic", "spmle_x", "spmle_g", "composite", "symmetric"])
    run(cfg, "table1_known")
    cfg.rare = True
    run(cfg, "table1_rare")
