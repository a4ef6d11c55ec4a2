"""Two SNPs, one standardised gamma covariate, binary and normal X, disease rate 0.05."""

from study import parse_config, run

if __name__ == "__main__":
    cfg = parse_config(__doc__, scenarios=["altdist"],
                       methods=["logistic", "spmle_x", "spmle_g", "composite", "symmetric"])
    run(cfg, "altdist")
