"""True disease rates 0.05, 0.085 and 0.12, always analysed as if the rate were 0.03."""

from study import parse_config, run

if __name__ == "__main__":
    cfg = parse_config(__doc__, scenarios=["misspec-0.05", "misspec-0.085", "misspec-0.12"], pi1=0.03)
    run(cfg, "misspec")
