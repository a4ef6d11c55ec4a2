"""X mean shifted by 0.032 * G_j for j = 1, 2, 3; bias should pile up on the matching interaction."""

from study import parse_config, run

if __name__ == "__main__":
    cfg = parse_config(__doc__, scenarios=["viol-G1", "viol-G2", "viol-G3"])
    reports = run(cfg, "violation")
    for name, rep in reports.items():
        bias = rep["methods"]["symmetric"]["bias"]
        inter = {k: round(v, 4) for k, v in bias.items() if k.startswith("beta_x1_g")}
        print(name, inter)
