"""Walkthrough: a small strategy benchmark on synthetic domains.

Sweeps random / entropy / bi-domain selection over a few seeds and two
annotation budgets, then prints mean proxy-detector accuracy per cell and the
paired permutation p-value against the random baseline. A desk-scale version
of the full 20-seed sweep used in the acceptance tests (those take minutes;
this takes seconds).

Run:  python3 demos/04_benchmark.py
"""

from bidal import SyntheticConfig, benchmark

cfg = SyntheticConfig(n_source=200, n_target=400, n_eval=150, domain_shift=3.0, seed=0)
report = benchmark(
    cfg,
    strategies=("random", "entropy", "bidomain"),
    seeds=(0, 1, 2, 3, 4),
    budget_fracs=(0.02, 0.05),
    disc_epochs=80,
)

mean = report.summary["mean_accuracy"]
budgets = sorted({r["budget"] for r in report.rows})
print("mean eval accuracy over 5 seeds:\n")
header = "%-10s" % "strategy" + "".join("%12s" % ("budget %d" % b) for b in budgets)
print(header)
for strategy in ("random", "entropy", "bidomain"):
    row = "%-10s" % strategy
    for b in budgets:
        row += "%12.3f" % mean[strategy][str(b)]
    print(row)

print("\none-sided permutation p-value vs random (paired by seed):")
for strategy, per_budget in report.summary["pvalue_vs_random"].items():
    for b in budgets:
        print("  %-10s budget %3d  p = %.4f" % (strategy, b, per_budget[str(b)]))

print("\nper-cell selection diversity (mean pairwise cosine distance):")
for strategy in ("random", "entropy", "bidomain"):
    vals = [r["diversity"] for r in report.rows if r["strategy"] == strategy]
    print("  %-10s %.3f" % (strategy, sum(vals) / len(vals)))
