"""
A small success-rate sweep
==========================

Run the experiment grid for a few sketch dimensions and print the per-m
success-rate table, the statistic the benchmark summary files contain.
"""

from aqcsketch.bench import BenchGrid, run_grid, summarize

grid = BenchGrid(n=5, L=10, method="ss1", sketch_dims=(2, 4, 8), targets=3, trials=4, epochs=3, seed=0)
rows = run_grid(grid)
summary = summarize(rows, grid)

print(" m   m/d    success (mean +- std over targets)   time/trial")
for e in summary["per_m"]:
    print(
        f"{e['m']:2d}  {e['sketch_ratio']:.3f}   {e['success_rate_mean']:.2f} +- {e['success_rate_std']:.2f}"
        f"   per target {e['per_target_success_rate']}   {e['wall_time_mean_s']:.2f}s"
    )
