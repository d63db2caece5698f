"""Run a small end-to-end experiment sweep and print the result table.

Configures a max-min power sweep (N=K=4, 8-PSK, three methods, three power
budgets), runs it on 4 worker threads, and writes the CSV plus a received-
signal scatter dump — the same artifacts the `slpkit experiment run` CLI
produces. Output is bitwise reproducible for a fixed seed regardless of
the thread count.
"""
import tempfile
from pathlib import Path

from slpkit import (
    ExperimentConfig,
    make_standard,
    run_experiment,
    scatter_records,
    write_csv,
    write_scatter_csv,
)

cfg = ExperimentConfig(
    family="maxmin_sweep",
    constellation=make_standard("psk", 8),
    n=4, k=4, seed=2024, trials=25,
    methods=("relaxed", "bcd", "zf_baseline"),
    p_dbw=(20.0, 25.0, 30.0),
)
records = run_experiment(cfg, threads=4)

print(f"{'method':<12}{'P [dBW]':>8}{'metric':>22}{'value':>10}{'trials':>8}")
for r in records:
    print(f"{r.method:<12}{r.axis_value:>8.0f}{r.metric_name:>22}"
          f"{r.metric_value:>10.3f}{r.trials_used:>8}")

out = Path(tempfile.mkdtemp(prefix="slpkit-demo-"))
write_csv(records, out / "maxmin.csv")

scatter_cfg = ExperimentConfig(
    family="ser_sweep",
    constellation=make_standard("psk", 8),
    n=4, k=4, seed=7, trials=250, frame_length=1,
    snr_db=(15.0,),
)
write_scatter_csv(scatter_records(scatter_cfg), out / "scatter.csv")
print(f"\nwrote {out / 'maxmin.csv'} and {out / 'scatter.csv'}")
print("feed these to the companion plots package, e.g.:")
print(f"  slpkit-plots render --kind maxmin --csv {out}/maxmin.csv "
      f"--out maxmin.png")
