"""failbench command line: run ensembles, dump plans and state tables,
score trajectory pairs, and report summaries."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import evaluate, failure, harness, mission
from .config import config_hash, load_config


def _cmd_run(args) -> int:
    overrides = {}
    if args.trials is not None:
        overrides["harness.trials"] = args.trials
    if args.seed is not None:
        overrides["harness.seed_base"] = args.seed
    cfg = load_config(args.config, overrides)
    regimes = ("clean", "adverse")
    if args.regime != "both":
        regimes = (args.regime,)
    progress = None if args.quiet else lambda msg: print(msg, flush=True)
    summary = harness.run_ensemble(cfg, regimes=regimes, progress=progress)
    os.makedirs(args.out, exist_ok=True)
    harness.write_outputs(args.out, cfg, summary)
    if not args.quiet:
        _print_summary(summary)
        print(f"\nwrote {args.out} (config hash {config_hash(cfg)})")
    return 0


def _print_summary(summary) -> None:
    print(f"\n{'config':12s} {'regime':8s} {'n':>3s} {'crash':>5s} "
          f"{'mean dtw [m]':>13s} {'std [m]':>9s}")
    for key in sorted(summary.groups):
        gr = summary.groups[key]
        print(f"{gr.label:12s} {gr.regime:8s} {gr.n_trials:3d} "
              f"{gr.n_crashed:5d} {gr.mean:13.1f} {gr.std:9.1f}")
    if summary.self_similarity:
        print("\nclean self-similarity (mean pairwise dtw):")
        for label, (m, s) in sorted(summary.self_similarity.items()):
            print(f"  {label:12s} {m:8.1f} +- {s:.1f} m")


def _cmd_plan(args) -> int:
    orders = [int(o) for o in args.orders.split(",")]
    plan = mission.build_flight_plan(orders=orders, quadrant_size=args.size,
                                     altitude=args.alt, speed=args.speed)
    if args.out:
        mission.save_plan_csv(plan, args.out)
        print(f"wrote {len(plan.waypoints)} waypoints to {args.out}")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["t_index", "north", "east", "alt"])
        for i, (n, e, a) in enumerate(plan.waypoints):
            w.writerow([i, repr(n), repr(e), repr(a)])
    return 0


def _cmd_states(args) -> int:
    rows = failure.states_table()
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["id", "mask"] + list(failure.ACTUATOR_NAMES))
        for row in rows:
            w.writerow([row["id"], row["mask"]]
                       + [row[n] for n in failure.ACTUATOR_NAMES])
    finally:
        if args.out:
            out.close()
            print(f"wrote {len(rows)} states to {args.out}")
    return 0


def _load_trajectory(path: str) -> evaluate.Trajectory:
    """Trajectory or plan CSV: needs north/east/alt, uses t or t_index."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SystemExit(f"{path}: empty CSV")
    tkey = "t" if "t" in rows[0] else "t_index"
    t = np.asarray([float(r[tkey]) for r in rows])
    xyz = np.asarray([[float(r["north"]), float(r["east"]), float(r["alt"])]
                      for r in rows])
    return evaluate.Trajectory(t=t, xyz=xyz)


def _cmd_dtw(args) -> int:
    a = _load_trajectory(args.a)
    b = _load_trajectory(args.b)
    d = evaluate.dtw_distance(a, b, window=args.band)
    print(repr(d))
    return 0


def _cmd_report(args) -> int:
    path = os.path.join(args.indir, "summary.json")
    with open(path) as fh:
        digest = json.load(fh)
    print(f"config hash: {digest['config_hash']}")
    print(f"\n{'config':12s} {'regime':8s} {'n':>3s} {'crash':>5s} "
          f"{'mean dtw [m]':>13s} {'std [m]':>9s} {'reference':>16s}")
    for key, gr in digest["groups"].items():
        label, regime = key.split("/")
        ref = digest["reference_m"].get(label, {}).get(regime)
        ref_s = f"{ref[0]:.0f} +- {ref[1]:.0f}" if ref else "-"
        print(f"{label:12s} {regime:8s} {gr['n_trials']:3d} "
              f"{gr['n_crashed']:5d} {gr['mean_dtw_m']:13.1f} "
              f"{gr['std_dtw_m']:9.1f} {ref_s:>16s}")
    if digest.get("self_similarity_m"):
        print("\nclean self-similarity (mean pairwise dtw):")
        for label, (m, s) in digest["self_similarity_m"].items():
            ref = digest["reference_m"].get(label, {}).get("self_similarity")
            ref_s = f"   (reference {ref[0]:.0f} +- {ref[1]:.0f})" if ref else ""
            print(f"  {label:12s} {m:8.1f} +- {s:.1f} m{ref_s}")
    if args.plots:
        _write_boxplot(args.indir, digest)
    return 0


def _write_boxplot(indir: str, digest: dict) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[str, list] = {}
    for tr in digest["trials"]:
        if tr["dtw_to_plan_m"] is not None:
            groups.setdefault(f"{tr['label']}\n{tr['regime']}", []).append(
                tr["dtw_to_plan_m"])
    labels = sorted(groups)
    fig, ax = plt.subplots(figsize=(1.6 * len(labels) + 2, 4.5))
    ax.boxplot([groups[k] for k in labels], tick_labels=labels)
    ax.set_ylabel("DTW distance to plan [m]")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    out = os.path.join(indir, "boxplot.png")
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="failbench",
        description="fixed-wing autopilot resilience bench: seeded ensembles "
                    "of Hilbert missions under Markov actuator failures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run clean/adverse ensembles")
    p.add_argument("--config", default=None, help="key-value config file")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="seed base")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--regime", choices=["clean", "adverse", "both"],
                   default="both")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plan", help="generate a Hilbert flight plan CSV")
    p.add_argument("--orders", default="1,2,3,4")
    p.add_argument("--size", type=float, default=400.0,
                   help="quadrant size in meters")
    p.add_argument("--alt", type=float, default=100.0)
    p.add_argument("--speed", type=float, default=15.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("states", help="dump the failure state table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_states)

    p = sub.add_parser("dtw", help="DTW distance between two trajectory CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--band", type=int, default=None,
                   help="Sakoe-Chiba half band in samples")
    p.set_defaults(func=_cmd_dtw)

    p = sub.add_parser("report", help="print tables from a run directory")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--plots", action="store_true",
                   help="also write boxplot.png (needs matplotlib)")
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
