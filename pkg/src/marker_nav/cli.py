"""``marker-nav`` command line: simulate, compare, bench.

Exit codes: 0 success, 1 config or usage error, 2 run timed out or missed a
waypoint.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import math
import os
import sys
import time

from . import config as configmod
from .bench import BENCH_COLUMNS, run_bench
from .exceptions import ConfigError
from .reporting import RunReport, atomic_write_text, csv_text, trajectory_csv
from .simulator import POLICIES, run_scenario

THREADS_ENV = "MARKER_NAV_THREADS"

COMPARE_METRICS = (
    "success", "waypoints_reached", "selection_accuracy", "rms_position_error", "rms_yaw_error", "steps_used",
)
COMPARE_COLUMNS = ("seed",) + tuple(f"{p}_{m}" for p in POLICIES for m in COMPARE_METRICS)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load(path):
    if path is None or path == "paper":
        return configmod.load_paper_scenario()
    try:
        return configmod.load(path)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None


def thread_count():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, f"expected a positive integer, got {raw!r}")
    return n


def _run(cfg, cfg_hash):
    t0 = time.perf_counter()
    log, result = run_scenario(cfg)
    report = RunReport(result, cfg_hash, cfg.seed, cfg.selection_policy, time.perf_counter() - t0)
    return log, report


def cmd_simulate(args):
    cfg, doc = _load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.policy is not None:
        changes["selection_policy"] = args.policy
    cfg = cfg.with_(**changes)
    log, report = _run(cfg, configmod.config_hash(doc))
    atomic_write_text(os.path.join(args.out, "trajectory.csv"), trajectory_csv(log))
    atomic_write_text(os.path.join(args.out, "report.json"), report.to_json())
    r = report.result
    print(
        f"policy={cfg.selection_policy} seed={cfg.seed} waypoints={r.waypoints_reached}/{r.waypoints_total} "
        f"steps={r.steps_used} selection_accuracy={r.selection_accuracy:.4f} "
        f"rms_position_error={r.rms_position_error:.4f} m"
    )
    return 0 if r.success else 2


def parse_seed_range(text):
    """``A..B`` inclusive; ``A`` alone is a single seed."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
        else:
            a = b = int(text)
    except ValueError:
        raise ConfigError("seeds", f"expected A..B, got {text!r}") from None
    if a < 0 or b < a:
        raise ConfigError("seeds", f"empty or negative seed range {text!r}")
    return range(a, b + 1)


def _compare_one(job):
    cfg, seed, out, cfg_hash = job
    row = {"seed": seed}
    for policy in POLICIES:
        log, report = _run(cfg.with_(seed=seed, selection_policy=policy), cfg_hash)
        r = report.result
        row.update({
            f"{policy}_success": int(r.success),
            f"{policy}_waypoints_reached": r.waypoints_reached,
            f"{policy}_selection_accuracy": r.selection_accuracy,
            f"{policy}_rms_position_error": r.rms_position_error,
            f"{policy}_rms_yaw_error": r.rms_yaw_error,
            f"{policy}_steps_used": r.steps_used,
        })
        if out is not None:
            atomic_write_text(os.path.join(out, f"trajectory_seed{seed}_{policy}.csv"), trajectory_csv(log))
    return row


def run_compare(cfg, seeds, cfg_hash, trajectories_dir=None, threads=1):
    jobs = [(cfg, s, trajectories_dir, cfg_hash) for s in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            rows = list(pool.map(_compare_one, jobs))
    else:
        rows = [_compare_one(j) for j in jobs]
    agg = {"seed": "aggregate"}
    for col in COMPARE_COLUMNS[1:]:
        agg[col] = sum(r[col] for r in rows) / len(rows)
    return rows, agg


def cmd_compare(args):
    cfg, doc = _load(args.config)
    seeds = parse_seed_range(args.seeds)
    threads = thread_count()
    traj_dir = args.out if args.trajectories else None
    rows, agg = run_compare(cfg, seeds, configmod.config_hash(doc), traj_dir, threads)
    atomic_write_text(os.path.join(args.out, "compare.csv"), csv_text(COMPARE_COLUMNS, rows + [agg]))
    print(f"{'policy':<10} {'success':>8} {'sel_acc':>8} {'rms_pos':>8}")
    for p in POLICIES:
        print(f"{p:<10} {agg[p + '_success']:>8.3f} {agg[p + '_selection_accuracy']:>8.4f} "
              f"{agg[p + '_rms_position_error']:>8.4f}")
    return 0


def _prior_noise(text):
    try:
        pos, yaw = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError("prior-noise", f"expected pos,yaw, got {text!r}") from None
    return pos, math.radians(yaw)


def cmd_bench(args):
    cfg = _load(args.config)[0] if args.config else None
    res = run_bench(
        sigma=args.sigma, range_m=args.range, tilt_deg=args.tilt, trials=args.trials,
        prior_noise=_prior_noise(args.prior_noise), seed=args.seed, config=cfg,
    )
    atomic_write_text(os.path.join(args.out, "bench.csv"), csv_text(BENCH_COLUMNS, res.rows))
    print(f"trials={res.trials} sigma={args.sigma} range={args.range} m tilt<={args.tilt} deg")
    print(f"{'selector':<12} {'accuracy':>9}")
    print(f"{'e1-only':<12} {res.e1_only_accuracy:>9.4f}")
    print(f"{'ours':<12} {res.ours_accuracy:>9.4f}")
    print(f"nearer candidate had higher e1 in {res.ambiguous_fraction:.4f} of trials")
    return 0


def build_parser():
    p = _Parser(prog="marker-nav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one closed-loop scenario")
    s.add_argument("config", nargs="?", default=None, help="scenario JSON (default: bundled paper scenario)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--policy", choices=POLICIES, default=None)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run both selection policies over a seed range")
    c.add_argument("config", nargs="?", default=None)
    c.add_argument("--seeds", required=True, help="inclusive range A..B")
    c.add_argument("--out", default=".")
    c.add_argument("--trajectories", action="store_true", help="also write a trajectory CSV per seed and policy")
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="static Monte-Carlo of candidate selection")
    b.add_argument("--sigma", type=float, default=1.0, help="pixel noise std (px)")
    b.add_argument("--range", type=float, default=2.5, help="camera-to-marker distance (m)")
    b.add_argument("--tilt", type=float, default=15.0, help="max bearing off the marker normal (deg)")
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--prior-noise", default="0,0", help="prior std as pos_m,yaw_deg")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--config", default=None, help="scenario JSON supplying rig and marker")
    b.add_argument("--out", default=".")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
