"""Command-line surface: pipeline runs, solver equivalence checks, and the
runtime-scaling benchmark.

Exit codes: 0 success, 1 validation/runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from time import perf_counter

import numpy as np

from .alloc import build_pipeline
from .errors import LddrError
from .io import RunConfig, load_embeddings, write_plan
from .kernel import build_phi, materialize_kernel
from .select import available_backends, greedy_feature_space, greedy_kernel_space
from .types import KERNEL_CAP, EmbeddingSet

GAIN_RTOL = 1e-6  # solver agreement threshold for oracle-check


def synthetic_embeddings(size: int, dim: int, rng: np.random.Generator) -> EmbeddingSet:
    """Random unit directions for frames and query (bench input)."""
    frames = rng.standard_normal((size, dim))
    frames /= np.linalg.norm(frames, axis=1, keepdims=True)
    query = rng.standard_normal(dim)
    query /= np.linalg.norm(query)
    return EmbeddingSet(frame_embeddings=frames, query_embedding=query)


def cmd_select(args) -> int:
    config = RunConfig(
        frame_budget=args.frames,
        mode=args.mode,
        w_min=args.wmin,
        w_max=args.wmax,
        tau=args.tau,
        pool_multiplier=args.pool_mult,
        chunks=args.chunks,
    )
    embeddings = load_embeddings(args.embeddings)
    t0 = perf_counter()
    result = build_pipeline(embeddings, config.frame_budget, config.mode, config)
    elapsed_ms = (perf_counter() - t0) * 1e3
    write_plan(result.plan, result.trace, result.scores, config, args.out)
    plan = result.plan
    print(f"k*={plan.k_star} total_tokens={plan.total_tokens}/{plan.budget} "
          f"elapsed_ms={elapsed_ms:.1f}")
    return 0


def cmd_oracle_check(args) -> int:
    embeddings = load_embeddings(args.embeddings)
    features = build_phi(embeddings)
    feat_trace = greedy_feature_space(features, args.budget)
    kernel = materialize_kernel(features)
    if args.perturb:
        rng = np.random.default_rng(args.seed)
        noise = rng.standard_normal(kernel.shape)
        kernel = kernel + args.perturb * (noise + noise.T) / 2.0
    kern_trace = greedy_kernel_space(kernel, args.budget)

    steps = min(len(feat_trace), len(kern_trace))
    for step in range(steps):
        if feat_trace.selected[step] != kern_trace.selected[step]:
            print(f"FAIL: selection diverges at step {step}: "
                  f"feature={feat_trace.selected[step]} kernel={kern_trace.selected[step]}")
            return 1
    if len(feat_trace) != len(kern_trace):
        print(f"FAIL: trace lengths differ: feature={len(feat_trace)} "
              f"kernel={len(kern_trace)}")
        return 1
    max_dev = 0.0
    for g_f, g_k in zip(feat_trace.gains, kern_trace.gains):
        max_dev = max(max_dev, abs(g_f - g_k) / max(abs(g_f), abs(g_k), 1e-300))
    if max_dev > GAIN_RTOL:
        print(f"FAIL: max gain deviation {max_dev:.3e} exceeds {GAIN_RTOL:.0e}")
        return 1
    print(f"PASS: sequences identical ({len(feat_trace)} steps), "
          f"max gain deviation {max_dev:.3e}")
    return 0


def _feature_runner(budget: int, backend: str | None):
    def run(embeddings: EmbeddingSet) -> None:
        features = build_phi(embeddings)
        greedy_feature_space(features, budget, backend=backend)
    return run


def _kernel_runner(budget: int, cap: int):
    def run(embeddings: EmbeddingSet) -> None:
        features = build_phi(embeddings)
        kernel = materialize_kernel(features, cap=cap)
        greedy_kernel_space(kernel, budget)
    return run


def cmd_bench(args) -> int:
    sizes = args.sizes
    if args.reps < 1:
        print("error: --reps must be >= 1", file=sys.stderr)
        return 2
    if args.budget < 1 or args.budget > min(sizes):
        print(f"error: --budget must be in [1, {min(sizes)}]", file=sys.stderr)
        return 2

    cap = max(KERNEL_CAP, max(sizes)) if args.force else KERNEL_CAP
    runners: list[tuple[str, object]] = []
    if args.solver in ("feature", "both"):
        if args.backend == "both":
            for name in available_backends():
                runners.append((f"feature-{name}", _feature_runner(args.budget, name)))
        else:
            backend = None if args.backend == "auto" else args.backend
            runners.append(("feature", _feature_runner(args.budget, backend)))
    if args.solver in ("kernel", "both"):
        oversized = [s for s in sizes if s > cap]
        if oversized:
            print(f"error: sizes {oversized} exceed kernel cap {cap} "
                  f"(pass --force to override)", file=sys.stderr)
            return 1
        runners.append(("kernel", _kernel_runner(args.budget, cap)))

    rows = []
    for size in sizes:
        embeddings = synthetic_embeddings(size, args.dim, np.random.default_rng([args.seed, size]))
        for label, run in runners:
            times_ms = []
            for _ in range(args.reps):
                t0 = perf_counter()
                run(embeddings)
                times_ms.append((perf_counter() - t0) * 1e3)
            rows.append((size, label,
                         float(np.median(times_ms)),
                         float(np.percentile(times_ms, 10)),
                         float(np.percentile(times_ms, 90))))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["size", "solver", "median_ms", "p10_ms", "p90_ms"])
        for size, label, med, p10, p90 in rows:
            writer.writerow([size, label, f"{med:.4f}", f"{p10:.4f}", f"{p90:.4f}"])

    for label, _ in runners:
        pts = [(s, med) for s, lab, med, _, _ in rows if lab == label]
        if len(pts) >= 2:
            slope = float(np.polyfit(np.log([p[0] for p in pts]),
                                     np.log([p[1] for p in pts]), 1)[0])
            print(f"{label}: log-log slope {slope:.3f}")
        else:
            print(f"{label}: need >= 2 sizes for a slope fit")
    print(f"wrote {args.out}")
    return 0


def _sizes_arg(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from exc
    if not sizes or any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lddr",
        description="Budget-aware video frame selection and token allocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sel = sub.add_parser("select", help="run the selection/allocation pipeline")
    p_sel.add_argument("--embeddings", required=True,
                       help="embedding file (binary, or .json twin)")
    p_sel.add_argument("--frames", required=True, type=int,
                       help="frame-equivalent budget F")
    p_sel.add_argument("--mode", choices=("fixed", "dynamic"), default="dynamic")
    p_sel.add_argument("--tau", type=float, default=1.0,
                       help="density prior exponent")
    p_sel.add_argument("--wmin", type=int, default=256)
    p_sel.add_argument("--wmax", type=int, default=1024)
    p_sel.add_argument("--pool-mult", type=float, default=2.0,
                       help="candidate pool size as a multiple of F (dynamic mode)")
    p_sel.add_argument("--chunks", type=int, default=1,
                       help="temporal chunks for chunked selection (1 = global)")
    p_sel.add_argument("--out", required=True, help="plan JSON output path")
    p_sel.set_defaults(func=cmd_select)

    p_orc = sub.add_parser("oracle-check",
                           help="diff feature-space and kernel-space solver traces")
    p_orc.add_argument("--embeddings", required=True)
    p_orc.add_argument("--budget", required=True, type=int)
    p_orc.add_argument("--perturb", type=float, default=0.0,
                       help="test hook: corrupt the kernel at this scale to force FAIL")
    p_orc.add_argument("--seed", type=int, default=0)
    p_orc.set_defaults(func=cmd_oracle_check)

    p_bench = sub.add_parser("bench", help="runtime scaling benchmark")
    p_bench.add_argument("--sizes", required=True, type=_sizes_arg,
                         help="comma-separated frame counts, e.g. 512,1024,2048")
    p_bench.add_argument("--dim", type=int, default=512)
    p_bench.add_argument("--budget", type=int, default=32)
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--solver", choices=("feature", "kernel", "both"),
                         default="both")
    p_bench.add_argument("--backend", choices=("auto", "python", "compiled", "both"),
                         default="auto",
                         help="feature-solver backend; 'both' benches the compiled "
                              "core against the numpy fallback")
    p_bench.add_argument("--out", required=True, help="CSV output path")
    p_bench.add_argument("--force", action="store_true",
                         help="allow kernel materialization above the size cap")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except (LddrError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
