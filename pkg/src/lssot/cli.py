"""
Command-line interface.

Exit codes: 0 success, 1 malformed input data, 2 configuration error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, io
from .embedding import DEFAULT_L, DEFAULT_M, embed, pairwise_from_embeddings
from .errors import LssotError
from .flow import FlowConfig, MODES, loss_spaced_frames, run_flow
from .slicer import DEFAULT_EPS, sample_slices
from .sphere_stats import VmfParams, classical_mds, fibonacci_sphere, vmf_sample

log = logging.getLogger("lssot")


class ConfigError(Exception):
    pass


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def _vector(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _slice_args(p):
    p.add_argument("--seed", type=int, default=0, help="slice seed")
    p.add_argument("--slices", "-L", "--l", type=int, default=DEFAULT_L, help="number of slices")
    p.add_argument("--grid", "-M", "--m", type=int, default=DEFAULT_M, help="reference grid size")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS, help="polar cap radius")


def _check_slice_args(args):
    if args.slices < 1 or args.grid < 1:
        raise ConfigError("--slices and --grid must be positive")
    if args.eps < 0:
        raise ConfigError("--eps must be nonnegative")


def _run_config(args, **extra):
    cfg = {"command": args.command}
    for key in ("seed", "slices", "grid", "eps"):
        if hasattr(args, key):
            cfg[{"slices": "L", "grid": "M"}.get(key, key)] = getattr(args, key)
    cfg["threads"] = args.threads
    cfg.update(extra)
    cfg["output"] = args.output
    return cfg


def cmd_embed(args):
    _check_slice_args(args)
    cloud = io.read_cloud(args.input)
    slices = sample_slices(args.seed, args.slices, cloud.d)
    emb = embed(cloud, slices, args.grid, args.eps, args.threads)
    io.write_embedding(args.output, emb)
    io.write_runconfig(args.output, _run_config(args, input=args.input, d=cloud.d,
                                                dropped=",".join(map(str, emb.dropped_slices))))


def _load_embeddings(args):
    paths = args.inputs
    kinds = [io.is_embedding_file(p) for p in paths]
    if any(kinds) and not all(kinds):
        raise ConfigError("inputs mix embedding files and cloud files")
    if all(kinds):
        embs = [io.read_embedding(p) for p in paths]
        for p, e in zip(paths[1:], embs[1:]):
            if e.slice_digest != embs[0].slice_digest or e.M != embs[0].M:
                raise ConfigError(f"{paths[0]} and {p} were embedded with different slices or grids")
        return embs
    _check_slice_args(args)
    clouds = [io.read_cloud(p) for p in paths]
    for p, c in zip(paths[1:], clouds[1:]):
        if c.d != clouds[0].d:
            raise ConfigError(f"dimension mismatch: {paths[0]} has d={clouds[0].d}, {p} has d={c.d}")
    slices = sample_slices(args.seed, args.slices, clouds[0].d)
    embs = []
    for p, c in zip(paths, clouds):
        try:
            embs.append(embed(c, slices, args.grid, args.eps, args.threads))
        except LssotError as exc:
            raise io.DataError(f"{p}: {exc}") from exc
    return embs


def cmd_pairwise(args):
    if len(args.inputs) < 2:
        raise ConfigError("pairwise needs at least two inputs")
    embs = _load_embeddings(args)
    labels = [Path(p).stem for p in args.inputs]
    D = pairwise_from_embeddings(embs, labels, args.threads)
    io.write_matrix(args.output, D.values, labels)
    e = embs[0]
    # echo the provenance actually used, which for embedding inputs comes from the files
    args.seed, args.slices, args.grid, args.eps = e.slice_seed, e.L, e.M, e.eps
    io.write_runconfig(args.output, _run_config(args, inputs=",".join(args.inputs)))


def cmd_flow(args):
    if args.frames < 1:
        raise ConfigError("--frames must be positive")
    _check_slice_args(args)
    try:
        cfg = FlowConfig(steps=args.steps, lr=args.lr, mode=args.mode, slices_per_step=args.slices,
                         reseed_each_step=args.reseed, eps=args.eps, M=args.grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    source = io.read_cloud(args.source)
    target = io.read_cloud(args.target)
    if source.d != target.d:
        raise ConfigError(f"dimension mismatch: {args.source} has d={source.d}, {args.target} has d={target.d}")
    if args.mode == "spherical_coordinates" and source.d != 3:
        raise ConfigError("spherical_coordinates mode needs d=3")
    traj = run_flow(source, target, cfg, args.seed)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    io.write_table(out / "loss.csv", ["step", "loss"], [(k, float(v)) for k, v in enumerate(traj.losses)])
    picks = loss_spaced_frames(traj.losses, args.frames)
    index = []
    for j, step in enumerate(picks):
        T = j / (args.frames - 1) if args.frames > 1 else 1.0
        name = f"frame_{j:02d}.csv"
        io.write_cloud(out / name, traj.snapshots[step])
        index.append((j, step, float(T), float(traj.losses[step]), name))
    io.write_table(out / "frames.csv", ["frame", "step", "T", "loss", "file"], index)
    io.write_runconfig(out / "flow", _run_config(args, source=args.source, target=args.target,
                                                 steps=args.steps, lr=args.lr, mode=args.mode,
                                                 frames=args.frames, reseed=args.reseed))


def cmd_bench(args):
    if args.repeats < 1 or args.slices < 1 or args.grid < 1:
        raise ConfigError("--repeats, --slices and --grid must be positive")
    rows = bench.run(args.n_list, args.k_list, args.slices, args.grid, args.dim, args.repeats,
                     args.seed, args.pair_sample, args.ssw_pairs, args.ssw_alpha, args.eps, args.threads)
    header = ["N", "K", "method", "pairs_timed", "median_s"] + [f"raw_{i + 1}" for i in range(args.repeats)]
    table = [[r["N"], r["K"], r["method"], r["pairs_timed"], r["median"], *r["raw"]] for r in rows]
    io.write_table(args.output, header, table)
    io.write_runconfig(args.output, _run_config(args, n_list=",".join(map(str, args.n_list)),
                                                k_list=",".join(map(str, args.k_list)),
                                                repeats=args.repeats))


def cmd_vmf(args):
    mu = args.mu
    if mu.shape != (3,) or np.linalg.norm(mu) == 0:
        raise ConfigError("--mu must be a nonzero vector in R^3")
    if not args.kappa > 0:
        raise ConfigError("--kappa must be positive")
    if args.n < 1:
        raise ConfigError("--n must be positive")
    cloud = vmf_sample(VmfParams(mu / np.linalg.norm(mu), args.kappa), args.n, args.seed)
    io.write_cloud(args.output, cloud)
    io.write_runconfig(args.output, _run_config(args, mu=",".join(map(repr, mu.tolist())),
                                                kappa=args.kappa, n=args.n))


def cmd_fib(args):
    if args.n < 1:
        raise ConfigError("--n must be positive")
    from .slicer import make_cloud

    io.write_cloud(args.output, make_cloud(fibonacci_sphere(args.n), normalize=True))
    io.write_runconfig(args.output, _run_config(args, n=args.n))


def cmd_mds(args):
    if args.dim < 1:
        raise ConfigError("--dim must be positive")
    D, labels = io.read_matrix(args.input)
    res = classical_mds(D, args.dim)
    header = ["label"] + [f"c{i + 1}" for i in range(res.coordinates.shape[1])]
    io.write_table(args.output, header, [[lab, *map(float, row + 0.0)] for lab, row in zip(labels, res.coordinates)])
    if res.negative_eigenvalues.size:
        print(f"warning: {res.negative_eigenvalues.size} negative eigenvalues clamped "
              f"(most negative {res.negative_eigenvalues.min():.3g})", file=sys.stderr)
    io.write_runconfig(args.output, _run_config(args, input=args.input, dim=args.dim,
                                                eigenvalues=",".join(map(repr, res.eigenvalues.tolist()))))


def build_parser():
    p = argparse.ArgumentParser(prog="lssot", description=__doc__.strip().splitlines()[0])
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (results do not depend on it)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("embed", help="LSSOT embedding of a cloud file")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    _slice_args(s)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("pairwise", help="distance matrix from cloud or embedding files")
    s.add_argument("inputs", nargs="+")
    s.add_argument("-o", "--output", required=True)
    _slice_args(s)
    s.set_defaults(func=cmd_pairwise)

    s = sub.add_parser("flow", help="gradient flow of SOURCE toward TARGET")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.add_argument("--steps", type=int, default=500)
    s.add_argument("--lr", type=float, default=50.0, help="initial step size (gradients scale like 1/N)")
    s.add_argument("--mode", choices=MODES, default="riemannian")
    s.add_argument("--frames", type=int, default=5)
    s.add_argument("--reseed", action="store_true", help="fresh gradient slices every step")
    _slice_args(s)
    s.set_defaults(func=cmd_flow, slices=200)

    s = sub.add_parser("bench", help="pairwise timing benchmark")
    s.add_argument("--n-list", type=_int_list, default=[1000])
    s.add_argument("--k-list", type=_int_list, default=[10])
    s.add_argument("--slices", "-L", "--l", type=int, default=DEFAULT_L)
    s.add_argument("--grid", "-M", "--m", type=int, default=DEFAULT_M)
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=DEFAULT_EPS)
    s.add_argument("--pair-sample", type=int, default=5, help="pairs timed for the naive engine")
    s.add_argument("--ssw-pairs", type=int, default=1, help="pairs timed for SSW (0 disables)")
    s.add_argument("--ssw-alpha", type=int, default=200, help="rotation grid size for SSW")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("vmf", help="sample a von Mises-Fisher cloud on S^2")
    s.add_argument("--mu", type=_vector, default=np.array([0.0, 0.0, 1.0]))
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_vmf)

    s = sub.add_parser("fib", help="Fibonacci sphere points")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_fib)

    s = sub.add_parser("mds", help="classical MDS of a distance matrix CSV")
    s.add_argument("input")
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_mds)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (LssotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
