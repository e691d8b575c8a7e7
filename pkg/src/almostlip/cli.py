"""Command line front end.

Each subcommand reads one input (or builds a gallery set), runs one
experiment and writes a JSON report. Reports carry no timestamps; run
metadata goes to a ``<out>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import gallery as gal
from .covering import ScaleGrid, box_dimension_estimate, homogeneity_fit
from .io import InputError, dumps, load_input, write_csv
from .linear_reduction import (
    ChainError,
    banach_quarter_check,
    build_chain,
    embed_and_audit,
    lipschitz_deviation_estimate,
    lipschitz_graph_approx,
    metric_pipeline,
    reverse_projection_check,
    sample_probe_map,
    shell_subspaces,
    thickness_estimate,
)
from .metric_core import FiniteMetricSpace, PointSet, difference_set
from .net_embedding import assemble_embedding, audit_distortion, build_coloring_atlas, verify_block_properties

EXIT_OK = 0
EXIT_AUDIT = 1
EXIT_USAGE = 2

DEFAULTS = {
    "input_kind": "auto",
    "norm": "euclidean",
    "format": "json",
    "alpha": 0.0,
    "beta": 0.0,
    "gamma": 1.0,
    "delta": 1.0,
    "zeta": 1.0,
    "target_dim": 8,
    "seeds": "20",
    "m": 8.0,
    "kind": "interval",
    "n": 64,
    "depth": 3,
    "R": 0.1,
    "decay": "geometric",
    "decay_exponent": 3.0,
    "eps": 1.0,
    "include_origin": False,
}


class UsageError(Exception):
    pass


def parse_seeds(text) -> tuple[int, ...]:
    """``"20"`` is ``0..19``, ``"3:7"`` is ``3..6``, ``"1,5,9"`` is a list."""
    if isinstance(text, int):
        return tuple(range(text))
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    text = str(text).strip()
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            seeds = tuple(range(int(a), int(b)))
        elif "," in text:
            seeds = tuple(int(s) for s in text.split(",") if s.strip())
        else:
            seeds = tuple(range(int(text)))
    except ValueError:
        raise UsageError(f"cannot parse seeds {text!r}") from None
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


def _add_common(p: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", help="CSV or JSON file with points or a distance matrix")
        p.add_argument("--input-kind", choices=("auto", "points", "distances"), default=None)
        p.add_argument("--norm", choices=("euclidean", "sup"), default=None, help="norm for point clouds")
    p.add_argument("--format", choices=("json", "csv"), default=None, help="csv also writes a per-bin table")
    p.add_argument("--out", help="report path; stdout when omitted")
    p.add_argument("--config", help="JSON file mirroring the flags; explicit flags win")
    p.add_argument("--grid-min", type=int, default=None)
    p.add_argument("--grid-max", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="almostlip", description="Covering fits, embeddings and audits for finite metric spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dim-estimate", help="covering fits and box dimension")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--local-cutoff", type=float, default=None)

    p = sub.add_parser("embed-net", help="net-and-coloring embedding with distortion audit")
    _add_common(p)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)

    p = sub.add_parser("embed-linear", help="subspace chain and random probe maps")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--target-dim", type=int, default=None)
    p.add_argument("--seeds", default=None)

    p = sub.add_parser("deviation", help="graph approximations, reverse check and thickness")
    _add_common(p)
    p.add_argument("--m", type=float, default=None, help="Lipschitz constant of the graphs")

    p = sub.add_parser("gallery", help="generate an example set and check its claim")
    _add_common(p, needs_input=False)
    p.add_argument("--kind", choices=gal.KINDS, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--decay", choices=("geometric", "algebraic"), default=None)
    p.add_argument("--decay-exponent", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--include-origin", action="store_true", default=None)
    p.add_argument("--points-out", help="also write the generated coordinates as CSV")

    p = sub.add_parser("metric-pipeline", help="Kuratowski embedding followed by probe maps")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--target-dim", type=int, default=None)
    p.add_argument("--seeds", default=None)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and explicit flags, in increasing priority."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        for k, v in loaded.items():
            cfg[k.replace("-", "_")] = v
    for k, v in vars(args).items():
        if v is not None:
            cfg[k] = v
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg.get("command") not in ("gallery",) and not cfg.get("input"):
        raise UsageError("--input is required")
    if not cfg["delta"] > 0.5:
        raise UsageError("--delta must exceed 1/2")
    if not cfg["zeta"] > 0:
        raise UsageError("--zeta must be positive")
    if cfg["gamma"] < 0:
        raise UsageError("--gamma must be nonnegative")
    if int(cfg["target_dim"]) < 1:
        raise UsageError("--target-dim must be at least 1")
    if cfg["m"] < 0:
        raise UsageError("--m must be nonnegative")
    lo, hi = cfg.get("grid_min"), cfg.get("grid_max")
    if (lo is None) != (hi is None):
        raise UsageError("--grid-min and --grid-max go together")
    if lo is not None and int(hi) < int(lo):
        raise UsageError("--grid-max must not be below --grid-min")
    if cfg.get("local_cutoff") is not None and not cfg["local_cutoff"] > 0:
        raise UsageError("--local-cutoff must be positive")
    cfg["seeds"] = parse_seeds(cfg["seeds"])


def _grid(cfg: dict) -> ScaleGrid | None:
    if cfg.get("grid_min") is None:
        return None
    return ScaleGrid(int(cfg["grid_min"]), int(cfg["grid_max"]))


def _load(cfg: dict):
    return load_input(cfg["input"], cfg["input_kind"], cfg["norm"])


def _as_metric(X) -> FiniteMetricSpace:
    return X if isinstance(X, FiniteMetricSpace) else X.metric()


def _modulus_table(report) -> tuple[list[str], list[list]]:
    header = ["bin", "count", "d_min", "d_max", "out_min", "out_max"]
    return header, [[b.bin, b.count, b.d_min, b.d_max, b.out_min, b.out_max] for b in report.modulus]


# ---------------------------------------------------------------------------
# commands; each returns (report, passed, csv table or None)
# ---------------------------------------------------------------------------


def cmd_dim_estimate(cfg: dict):
    X = _load(cfg)
    grid = _grid(cfg)
    fit = homogeneity_fit(X, grid, cfg["alpha"], cfg["beta"])
    report = {"n_points": X.n, "fit": fit.to_dict()}
    if cfg.get("local_cutoff") is not None:
        report["local_fit"] = homogeneity_fit(X, grid, cfg["alpha"], cfg["beta"], cfg["local_cutoff"]).to_dict()
    try:
        report["box_dimension"] = box_dimension_estimate(X, grid).to_dict()
    except ValueError as exc:
        report["box_dimension"] = {"error": str(exc)}
    header = ["r", "rho", "N_upper", "N_lower"]
    table = (header, [list(r) for r in fit.profile.rows])
    return report, math.isfinite(fit.s_hat), table


def cmd_embed_net(cfg: dict):
    X = _load(cfg)
    D = X.dist if isinstance(X, FiniteMetricSpace) else X.distances()
    atlas = build_coloring_atlas(D, _grid(cfg))
    blocks = verify_block_properties(atlas)
    emb = assemble_embedding(D, atlas, cfg["delta"])
    audit = audit_distortion(emb, D, cfg["gamma"])
    report = {
        "n_points": int(D.shape[0]),
        "delta": cfg["delta"],
        "dim": emb.dim,
        "base_idx": emb.base_idx,
        "base_image_norm": float(np.linalg.norm(emb.coords()[emb.base_idx])),
        "layout": emb.layout(),
        "tail_bound": emb.tail_bound,
        "coloring": atlas.summary(),
        "blocks": blocks.to_dict(),
        "distortion": audit.to_dict(),
    }
    passed = blocks.passed and math.isfinite(audit.L_fit)
    return report, passed, _modulus_table(audit)


def _euclidean_points(X, command: str) -> PointSet:
    if isinstance(X, FiniteMetricSpace):
        raise UsageError(f"{command} needs a point cloud; use metric-pipeline for a distance matrix")
    return X


def cmd_embed_linear(cfg: dict):
    X = _euclidean_points(_load(cfg), "embed-linear")
    Z = difference_set(X)
    extra = {}
    if X.norm_kind == "euclidean":
        chain = shell_subspaces(Z, _grid(cfg))
    else:
        chain = build_chain(Z, None if _grid(cfg) is None else (cfg["grid_min"], cfg["grid_max"]))
        q = banach_quarter_check(Z, _grid(cfg))
        extra["quarter_check"] = q.to_dict()
    res = embed_and_audit(X, int(cfg["target_dim"]), cfg["gamma"], cfg["zeta"], cfg["seeds"], chain)
    op_ok = all(sample_probe_map(chain, int(cfg["target_dim"]), cfg["zeta"], s).operator_bound_holds() for s in cfg["seeds"])
    report = {"n_points": X.n, "norm": X.norm_kind, **res.to_dict(), "operator_bound_holds": op_ok, **extra}
    passed = op_ok and extra.get("quarter_check", {}).get("passed", True)
    return report, passed, _modulus_table(res.reports[0])


def cmd_deviation(cfg: dict):
    X = _euclidean_points(_load(cfg), "deviation")
    if X.norm_kind != "euclidean":
        raise UsageError("deviation needs a Euclidean point cloud")
    chain = shell_subspaces(difference_set(X))
    grid = _grid(cfg)
    levels = list(grid.scales) if grid is not None else [k for k in chain.levels if k >= 0]
    approxes = {}
    failures = []
    for k in levels:
        try:
            approxes[k] = lipschitz_graph_approx(X, chain, cfg["m"], k)
        except ChainError as exc:
            failures.append({"k": k, "error": str(exc), "witness": np.asarray(exc.witness).tolist()})
    graphs = [a.to_dict() for a in approxes.values()]
    eps_ok = all(a.epsilon_k <= 2.0**-a.k for a in approxes.values())
    report = {
        "n_points": X.n,
        "m": cfg["m"],
        "chain": chain.growth_table(),
        "graphs": graphs,
        "graph_failures": failures,
        "graph_distance_ok": eps_ok,
        "deviation": lipschitz_deviation_estimate(chain),
        "thickness": thickness_estimate(X, [2.0**-k for k in levels]).to_dict(),
    }
    passed = not failures and eps_ok
    try:
        rev = reverse_projection_check(X, approxes, cfg["m"])
        report["reverse"] = rev.to_dict()
        passed = passed and rev.passed
    except KeyError as exc:
        report["reverse"] = {"skipped": str(exc)}
    header = ["k", "dim", "net_size", "net_lipschitz", "epsilon_k"]
    rows = [[g["k"], g["dim"], g["net_size"], g["net_lipschitz"], g["epsilon_k"]] for g in graphs]
    return report, passed, (header, rows)


def cmd_gallery(cfg: dict):
    spec = gal.GallerySpec(
        kind=cfg["kind"],
        n=int(cfg["n"]),
        decay=cfg["decay"],
        depth=int(cfg["depth"]),
        R=float(cfg["R"]),
        include_origin=bool(cfg["include_origin"]),
        gamma=float(cfg["decay_exponent"]),
        eps=float(cfg["eps"]),
    )
    X = gal.generate(spec)
    claim = gal.verify_claim(spec)
    report = {"spec": spec.to_dict(), "n_points": X.n, "ambient_dim": X.dim, "claim": claim.to_dict()}
    if cfg.get("points_out"):
        write_csv(cfg["points_out"], [f"x{i}" for i in range(X.dim)], X.coords.tolist())
    return report, claim.passed, None


def cmd_metric_pipeline(cfg: dict):
    X = _as_metric(_load(cfg))
    res = metric_pipeline(X, int(cfg["target_dim"]), cfg["gamma"], cfg["zeta"], cfg["seeds"])
    op_ok = all(sample_probe_map(res.chain, int(cfg["target_dim"]), cfg["zeta"], s).operator_bound_holds() for s in cfg["seeds"])
    report = {"n_points": X.n, **res.to_dict(), "operator_bound_holds": op_ok}
    return report, op_ok, _modulus_table(res.reports[0])


COMMANDS = {
    "dim-estimate": cmd_dim_estimate,
    "embed-net": cmd_embed_net,
    "embed-linear": cmd_embed_linear,
    "deviation": cmd_deviation,
    "gallery": cmd_gallery,
    "metric-pipeline": cmd_metric_pipeline,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def run(cfg: dict, argv: list[str] | None = None) -> int:
    """Run one resolved configuration; returns the exit status."""
    try:
        report, passed, table = COMMANDS[cfg["command"]](cfg)
    except (InputError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ChainError as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except (ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": cfg["command"], "passed": bool(passed), "report": report}
    text = dumps(report)
    out = cfg.get("out")
    if out:
        path = Path(out)
        path.write_text(text)
        meta = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "argv": list(argv or []),
            "version": _version(),
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()},
        }
        Path(str(path) + ".meta.json").write_text(dumps(meta))
        if cfg["format"] == "csv" and table is not None:
            write_csv(path.with_suffix(".csv"), *table)
    else:
        sys.stdout.write(text)
    if not passed:
        print(f"audit failure in {cfg['command']}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg, argv)


if __name__ == "__main__":
    sys.exit(main())
