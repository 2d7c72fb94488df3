"""Command-line interface: ``ricci-community <command> ...``.

Commands
--------
curvature   per-edge curvature table
flow        run the Ricci flow and print the final weighted edge list
detect      flow, scan the cutoff curve and write the selected partition
generate    write an SBM or G(a, b) edge list plus its labels
eval        ARI and modularity of a partition file

Defaults of the flow flags can be overridden through environment variables
named ``RICCI_COMMUNITY_<FLAG>`` (e.g. ``RICCI_COMMUNITY_ITERATIONS=20``) or
through ``--config manifest.json`` from an earlier run.  Precedence is
explicit flag, then manifest, then environment, then built-in default.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from contextlib import contextmanager
from typing import Optional

from . import __version__
from .community import scan_cutoffs, select_cutoff, cut_by_threshold, write_curve, PLATEAU_TOL
from .config import FlowConfig
from .curvature import all_curvatures
from .errors import DomainError, RicciError
from .flow import run_flow, write_trace
from .generators import gen_gab, gen_sbm
from .graph import Graph, Partition, load_edge_list, read_labels, write_edge_list, write_partition
from .metrics import ari, modularity

ENV_PREFIX = "RICCI_COMMUNITY_"
PROG = "ricci-community"

# flag dest -> FlowConfig field
_CONFIG_FIELDS = {
    "alpha": "alpha",
    "p": "p",
    "base": "base",
    "epsilon": "epsilon",
    "delta": "delta",
    "iterations": "max_iterations",
    "method": "ot_method",
    "reg": "sinkhorn_reg",
    "surgery_every": "surgery_every",
    "surgery_top": "surgery_quantile",
    "weight_floor": "weight_floor",
    "threads": "workers",
}

log = logging.getLogger(PROG)


def _flag_true(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _add_flow_flags(p: argparse.ArgumentParser, flow: bool = True):
    g = p.add_argument_group("curvature")
    g.add_argument("--alpha", type=float, default=0.5, help="mass kept at each node (default 0.5)")
    g.add_argument("--p", type=float, default=2.0, help="distance exponent of the neighbour weights (default 2)")
    g.add_argument("--base", type=float, default=math.e, help="base of the neighbour weights (default e)")
    g.add_argument("--method", choices=("exact", "sinkhorn"), default="exact", help="optimal transport solver")
    g.add_argument("--reg", type=float, default=0.1, help="Sinkhorn regularisation (default 0.1)")
    g.add_argument("--threads", type=int, default=1, help="worker threads for curvature evaluation")
    g.add_argument("--config", metavar="MANIFEST", help="take flow settings from a run manifest")
    if not flow:
        return
    g = p.add_argument_group("flow")
    g.add_argument("--iterations", type=int, default=50, help="maximum flow iterations (default 50)")
    g.add_argument("--epsilon", type=float, default=1.0, help="step size (default 1)")
    g.add_argument("--delta", type=float, default=1e-4, help="curvature convergence tolerance (default 1e-4)")
    g.add_argument("--surgery-every", type=int, default=5,
                   help="surgery period in iterations, 0 disables (default 5)")
    g.add_argument("--surgery-top", type=float, default=0.05,
                   help="fraction of heaviest edges cut by each surgery (default 0.05)")
    g.add_argument("--weight-floor", type=float, default=1e-8, help="smallest edge weight allowed")
    g.add_argument("--no-normalize", action="store_true", help="skip the per-iteration rescaling")
    g.add_argument("--trace", metavar="FILE", help="write the iteration trace to FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Community detection by discrete Ricci flow.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="per-edge Ollivier-Ricci curvature")
    p.add_argument("graph", help="edge-list file, '-' for stdin")
    p.add_argument("-o", "--out", help="output file (default stdout)")
    _add_flow_flags(p, flow=False)

    p = sub.add_parser("flow", help="run the Ricci flow, print final weights")
    p.add_argument("graph", help="edge-list file, '-' for stdin")
    p.add_argument("-o", "--out", help="weighted edge list output (default stdout)")
    p.add_argument("--manifest", help="run manifest path (default OUT.manifest.json when --out is set)")
    _add_flow_flags(p)

    p = sub.add_parser("detect", help="flow, cut and select communities")
    p.add_argument("graph", help="edge-list file, '-' for stdin")
    p.add_argument("--truth", help="ground-truth 'node community' file; prints the ARI")
    p.add_argument("-o", "--out", help="partition output (default stdout)")
    p.add_argument("--curve", help="write the cutoff curve to this file")
    p.add_argument("--manifest", help="run manifest path (default OUT.manifest.json when --out is set)")
    p.add_argument("--plateau-tol", type=float, default=PLATEAU_TOL,
                   help=f"modularity slack for the plateau rule (default {PLATEAU_TOL})")
    _add_flow_flags(p)

    p = sub.add_parser("generate", help="synthetic graphs with labels")
    p.add_argument("model", choices=("sbm", "gab"))
    p.add_argument("--n", type=int, default=200, help="SBM node count")
    p.add_argument("--k", type=int, default=2, help="SBM block count")
    p.add_argument("--p-intra", type=float, default=0.2)
    p.add_argument("--p-inter", type=float, default=0.05)
    p.add_argument("--a", type=int, default=3, help="G(a, b): community clique size minus one")
    p.add_argument("--b", type=int, default=2, help="G(a, b): number of communities minus one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", metavar="PREFIX",
                   help="write PREFIX.edgelist, PREFIX.labels and PREFIX.manifest.json "
                        "(default: edge list to stdout)")
    p.add_argument("--labels", help="label file when writing the edge list to stdout")

    p = sub.add_parser("eval", help="ARI and modularity of a partition")
    p.add_argument("partition", help="'node community' file to score")
    p.add_argument("truth", help="ground-truth 'node community' file")
    p.add_argument("graph", help="edge list the modularity is measured on")
    return parser


def _apply_env_defaults(parser: argparse.ArgumentParser, environ) -> None:
    for action in _iter_actions(parser):
        key = ENV_PREFIX + action.dest.upper()
        if key not in environ or action.dest in ("help", "version", "command"):
            continue
        raw = environ[key]
        if action.const is True and action.nargs == 0:  # store_true
            value = _flag_true(raw)
        elif action.type is not None:
            try:
                value = action.type(raw)
            except ValueError:
                raise DomainError(f"{key}={raw!r} is not a valid value") from None
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            raise DomainError(f"{key}={raw!r} must be one of {sorted(action.choices)}")
        action.default = value


def _iter_actions(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                yield from _iter_actions(sub)
        else:
            yield action


def _manifest_defaults(args, parser_for_cmd):
    """Re-read flags with the manifest's config as defaults."""
    with open(args.config, encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = manifest.get("config", manifest)
    inverse = {v: k for k, v in _CONFIG_FIELDS.items()}
    defaults = {}
    for field_name, value in cfg.items():
        if field_name in inverse:
            defaults[inverse[field_name]] = value
    if cfg.get("surgery_every", 0) is None:
        defaults["surgery_every"] = 0
    if "normalize" in cfg:
        defaults["no_normalize"] = not cfg["normalize"]
    parser_for_cmd.set_defaults(**defaults)


def config_from_args(args) -> FlowConfig:
    kw = {}
    for dest, field_name in _CONFIG_FIELDS.items():
        if hasattr(args, dest):
            kw[field_name] = getattr(args, dest)
    if "surgery_every" in kw and kw["surgery_every"] == 0:
        kw["surgery_every"] = None
    if hasattr(args, "no_normalize"):
        kw["normalize"] = not args.no_normalize
    return FlowConfig(**kw)


# ---------------------------------------------------------------------------
# I/O helpers


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_graph(path: str, inputs: dict) -> Graph:
    text = _read_text(path)
    inputs[path] = _digest(text)
    g = load_edge_list(text)
    if g.edge_count == 0:
        raise DomainError(f"{path}: no edges")
    return g


@contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _write_manifest(path: str, command: str, cfg: Optional[FlowConfig], inputs: dict, outputs: list, **extra):
    doc = {
        "tool": PROG,
        "version": __version__,
        "command": command,
        "config": cfg.to_dict() if cfg is not None else None,
        "inputs": inputs,
        "outputs": outputs,
    }
    doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(args) -> Optional[str]:
    if getattr(args, "manifest", None):
        return args.manifest
    if getattr(args, "out", None) and args.out != "-":
        return args.out + ".manifest.json"
    return None


def _write_trace_if_asked(args, trace, g):
    if getattr(args, "trace", None):
        with _output(args.trace) as fh:
            write_trace(trace, g.labels, fh)
        return [args.trace]
    return []


# ---------------------------------------------------------------------------
# commands


def cmd_curvature(args) -> int:
    inputs = {}
    g = _load_graph(args.graph, inputs)
    cfg = config_from_args(args)
    curv = all_curvatures(g, cfg)
    lab = g.labels
    with _output(args.out) as fh:
        for (u, v, w), k in zip(g.edges, curv.values.tolist()):
            fh.write(f"{lab[u]} {lab[v]} {w!r} {k!r}\n")
    return 0


def cmd_flow(args) -> int:
    inputs = {}
    g = _load_graph(args.graph, inputs)
    cfg = config_from_args(args)
    trace = run_flow(g, cfg)
    log.info("flow stopped after %d iterations (%s)", len(trace), trace.terminal_reason)
    with _output(args.out) as fh:
        write_edge_list(trace.final, fh)
    outputs = ([args.out] if args.out else []) + _write_trace_if_asked(args, trace, g)
    mpath = _manifest_path(args)
    if mpath:
        _write_manifest(mpath, "flow", cfg, inputs, outputs, terminal_reason=trace.terminal_reason,
                        iterations=len(trace))
    return 0


def cmd_detect(args) -> int:
    inputs = {}
    g = _load_graph(args.graph, inputs)
    truth = None
    if args.truth:
        text = _read_text(args.truth)
        inputs[args.truth] = _digest(text)
        truth = Partition.from_mapping(read_labels(text), g)
    cfg = config_from_args(args)
    trace = run_flow(g, cfg)
    log.info("flow stopped after %d iterations (%s)", len(trace), trace.terminal_reason)
    curve = scan_cutoffs(trace.final, truth, g)
    cutoff = select_cutoff(curve, args.plateau_tol)
    part = cut_by_threshold(trace.final, cutoff)
    point = curve.at(cutoff)
    with _output(args.out) as fh:
        write_partition(g, part, fh)
    outputs = [args.out] if args.out else []
    if args.curve:
        with _output(args.curve) as fh:
            write_curve(curve, fh)
        outputs.append(args.curve)
    outputs += _write_trace_if_asked(args, trace, g)
    print(f"communities {part.num_communities}", file=sys.stderr)
    print(f"cutoff {cutoff!r}", file=sys.stderr)
    print(f"modularity {point.modularity:.6f}", file=sys.stderr)
    if truth is not None:
        print(f"ari {point.ari:.6f}", file=sys.stderr)
    mpath = _manifest_path(args)
    if mpath:
        _write_manifest(mpath, "detect", cfg, inputs, outputs, terminal_reason=trace.terminal_reason,
                        iterations=len(trace), cutoff=cutoff, plateau_tol=args.plateau_tol,
                        communities=part.num_communities)
    return 0


def cmd_generate(args) -> int:
    if args.model == "sbm":
        g, truth = gen_sbm(args.n, args.k, args.p_intra, args.p_inter, args.seed)
        params = {"n": args.n, "k": args.k, "p_intra": args.p_intra, "p_inter": args.p_inter}
    else:
        g, truth = gen_gab(args.a, args.b)
        params = {"a": args.a, "b": args.b}
    if args.out:
        edges_path, labels_path = args.out + ".edgelist", args.out + ".labels"
    else:
        edges_path, labels_path = None, args.labels
    with _output(edges_path) as fh:
        write_edge_list(g, fh, weights=False)
    outputs = [edges_path] if edges_path else []
    if labels_path:
        with _output(labels_path) as fh:
            write_partition(g, truth, fh)
        outputs.append(labels_path)
    if args.out:
        _write_manifest(args.out + ".manifest.json", "generate", None, {}, outputs,
                        model=args.model, params=params, seed=args.seed)
    return 0


def cmd_eval(args) -> int:
    inputs = {}
    g = _load_graph(args.graph, inputs)
    found = read_labels(_read_text(args.partition))
    truth = read_labels(_read_text(args.truth))
    nodes = set(g.labels)
    for name, mapping in (("partition", found), ("truth", truth)):
        extra = set(mapping) - nodes
        if extra:
            raise DomainError(f"{name} file names {len(extra)} node(s) not in the graph, e.g. {sorted(extra)[0]!r}")
    p1 = Partition.from_mapping(found, g)
    p2 = Partition.from_mapping(truth, g)
    print(f"ari {ari(p1, p2):.6f}")
    print(f"modularity {modularity(g, p1):.6f}")
    return 0


COMMANDS = {
    "curvature": cmd_curvature,
    "flow": cmd_flow,
    "detect": cmd_detect,
    "generate": cmd_generate,
    "eval": cmd_eval,
}


def main(argv=None, environ=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    environ = os.environ if environ is None else environ
    parser = build_parser()
    try:
        _apply_env_defaults(parser, environ)
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
            _manifest_defaults(args, sub.choices[args.command])
            args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s", stream=sys.stderr)
        return COMMANDS[args.command](args)
    except (RicciError, OSError, json.JSONDecodeError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
