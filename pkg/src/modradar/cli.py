"""Command-line entry point.

Settings come from flags, then a flat ``key = value`` config file given with
``--config``, then built-in defaults. Data files never contain timestamps;
run metadata goes to a ``manifest.txt`` sidecar.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ModradarError, UsageError
from .harness import (
    SweepSpec,
    robustness_experiment,
    run_sweep,
    sweep_fits,
    write_fit_csv,
    write_robustness_csv,
    write_sweep_csv,
)
from .immune import OrganismParams, compare_policies, policy_fits, write_policy_csv
from .overlay import OverlayConfig, build_overlay, dump_topology
from .routing import Query, draw_queries, flood_local, route_global
from .sizing import (
    TotalTimeModel,
    balance_cluster_size,
    minimize_cluster_size,
    model_total_time,
    parse_policy,
)

log = logging.getLogger("modradar")

OUTPUT_ENV = "MODRADAR_OUTPUT_DIR"
MANIFEST_HEADER = "# modradar-manifest v1"


def _int_list(text):
    return [int(float(t)) for t in str(text).split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _policies(text):
    return [parse_policy(t) for t in str(text).split(";") if t.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


# dest: (converter, default, help)
OPTIONS = {
    "n": (lambda s: int(float(s)), 1024, "requested number of nodes"),
    "policy": (_policies, "baseline:c=16,l=1", "sizing policy; separate several with ';'"),
    "r": (float, 2.0, "long-link decay exponent (1 = literal 1/d, cluster_dim = navigable)"),
    "seed": (int, 0, "master seed"),
    "cluster_dim": (int, 2, "dimension of the cluster torus"),
    "intra_dim": (int, 2, "dimension of the intra-cluster grid"),
    "grid": (_int_list, "256,1024,4096", "comma-separated node counts"),
    "queries": (int, 1000, "queries per trial"),
    "trials": (int, 5, "independent trials per point"),
    "a1": (float, 1.0, "weight of flooding rounds"),
    "a2": (float, 1.0, "weight of global hops"),
    "p": (float, None, "node failure probability"),
    "p_grid": (_float_list, "0,0.05,0.1,0.2,0.3", "comma-separated failure probabilities"),
    "redundancy": (_bool, None, "count any live node in the target cluster as success"),
    "source": (int, None, "source node id"),
    "target": (int, None, "target node id"),
    "m_min": (float, 1e-2, "smallest organism mass"),
    "m_max": (float, 1e4, "largest organism mass"),
    "points": (int, 50, "number of log-spaced masses"),
    "v0": (float, 1.0, "lymph node volume of the fixed-V policy"),
    "n0": (float, 1.0, "lymph node count of the fixed-N policy"),
    "k": (float, 1.0, "total lymph node volume per unit mass"),
    "b": (float, 1.0, "migration-time coefficient"),
    "out": (str, None, "output path (file for build, directory otherwise)"),
    "threads": (int, 1, "worker processes; output does not depend on it"),
}

COMMANDS = {
    "build": (
        "emit a topology dump",
        ["n", "policy", "r", "seed", "cluster_dim", "intra_dim", "out"],
        "modradar build --n 64 --policy explicit:c=4,l=1 --seed 7",
    ),
    "route": (
        "trace a single query",
        ["n", "policy", "r", "seed", "cluster_dim", "intra_dim", "source", "target", "a1", "a2", "p"],
        "modradar route --n 4096 --policy baseline:c=16,l=1 --source 0 --target 4000",
    ),
    "sweep": (
        "run a scaling sweep and fit hop growth",
        ["grid", "policy", "r", "queries", "trials", "seed", "a1", "a2", "p", "redundancy",
         "cluster_dim", "intra_dim", "out", "threads"],
        "modradar sweep --grid 256,1024 --policy baseline:c=16,l=1 --queries 100 --seed 0",
    ),
    "optimize": (
        "optimal and balance-rule cluster sizes",
        ["n", "a1", "a2"],
        "modradar optimize --n 1000000 --a1 1 --a2 1",
    ),
    "immune": (
        "compare lymph-node architecture policies",
        ["m_min", "m_max", "points", "v0", "n0", "k", "b", "out"],
        "modradar immune --m-min 0.01 --m-max 10000 --points 50",
    ),
    "robustness": (
        "success rate under node failures",
        ["n", "policy", "p_grid", "queries", "trials", "seed", "r", "redundancy", "out", "threads"],
        "modradar robustness --n 4096 --policy 'radar;explicit:c=4,l=1' --p-grid 0,0.1",
    ),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="modradar",
        description="Clustered small-world overlay and lymph-node scaling laboratory.",
        epilog="example: modradar optimize --n 1000000",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (summary, opts, example) in COMMANDS.items():
        sp = sub.add_parser(
            name, help=summary, description=summary, epilog=f"example: {example}",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sp.add_argument("--config", help="flat key=value settings file")
        sp.add_argument("-v", "--verbose", action="count", default=0)
        for dest in opts:
            _, default, help_text = OPTIONS[dest]
            flag = "--" + dest.replace("_", "-")
            if dest == "redundancy":
                sp.add_argument(flag, dest=dest, action=argparse.BooleanOptionalAction,
                                default=None, help=help_text)
            elif dest == "policy":
                sp.add_argument(flag, dest=dest, action="append", default=None,
                                help=help_text + f" (default {default})")
            else:
                sp.add_argument(flag, dest=dest, default=None,
                                help=help_text + (f" (default {default})" if default is not None else ""))
    return parser


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_settings(command: str, ns: argparse.Namespace) -> tuple[dict, dict]:
    """Merge flag > config file > default, converting and validating each value."""
    opts = COMMANDS[command][1]
    file_values = read_config(ns.config) if ns.config else {}
    unknown = set(file_values) - set(opts)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
    settings, sources = {}, {}
    for dest in opts:
        convert, default, _ = OPTIONS[dest]
        flag_value = getattr(ns, dest)
        if dest == "policy" and flag_value is not None:
            flag_value = ";".join(flag_value)
        if flag_value is not None:
            raw, sources[dest] = flag_value, "flag"
        elif dest in file_values:
            raw, sources[dest] = file_values[dest], "file"
        else:
            raw, sources[dest] = default, "default"
        if raw is None:
            settings[dest] = None
            continue
        try:
            settings[dest] = convert(raw)
        except UsageError:
            raise
        except (TypeError, ValueError):
            raise UsageError(f"invalid value for --{dest.replace('_', '-')}: {raw!r}") from None
    _validate(settings)
    return settings, sources


def _validate(s):
    for key in ("n", "queries", "trials", "points", "threads", "cluster_dim", "intra_dim"):
        if key in s and s[key] is not None and s[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be >= 1")
    if "r" in s and not (s["r"] >= 0 and math.isfinite(s["r"])):
        raise UsageError("--r must be finite and >= 0")
    for key in ("a1", "a2"):
        if key in s and not (s[key] >= 0 and math.isfinite(s[key])):
            raise UsageError(f"--{key} must be finite and >= 0")
    if s.get("p") is not None and not 0 <= s["p"] <= 1:
        raise UsageError("--p must be in [0, 1]")
    if any(not 0 <= p <= 1 for p in s.get("p_grid") or []):
        raise UsageError("--p-grid values must be in [0, 1]")
    grid = s.get("grid")
    if grid is not None and (not grid or any(b <= a for a, b in zip(grid, grid[1:]))):
        raise UsageError("--grid must be a non-empty strictly increasing list")
    if "policy" in s and not s["policy"]:
        raise UsageError("--policy must name at least one policy")
    if s.get("seed") is not None and not 0 <= s["seed"] < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if "m_min" in s and not 0 < s["m_min"] < s["m_max"]:
        raise UsageError("need 0 < --m-min < --m-max")
    for key in ("v0", "n0", "k", "b"):
        if key in s and not s[key] > 0:
            raise UsageError(f"--{key} must be positive")


def _out_dir(settings) -> Path:
    out = settings.get("out") or os.environ.get(OUTPUT_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(directory: Path, command: str, argv, settings, sources) -> Path:
    path = directory / "manifest.txt"
    lines = [
        MANIFEST_HEADER,
        f"version = {__version__}",
        f"command = {command}",
        f"argv = {' '.join(argv)}",
        f"time = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
    ]
    for key in sorted(settings):
        value = settings[key]
        if key == "policy":
            value = ";".join(map(str, value))
        elif isinstance(value, list):
            value = ",".join(map(str, value))
        lines.append(f"{key} = {value}    # {sources[key]}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _overlay_config(s, policy=None) -> OverlayConfig:
    return OverlayConfig(
        requested_n=s["n"],
        policy=policy or s["policy"][0],
        r=s["r"],
        cluster_dim=s["cluster_dim"],
        intra_dim=s["intra_dim"],
        seed=s["seed"],
    )


def cmd_build(s, argv, sources):
    net = build_overlay(_overlay_config(s))
    if s["out"]:
        with open(s["out"], "w") as fh:
            dump_topology(net, fh)
    else:
        dump_topology(net, sys.stdout)


def cmd_route(s, argv, sources):
    from .routing import FailureMask

    net = build_overlay(_overlay_config(s))
    mask = FailureMask(s["p"], s["seed"]) if s["p"] is not None else None
    alive = mask.alive(net.actual_n) if mask else None
    src, dst = s["source"], s["target"]
    if src is None or dst is None:
        q = draw_queries(net, 1, s["seed"], alive)[0]
        src = q.source if src is None else src
        dst = q.target if dst is None else dst
    for node in (src, dst):
        if not 0 <= node < net.actual_n:
            raise UsageError(f"node {node} outside [0, {net.actual_n})")
    trace = []
    entry, hops, ok = route_global(net, Query(src, dst), mask, trace)
    print(f"network: actual_n={net.actual_n} clusters={net.cluster_count} c={net.cluster_size} l={net.links_per_node}")
    for i, node in enumerate(trace):
        cl, intra = net.locate(node)
        print(f"hop {i}: node {node} cluster {cl.axes} intra {intra.axes}")
    rounds = messages = 0
    if ok:
        rounds, messages, ok = flood_local(net, entry, dst, mask)
    model = TotalTimeModel(s["a1"], s["a2"])
    print(f"global_hops={hops} local_rounds={rounds} local_messages={messages} "
          f"success={ok} total_time={model.total(rounds, hops):.9g}")


def cmd_sweep(s, argv, sources):
    spec = SweepSpec(
        grid=tuple(s["grid"]),
        policies=tuple(s["policy"]),
        r=s["r"],
        queries=s["queries"],
        trials=s["trials"],
        seed=s["seed"],
        model=TotalTimeModel(s["a1"], s["a2"]),
        failure_p=s["p"],
        redundancy=bool(s["redundancy"]),
        cluster_dim=s["cluster_dim"],
        intra_dim=s["intra_dim"],
    )
    rows = run_sweep(spec, workers=s["threads"])
    out = _out_dir(s)
    with open(out / "sweep.csv", "w") as fh:
        write_sweep_csv(rows, fh)
    with open(out / "fits.csv", "w") as fh:
        write_fit_csv(sweep_fits(rows), fh)
    write_manifest(out, "sweep", argv, s, sources)
    print(f"wrote {out / 'sweep.csv'} and {out / 'fits.csv'}")


def cmd_optimize(s, argv, sources):
    n = s["n"]
    model = TotalTimeModel(s["a1"], s["a2"])
    c_star, t_star = minimize_cluster_size(n, model)
    print(f"n = {n}  a1 = {model.a1:g}  a2 = {model.a2:g}  (natural log)")
    print(f"c* = {c_star}  T(c*) = {t_star:.6f}")
    if model.a1 > 0:
        stationary = (2 * model.a2 / model.a1) ** 2
        print(f"stationary point (2*a2/a1)^2 = {stationary:.6f}")
    if n >= 2 and model.a1 > 0:
        c_bal = balance_cluster_size(n, model)
        line = f"balance c = {c_bal:.2f}"
        if c_bal <= n:
            line += f"  T(balance c) = {model_total_time(n, max(c_bal, 1.0), model):.6f}"
        print(line)
        # base-2 view: hops are compared against log2 predictions
        c_bal2 = (model.a2 * math.log2(n) / model.a1) ** 2
        print(f"balance c (log2) = {c_bal2:.2f}")


def cmd_immune(s, argv, sources):
    import numpy as np

    base = OrganismParams(k=s["k"], b=s["b"])
    masses = np.geomspace(s["m_min"], s["m_max"], s["points"])
    rows = compare_policies(masses, base, V0=s["v0"], N0=s["n0"])
    fits = policy_fits(rows)
    # largest decade, widened to at least four masses for the fit
    top = policy_fits(rows, min_mass=min(s["m_max"] / 10, float(masses[-4])))
    out = _out_dir(s)
    with open(out / "immune.csv", "w") as fh:
        write_policy_csv(rows, fh)
    with open(out / "immune_fits.csv", "w") as fh:
        fh.write("# modradar-immune-fits v1\n")
        fh.write("policy,range,slope,intercept,r2\n")
        for label, table in (("full", fits), ("top-decade", top)):
            for policy, fit in table.items():
                fh.write(f"{policy},{label},{fit.slope:.9g},{math.log(fit.coefficients['a']):.9g},{fit.r2:.9g}\n")
    write_manifest(out, "immune", argv, s, sources)
    for policy, fit in fits.items():
        print(f"{policy:8s} slope(full) = {fit.slope:.6f}  slope(top decade) = {top[policy].slope:.6f}")


def cmd_robustness(s, argv, sources):
    rows = robustness_experiment(
        s["n"],
        s["policy"],
        s["p_grid"],
        queries=s["queries"],
        seed=s["seed"],
        redundancy=True if s["redundancy"] is None else s["redundancy"],
        trials=s["trials"],
        r=s["r"],
        workers=s["threads"],
    )
    out = _out_dir(s)
    with open(out / "robustness.csv", "w") as fh:
        write_robustness_csv(rows, fh)
    write_manifest(out, "robustness", argv, s, sources)
    for row in rows:
        print(f"p={row.p:<6g} {row.policy:32s} success={row.success_rate:.4f}")


HANDLERS = {
    "build": cmd_build,
    "route": cmd_route,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "immune": cmd_immune,
    "robustness": cmd_robustness,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if not argv:
            parser.print_usage(sys.stderr)
            print("modradar: error: a subcommand is required", file=sys.stderr)
            return 1
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.WARNING - 10 * ns.verbose, format="%(levelname)s %(message)s")
        settings, sources = resolve_settings(ns.command, ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        HANDLERS[ns.command](settings, argv, sources)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ModradarError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
