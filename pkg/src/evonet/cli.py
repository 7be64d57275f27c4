"""Command line entry point.

Subcommands: run a single evolution, run a sweep, serve the control
service, or inspect a saved network file.  Exit codes: 0 success, 1 usage
or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics
from .engine import ConfigError, Evolution, GaConfig
from .experiment import (
    SweepSpec,
    SweepVariable,
    emit_tables,
    render_trace_csv,
    run_sweep,
    table1_spec,
    table2_spec,
)
from .model import dumps_network, loads_network

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class CliError(Exception):
    """Bad flags, bad config, unreadable input: anything that is the
    caller's fault rather than ours."""


class Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1
    def error(self, message):
        raise CliError(message)


def probability(text: str) -> float:
    """Accept '1%' and '0.01' alike; stored as a decimal."""
    t = text.strip()
    try:
        if t.endswith("%"):
            return float(t[:-1]) / 100.0
        return float(t)
    except ValueError:
        raise ValueError(f"not a probability: {text!r}")


def grid_size(text: str) -> tuple[int, int]:
    w, sep, h = text.lower().partition("x")
    if not sep:
        raise ValueError(f"expected WIDTHxHEIGHT, got {text!r}")
    return int(w), int(h)


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("evolution config")
    g.add_argument("--config", metavar="FILE", help="JSON config file; flags override its values")
    g.add_argument("--seed", type=int)
    g.add_argument("--generations", type=int)
    g.add_argument("--q", type=int, help="parent count; population becomes (q^2-q)/2+q")
    g.add_argument("--link-failure-prob", type=probability, metavar="P")
    g.add_argument("--link-repair-prob", type=probability, metavar="P")
    g.add_argument("--n-clients", type=int)
    g.add_argument("--n-servers", type=int)
    g.add_argument("--t-max", type=float)
    g.add_argument("--t-s", type=float)
    g.add_argument("--grid", type=grid_size, metavar="WxH")
    g.add_argument("--min-spacing", type=float)


FLAG_FIELDS = (
    "seed",
    "generations",
    "q",
    "link_failure_prob",
    "link_repair_prob",
    "n_clients",
    "n_servers",
    "t_max",
    "t_s",
    "min_spacing",
)


def build_config(args: argparse.Namespace) -> GaConfig:
    doc: dict = {}
    if args.config:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise CliError(f"cannot read config file {path}: {exc.strerror or exc}")
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise CliError(f"config file {path} must hold a JSON object")
    for field in FLAG_FIELDS:
        value = getattr(args, field)
        if value is not None:
            doc[field] = value
    if getattr(args, "grid", None) is not None:
        doc["grid_width"], doc["grid_height"] = args.grid
    try:
        cfg = GaConfig.from_doc(doc)
        cfg.check()
    except ConfigError as exc:
        details = "; ".join(f"{k}: {v}" for k, v in sorted(exc.errors.items()))
        raise CliError(f"invalid config: {details}")
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    evo = Evolution(cfg)
    evo.run_to_end()

    trace_path = out_dir / "trace.csv"
    trace_path.write_text(render_trace_csv(evo.records, cfg))

    elite = evo.elite()
    network_path = out_dir / "network.json"
    network_path.write_text(dumps_network(elite.network, extra={"config": cfg.to_doc()}))

    converged = [r.generation for r in evo.records if r.converged]
    tail = f"converged at generation {converged[0]}" if converged else "did not converge"
    print(
        f"{len(evo.records)} generations, best fitness {elite.scores.fitness:.6g}, {tail}"
    )
    print(f"wrote {trace_path} and {network_path}")
    return EXIT_OK


def parse_sweep_values(variable: SweepVariable, text: str) -> tuple:
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise CliError("--values must list at least one value")
    if variable is SweepVariable.POPULATION_SIZE_Q:
        return tuple(int(p) for p in parts)
    return tuple(probability(p) for p in parts)


def cmd_sweep(args: argparse.Namespace) -> int:
    base = build_config(args)
    if args.table == "table1":
        spec = table1_spec(base)
    elif args.table == "table2":
        spec = table2_spec(base)
    else:
        if not args.variable or not args.values:
            raise CliError("custom sweeps need --variable and --values")
        variable = SweepVariable(args.variable.replace("-", "_"))
        values = parse_sweep_values(variable, args.values)
        spec = SweepSpec(
            variable=variable,
            values=values,
            runs_per_value=args.runs_per_value,
            base_config=base,
        )
    out_dir = Path(args.out_dir)
    result = run_sweep(spec, out_dir=out_dir)
    print(emit_tables(result, "csv"), end="")
    print(f"wrote summary and traces under {out_dir}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    path = Path(args.network_file)
    try:
        net = loads_network(path.read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}")
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"{path} is not a network file: {exc}")

    working = sum(1 for e in net.edges if e.working)
    print(f"nodes: {len(net.nodes)} ({len(net.clients)} clients, {len(net.servers)} servers)")
    print(f"edges: {len(net.edges)} ({working} working)")

    dist = metrics.working_distances(net)
    p = metrics.cost(net, dist)
    r = metrics.reliability(dist)
    fields: list[tuple[str, object]] = [
        ("cost", p),
        ("reliability", r),
        ("fitness", r / p if p > 0 else 0.0),
    ]
    for name, fn in (
        ("utilization", lambda: metrics.utilization(net, dist)),
        ("redundancy", lambda: metrics.redundancy(net)),
        ("pleiotropy", lambda: metrics.pleiotropy(net)),
    ):
        try:
            fields.append((name, fn()))
        except ValueError as exc:
            fields.append((name, f"n/a ({exc})"))
    for name, value in fields:
        print(f"{name}: {value}")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="evonet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one evolution and write trace + final network")
    add_config_flags(p_run)
    p_run.add_argument("--out-dir", default="evonet-out")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep and write summary tables")
    p_sweep.add_argument("table", choices=("table1", "table2", "custom"))
    add_config_flags(p_sweep)
    p_sweep.add_argument("--out-dir", default="evonet-out")
    p_sweep.add_argument("--variable", choices=("link-failure-prob", "q"))
    p_sweep.add_argument("--values", help="comma separated sweep values")
    p_sweep.add_argument("--runs-per-value", type=int, default=5)
    p_sweep.set_defaults(func=cmd_sweep)

    p_serve = sub.add_parser("serve", help="host the HTTP control service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve)

    p_inspect = sub.add_parser("inspect", help="print the metrics of a saved network file")
    p_inspect.add_argument("network_file")
    p_inspect.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"evonet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("evonet: interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last resort, keep diagnostics one line
        print(f"evonet: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
