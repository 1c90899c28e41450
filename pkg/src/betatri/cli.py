"""Command-line interface: ``betatri <command> [options]``.

Exit status: 0 on success, 1 on invalid input (including failed oracle
checks), 2 when a resource cap would be exceeded.

Every command writes a JSON report into the output directory (``--out``, then
the ``BETATRI_OUTPUT_DIR`` environment variable, then ``./betatri-output``)
and prints a short summary on stdout. Wall-clock times and timestamps live in
the report's ``metadata`` field; everything else depends only on the flags,
the input files and the seed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import platform
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import BTILDE_MAX_CLASSES, bound_report
from .errors import DomainError, MuParseError, ResourceCapError
from .experiment import (
    SCHEMA_VERSION,
    ExperimentConfig,
    atomic_write_text,
    dump_json,
    parse_design,
    rate_csv,
    run_experiment,
    samples_csv,
)
from .graph import count_triangles_wedge, edge_list_text
from .model import (
    BlockDesign,
    ModelSpec,
    block_mu,
    diagnose_conditions,
    load_mu,
    parse_mu_text,
    sample_graph,
)
from .moments import VertexClasses, moment_report, wedge_moment_ratio
from .vecnorm import HeterogeneityVector, minmax_ratio

OUTPUT_ENV = "BETATRI_OUTPUT_DIR"
DEFAULT_OUTPUT = "betatri-output"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CAP = 2


class UsageError(DomainError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; 2 is reserved for resource caps
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------------- input


def parse_mu_input(source: str) -> HeterogeneityVector:
    """A mu vector from a file path, a JSON array or a comma-separated list."""
    text = source.strip()
    if os.path.exists(source):
        return load_mu(source)
    if text.startswith("["):
        return parse_mu_text(text, source="--mu")
    if "," in text:
        return parse_mu_text("\n".join(text.split(",")), source="--mu")
    raise MuParseError(f"no such file and not an inline list: {source!r}", source="--mu")


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"--n expects integers, got {text!r}")
    if not sizes:
        raise UsageError("--n is empty")
    return sizes


def _single_size(args) -> Optional[int]:
    if args.n is None:
        return None
    sizes = _parse_sizes(args.n)
    if len(sizes) != 1:
        raise UsageError(f"{args.command} takes a single --n")
    return sizes[0]


def _resolve_vector(args) -> tuple[HeterogeneityVector, Optional[BlockDesign], dict]:
    """The mu vector for single-size commands, the design if any, and an input echo."""
    n = _single_size(args)
    if (args.mu is None) == (args.design is None):
        raise UsageError("give exactly one of --mu or --design")
    if args.design is not None:
        if n is None:
            raise UsageError("--design needs --n")
        design = parse_design(args.design)
        return block_mu(design, n), design, {"design": design.to_dict(), "n": n}
    mu = parse_mu_input(args.mu)
    if n is not None and n != mu.n:
        raise UsageError(f"--n {n} does not match the {mu.n} entries of --mu")
    echo = {"mu_source": args.mu if os.path.exists(args.mu) else "inline", "n": mu.n}
    return mu, None, echo


def _experiment_config(args) -> ExperimentConfig:
    if args.mu is not None and args.design is not None:
        raise UsageError("give at most one of --mu or --design")
    overrides = {
        "n_list": None if args.n is None else _parse_sizes(args.n),
        "replicates": args.replicates,
        "master_seed": args.seed,
        "design": None if args.design is None else parse_design(args.design),
        "use_exact_moments": False if args.asymptotic_moments else None,
        "output": args.out,
    }
    if args.mu is not None:
        if os.path.exists(args.mu):
            overrides["mu_path"] = args.mu
        else:
            overrides["mu"] = parse_mu_input(args.mu)
    if args.config is not None:
        return ExperimentConfig.from_file(args.config, **overrides)
    missing = [flag for flag, key in (("--n", "n_list"), ("--replicates", "replicates"),
                                      ("--seed", "master_seed"))
               if overrides[key] is None]
    if missing:
        raise UsageError(f"missing {', '.join(missing)} (or give --config)")
    if args.mu is None and args.design is None:
        raise UsageError("give --mu or --design (or --config)")
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _output_dir(args, config_output: Optional[str] = None) -> Path:
    out = args.out or config_output or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    path = Path(out)
    if path.exists() and not path.is_dir():
        raise UsageError(f"output path {out!r} exists and is not a directory")
    return path


# ------------------------------------------------------------------ output


def _metadata(args, start: float) -> dict:
    return {
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
        "threads": getattr(args, "threads", 1),
        "package_version": __version__,
        "python": platform.python_version(),
    }


def _document(kind: str, inputs: dict, report: dict, metadata: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "input": inputs,
        "report": report,
        "metadata": metadata,
    }


def _write_all(out_dir: Path, files: dict) -> list[Path]:
    written = []
    for name, text in files.items():
        path = out_dir / name
        atomic_write_text(path, text)
        written.append(path)
    return written


def _emit(lines: Sequence[str]) -> None:
    print("\n".join(lines))


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


# ---------------------------------------------------------------- commands


def cmd_simulate(args, start: float) -> int:
    mu, _design, inputs = _resolve_vector(args)
    out_dir = _output_dir(args)
    seed = args.seed if args.seed is not None else 0
    g = sample_graph(ModelSpec(mu), seed)
    deg = g.degrees()
    report = {
        "n": g.n,
        "seed": seed,
        "edges": g.m_present,
        "triangles": count_triangles_wedge(g),
        "mean_degree": float(np.mean(deg)),
        "max_degree": int(deg.max()) if deg.size else 0,
    }
    inputs["seed"] = seed
    files = {"simulate.json": dump_json(_document("simulate", inputs, report,
                                                  _metadata(args, start)))}
    if args.edges:
        files["simulate_edges.txt"] = edge_list_text(g)
    written = _write_all(out_dir, files)
    _emit([
        f"simulate  n={g.n}  seed={seed}",
        f"  edges        {report['edges']}",
        f"  triangles    {report['triangles']}",
        f"  mean degree  {_fmt(report['mean_degree'])}",
        *[f"wrote {p}" for p in written],
    ])
    return EXIT_OK


def cmd_moments(args, start: float) -> int:
    mu, _design, inputs = _resolve_vector(args)
    out_dir = _output_dir(args)
    rep = moment_report(mu)
    doc = _document("moments", inputs, rep.to_dict(), _metadata(args, start))
    written = _write_all(out_dir, {"moments.json": dump_json(doc)})
    _emit([
        f"moments  n={mu.n}",
        f"  exact mean          {_fmt(rep.exact_mean)}",
        f"  asymptotic mean     {_fmt(rep.asym_mean)}   ratio {_fmt(rep.mean_ratio)}",
        f"  exact variance      {_fmt(rep.exact_var)}",
        f"  asymptotic variance {_fmt(rep.asym_var)}   ratio {_fmt(rep.var_ratio)}",
        *[f"wrote {p}" for p in written],
    ])
    return EXIT_OK


def cmd_bound(args, start: float) -> int:
    mu, design, inputs = _resolve_vector(args)
    out_dir = _output_dir(args)
    rep = bound_report(mu, design, with_btilde=not args.no_btilde)
    doc = _document("bound", inputs, rep.to_dict(), _metadata(args, start))
    written = _write_all(out_dir, {"bound.json": dump_json(doc)})
    lines = [
        f"bound  n={mu.n}",
        "  A_1..A_5     " + "  ".join(_fmt(a) for a in rep.a_terms),
        f"  denominator  {_fmt(rep.denominator)}",
        f"  rate (C=1)   {_fmt(rep.rate_with_unit_constant)}",
    ]
    if rep.eta is not None:
        lines.append(f"  alpha {_fmt(rep.alpha)}  eta {_fmt(rep.eta)}")
    lines += [f"  note: {note}" for note in rep.notes]
    _emit(lines + [f"wrote {p}" for p in written])
    return EXIT_OK


def cmd_diagnose(args, start: float) -> int:
    mu, design, inputs = _resolve_vector(args)
    out_dir = _output_dir(args)
    report = diagnose_conditions(mu).to_dict()
    report["minmax_ratio"] = minmax_ratio(mu)
    vc = VertexClasses(mu)
    report["distinct_values"] = vc.K
    if vc.K <= BTILDE_MAX_CLASSES:
        report["wedge_moment_ratio"] = {
            f"s{s}": wedge_moment_ratio(vc, s) for s in (2, 4)
        }
    else:
        report["wedge_moment_ratio"] = None
    doc = _document("diagnose", inputs, report, _metadata(args, start))
    written = _write_all(out_dir, {"diagnose.json": dump_json(doc)})
    lines = [f"diagnose  n={mu.n}  distinct values={vc.K}"]
    for key in ("mu_max", "l2_norm", "l32_ratio", "ratio_cond", "minmax_ratio"):
        lines.append(f"  {key:<14}{_fmt(report[key])}")
    if report["wedge_moment_ratio"] is not None:
        for key, val in report["wedge_moment_ratio"].items():
            lines.append(f"  wedge ratio {key}  {_fmt(val)}")
    _emit(lines + [f"wrote {p}" for p in written])
    return EXIT_OK


def _run_mc(args, start: float, kind: str) -> int:
    config = _experiment_config(args)
    if kind == "rate" and len(config.n_list) < 3:
        raise UsageError("rate needs at least 3 sizes in --n")
    out_dir = _output_dir(args, config.output)
    # every input problem should surface before the first replicate
    for n in config.n_list:
        config.mu_for(n)
    if args.figures:
        # import now so a broken matplotlib fails before the replicates run
        from .plotting import plot_ecdf, plot_rate

    def progress(size):
        if not args.quiet:
            print(f"  n={size.n:<8} d_K={size.d_k:.4f}  ({size.seconds:.1f} s)", flush=True)

    report = run_experiment(config, threads=args.threads, progress=progress)
    doc = _document(kind, config.to_dict(), report.to_dict(), _metadata(args, start))
    files = {f"{kind}.json": dump_json(doc)}
    if kind == "clt":
        files["clt_samples.csv"] = samples_csv(report)
    else:
        files["rate.csv"] = rate_csv(report)
    written = _write_all(out_dir, files)
    if args.figures:
        ext = args.figure_format
        if kind == "clt":
            written.append(plot_ecdf(report, out_dir / f"clt_ecdf.{ext}"))
        else:
            written.append(plot_rate(report, out_dir / f"rate_loglog.{ext}"))

    lines = [f"{kind}  replicates={config.replicates}  seed={config.master_seed}"]
    for s in report.sizes:
        lines.append(
            f"  n={s.n:<8} d_K={s.d_k:.4f}  mean ratio {_fmt(s.moments.mean_ratio)}"
            f"  LLN {s.lln['mean']:.4f} (sd {s.lln['sd']:.4f})"
        )
    lines.append(f"  noise floor 1/sqrt(R) = {report.noise_floor:.4f}")
    if report.slope is not None:
        lines.append(f"  log-log slope {report.slope:.4f} +/- {report.slope_stderr:.4f}")
    if report.eta is not None:
        lines.append(f"  reference -eta = {-report.eta:.4f}")
    _emit(lines + [f"wrote {p}" for p in written])
    return EXIT_OK


def cmd_clt(args, start: float) -> int:
    return _run_mc(args, start, "clt")


def cmd_rate(args, start: float) -> int:
    return _run_mc(args, start, "rate")


def cmd_oracle_check(args, start: float) -> int:
    from .malliavin import oracle_suite

    out_dir = _output_dir(args)
    report = oracle_suite(args.n, args.trials, args.seed)
    inputs = {"n": args.n, "trials": args.trials, "seed": args.seed}
    doc = _document("oracle_check", inputs, report, _metadata(args, start))
    written = _write_all(out_dir, {"oracle_check.json": dump_json(doc)})
    lines = [
        f"oracle-check  n={args.n}  trials={args.trials}  "
        f"states per trial={report['states_per_trial']}"
    ]
    for name, c in report["checks"].items():
        mark = "PASS" if c["passed"] else "FAIL"
        lines.append(f"  {mark}  {name:<14} max deviation {c['max_deviation']:.3e}"
                     f"  (tol {c['tolerance']:.0e})")
    lines.append("all checks passed" if report["passed"] else "SOME CHECKS FAILED")
    _emit(lines + [f"wrote {p}" for p in written])
    return EXIT_OK if report["passed"] else EXIT_INVALID


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", metavar="DIR",
                        help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")

    source = _Parser(add_help=False)
    source.add_argument("--mu", metavar="SRC",
                        help="mu file (one value per line or a JSON array), or an inline "
                             "list such as '[0.5,0.5,1]' or '0.5,0.5,1'")
    source.add_argument("--design", metavar="SPEC",
                        help="block design, e.g. 'K=2,pi=0.5,0.5,theta=1,2,alpha=0.4'")

    parser = _Parser(prog="betatri", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", parents=[common, source], help="draw one graph")
    p.add_argument("--n", help="vertex count (required with --design)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edges", action="store_true", help="also write the edge list")
    p.set_defaults(func=cmd_simulate)

    for name, func, text in (
        ("moments", cmd_moments, "exact and asymptotic mean and variance of T_n"),
        ("bound", cmd_bound, "Berry-Esseen rate terms (constant set to 1)"),
        ("diagnose", cmd_diagnose, "sparsity and heterogeneity diagnostics"),
    ):
        p = sub.add_parser(name, parents=[common, source], help=text)
        p.add_argument("--n", help="vertex count (required with --design)")
        if name == "bound":
            p.add_argument("--no-btilde", action="store_true",
                           help="skip the B-tilde sums")
        p.set_defaults(func=func)

    for name, func, text in (
        ("clt", cmd_clt, "Monte Carlo check of the normal approximation"),
        ("rate", cmd_rate, "Monte Carlo rate sweep with a log-log fit"),
    ):
        p = sub.add_parser(name, parents=[common, source], help=text)
        p.add_argument("--n", help="comma-separated sizes, e.g. 250,500,1000")
        p.add_argument("--replicates", type=int)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--config", metavar="FILE",
                       help="INI file with an [experiment] section; flags override it")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--asymptotic-moments", action="store_true",
                       help="normalise with the asymptotic mean and variance")
        p.add_argument("--figures", action="store_true",
                       help="also render a figure next to the reports")
        p.add_argument("--figure-format", default="png", choices=("png", "pdf", "svg"))
        p.add_argument("--quiet", action="store_true", help="no per-size progress lines")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="exhaustive state-space checks of the closed forms")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    start = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args, start)
    except ResourceCapError as exc:
        print(f"betatri: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DomainError, OverflowError) as exc:
        print(f"betatri: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"betatri: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
