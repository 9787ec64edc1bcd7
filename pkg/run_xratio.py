import argparse
import json
import logging
import sys
from pathlib import Path

from src import __version__
from src.cohomology_module import CoefficientOverflowError, DegenerateClassError, cohomology_bound
from src.degree_algo import DegreeSizeError, DegreeTimeoutError, cross_ratio_degree
from src.experiment_module import (
    AttemptsExhaustedError,
    TheoremViolationError,
    load_experiment_config,
    run_experiment,
    search_sigma3_zero_degree,
    write_bytes_atomic,
    write_records_csv,
    write_summary_json,
)
from src.histogram_module import render_histogram
from src.hypergraph_module import (
    FORMATS,
    Hypergraph,
    InvalidHypergraphError,
    VertexTriple,
    all_triples,
    format_for_path,
    is_balanced,
    parse_hypergraph,
    serialize_hypergraph,
)
from src.matching_module import (
    ENUMERATION_MAX_SIDE,
    MatrixSizeError,
    bound_gap,
    bregman_minc,
    bregman_minc_floor,
    enumerate_perfect_matchings,
    hall_violator,
    min_matching_bound,
    permanent,
    reduced_matrix,
    surplus,
    uniform_bounds,
)

# ---------------- Configuration ----------------
SCRIPT_DIR = Path(__file__).resolve().parent
OUTPUT_PATH = SCRIPT_DIR / "output"

EXIT_OK = 0
EXIT_DISAGREEMENT = 1
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_BUDGET = 4

SUBCOMMANDS = ("degree", "bound", "surplus", "verify", "experiment", "search")

logger = logging.getLogger("xratio")


class DisagreementError(Exception):
    """Raised when two bound computations disagree"""
    pass


def emit(text: str, output: Path | None):
    """Print to standard output, or write to the output path"""
    if output is None:
        print(text)
    else:
        write_bytes_atomic((text + "\n").encode("utf-8"), output)


def status(text: str, args):
    """Progress line on standard output, or on standard error when stdout carries JSON"""
    print(text, file=sys.stderr if args.json else sys.stdout)


def load_input(args) -> Hypergraph:
    if args.input is None:
        raise InvalidHypergraphError("--input is required for this subcommand")
    if args.input == "-":
        data = sys.stdin.buffer.read()
        fmt = args.format or "json"
    else:
        path = Path(args.input)
        try:
            data = path.read_bytes()
        except FileNotFoundError as e:
            raise InvalidHypergraphError(f"Input file not found: {path}") from e
        fmt = args.format or format_for_path(path)
    h = parse_hypergraph(data, fmt)
    logger.debug("Loaded %s", h)
    return h


def requested_triples(args, h: Hypergraph) -> list[VertexTriple]:
    if args.triple:
        t = VertexTriple.parse(args.triple)
        t.check_range(h.n)
        return [t]
    return list(all_triples(h.n))


# ---------------- Subcommands ----------------

def cmd_degree(args) -> int:
    h = load_input(args)
    d = cross_ratio_degree(h, timeout=args.timeout)
    emit(json.dumps({"degree": d}) if args.json else str(d), args.output)
    return EXIT_OK


def cmd_bound(args) -> int:
    h = load_input(args)
    report = min_matching_bound(h)
    if args.json:
        emit(json.dumps(report.to_dict(), indent=2), args.output)
        return EXIT_OK
    lines = [
        f"min bound:        {report.min_bound}",
        f"argmin triples:   {' '.join('{' + str(t) + '}' for t in report.argmin_triples)}",
        f"surplus:          {report.surplus}",
        f"Bregman-Minc:     {report.bregman_minc_at_argmin:.4f}",
        f"uniform bounds:   24^((n-3)/4) = {report.uniform_bound_24:.4f}, "
        f"2^(n-4) = {report.uniform_bound_pow2}",
    ]
    for t, v in report.per_triple.items():
        lines.append(f"  {{{t}}}: {v}")
    emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_surplus(args) -> int:
    h = load_input(args)
    sigma = surplus(h)
    violator = hall_violator(h)
    result = {"surplus": sigma, "hall_criterion": sigma == 3}
    if violator is not None:
        subset, t = violator
        result["violating_edges"] = [list(h.edges[i]) for i in subset]
        result["killing_triple"] = list(t.labels)
    if args.json:
        emit(json.dumps(result), args.output)
    else:
        lines = [f"surplus: {sigma}", f"hall criterion (surplus = 3): {sigma == 3}"]
        if violator is not None:
            lines.append(f"violating edges: {result['violating_edges']}; "
                         f"deleting {{{violator[1]}}} leaves no perfect matching")
        emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Compute the bound three ways per triple and fail on any disagreement"""
    h = load_input(args)
    if not is_balanced(h):
        raise MatrixSizeError(f"verify needs a balanced hypergraph; got {h.num_edges} edges on {h.n} vertices")

    rows = []
    disagreements = []
    for t in requested_triples(args, h):
        matrix = reduced_matrix(h, t)
        perm = permanent(matrix)
        try:
            coh = cohomology_bound(h, t)
        except DegenerateClassError:
            # an isolated vertex outside t leaves an empty column
            coh = None
        enum = len(enumerate_perfect_matchings(matrix)) if h.num_edges <= ENUMERATION_MAX_SIDE else None
        bm = bregman_minc(h, t)
        agree = ((perm == coh if coh is not None else perm == 0)
                 and (enum is None or enum == perm) and perm <= bregman_minc_floor(bm))
        if not agree:
            disagreements.append(str(t))
        rows.append({"triple": list(t.labels), "permanent": perm, "cohomology": coh,
                     "enumeration": enum, "bregman_minc": bm, "agree": agree})

    degree = cross_ratio_degree(h, timeout=args.timeout)
    sigma = surplus(h)
    reference = min(r["permanent"] for r in rows)
    u24, pow2 = uniform_bounds(h.n)
    flag = bound_gap(degree, reference)
    if degree > reference:
        disagreements.append("degree exceeds bound")

    if args.json:
        emit(json.dumps({
            "triples": rows, "degree": degree, "min_bound": reference, "surplus": sigma,
            "uniform_bound_24": u24, "uniform_bound_pow2": pow2, "flag": flag,
            "disagreements": disagreements, "version": __version__,
        }, indent=2), args.output)
    else:
        lines = ["triple        permanent  cohomology  enumeration  bregman-minc"]
        for r in rows:
            mark = "✓" if r["agree"] else "✗"
            enum = "-" if r["enumeration"] is None else r["enumeration"]
            coh = "-" if r["cohomology"] is None else r["cohomology"]
            lines.append(f"{mark} {{{','.join(map(str, r['triple']))}}}".ljust(14)
                         + f"{r['permanent']:>9}  {coh:>10}  {enum:>11}  {r['bregman_minc']:>12.4f}")
        lines += [
            f"degree:         {degree}",
            f"min bound:      {reference}",
            f"surplus:        {sigma}",
            f"uniform bounds: {u24:.4f}, {pow2}",
            flag,
        ]
        emit("\n".join(lines), args.output)

    if disagreements:
        raise DisagreementError(f"Bound computations disagree on: {', '.join(disagreements)}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_experiment_config(
        n=args.n, samples=args.samples, seed=args.seed, timeout=args.timeout,
        filter=args.filter, max_attempts=args.max_attempts, parallelism=args.workers,
        histogram=args.histogram, timings=False if args.no_timings else None,
    )
    csv_path = Path(args.output) if args.output else OUTPUT_PATH / f"experiment_n{cfg.n}_seed{cfg.seed}.csv"
    summary_path = csv_path.with_suffix(".summary.json")

    exit_code = EXIT_OK
    try:
        records, summary = run_experiment(cfg)
    except AttemptsExhaustedError as e:
        print(f"✗ {e}", file=sys.stderr)
        records, summary = e.records, e.summary
        exit_code = EXIT_BUDGET

    write_records_csv(records, csv_path)
    write_summary_json(summary, summary_path)
    status(f"✓ Records saved to: {csv_path}", args)
    status(f"✓ Summary saved to: {summary_path}", args)

    if cfg.histogram and summary.accepted:
        rendered = render_histogram(summary, cfg.histogram)
        suffix = {"text": ".histogram.txt", "svg": ".svg", "png": ".png"}[cfg.histogram]
        histogram_path = csv_path.with_suffix(suffix)
        write_bytes_atomic(rendered, histogram_path)
        status(f"✓ Histogram saved to: {histogram_path}", args)
        if cfg.histogram == "text" and not args.json:
            print(rendered.decode("utf-8"), end="")

    print(json.dumps(summary.to_dict(), indent=2) if args.json else
          f"accepted={summary.accepted} tight_fraction={summary.tight_fraction:.3f} "
          f"mean_degree={summary.mean_degree:.3f} skipped={summary.skipped} "
          f"wall_time={summary.wall_time:.1f}s")
    return exit_code


def cmd_search(args) -> int:
    cfg = load_experiment_config(n=args.n, samples=args.samples, seed=args.seed, timeout=args.timeout)
    found = search_sigma3_zero_degree(cfg.n, cfg.samples, cfg.seed, timeout=cfg.timeout)
    if args.json:
        print(json.dumps([c.to_dict() for c in found], indent=2))
    elif not found:
        print("no counterexamples found")
    else:
        for c in found:
            print(f"COUNTEREXAMPLE counter={c.counter} seed={c.instance_seed}: "
                  f"{serialize_hypergraph(c.hypergraph).decode()}")

    if found:
        path = Path(args.output) if args.output else OUTPUT_PATH / f"counterexamples_n{cfg.n}_seed{cfg.seed}.json"
        write_bytes_atomic(json.dumps([c.to_dict() for c in found], indent=2).encode("utf-8"), path)
        status(f"✓ Counterexamples saved to: {path}", args)
    return EXIT_OK


COMMANDS = {
    "degree": cmd_degree,
    "bound": cmd_bound,
    "surplus": cmd_surplus,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
    "search": cmd_search,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="hypergraph file, or - for standard input")
    common.add_argument("--format", choices=FORMATS, help="input format (default: from suffix)")
    common.add_argument("--triple", help="restrict to one triple a,b,c")
    common.add_argument("--n", type=int, help="vertex count for experiment/search")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--timeout", type=float, help="per-instance degree budget in seconds")
    common.add_argument("--histogram", choices=("text", "svg", "png"))
    common.add_argument("--filter", choices=("bound_positive", "none"))
    common.add_argument("--max-attempts", type=int)
    common.add_argument("--workers", type=int, help="worker processes (overrides XRATIO_THREADS)")
    common.add_argument("--no-timings", action="store_true", help="write zero timings for byte-stable CSVs")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--output", "-o", help="output path (default: standard output)")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(
        prog="xratio",
        description="Cross-ratio degrees and matching bounds of 4-uniform hypergraphs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.output and args.subcommand not in ("experiment", "search"):
        args.output = Path(args.output)

    try:
        return COMMANDS[args.subcommand](args)
    except (DisagreementError, TheoremViolationError, AssertionError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_DISAGREEMENT
    except (InvalidHypergraphError, MatrixSizeError, DegreeSizeError, DegenerateClassError, ValueError) as e:
        print(f"✗ Input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (DegreeTimeoutError, CoefficientOverflowError) as e:
        # before OSError: TimeoutError is one of its subclasses
        print(f"✗ Budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"✗ I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
