"""Command-line entry point: ``friedlander <subcommand> [options]``.

Every subcommand produces one table. CSV output starts with a ``# config:``
comment holding the parsed flags as sorted JSON (plus ``# meta:`` for
scalar side results), then a header row, then rows with floats written to
17 significant digits. JSON output carries the same config, meta, columns
and rows. ``--from-file REF`` reruns the command and compares the fresh
table against REF instead of printing it.

Exit status: 0 on success, 1 on numerical failures, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, geodesics, spectrum, symbols, trace
from .errors import ConvergenceError, DomainError, FriedlanderError
from .special_fn import AiryZeroTable, zero_table

log = logging.getLogger("friedlander")

# flags that do not influence the numbers and so stay out of the config line
_NON_CONFIG = {"format", "out", "from_file", "verbose", "zeros_cache", "func", "rtol", "atol"}


@dataclass
class Table:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------- formatting

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else format(v, ".17g")
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render(table: Table, config: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "config": _json_value(config),
            "meta": _json_value(table.meta),
            "columns": list(table.columns),
            "rows": [dict(zip(table.columns, (_json_value(v) for v in row))) for row in table.rows],
        }
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_json_value(config), sort_keys=True) + "\n")
    if table.meta:
        buf.write("# meta: " + json.dumps(_json_value(table.meta), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_table(path) -> tuple[dict, Table]:
    """Read back a CSV or JSON file written by this tool."""
    return load_table_text(Path(path).read_text())


def load_table_text(text: str) -> tuple[dict, Table]:
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cols = doc["columns"]
        rows = [[_parse_cell(r[c]) if isinstance(r[c], str) else r[c] for c in cols] for r in doc["rows"]]
        return doc.get("config", {}), Table(cols, rows, doc.get("meta", {}))
    config, meta, body = {}, {}, []
    for line in text.splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif line.startswith("# meta: "):
            meta = json.loads(line[len("# meta: "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    cols = next(reader)
    return config, Table(cols, [[_parse_cell(c) for c in row] for row in reader], meta)


def compare_tables(ref: Table, new: Table, rtol=0.0, atol=0.0) -> dict:
    """Cell-by-cell comparison; numbers within atol + rtol |ref| count as equal."""
    report = {"columns_match": list(ref.columns) == list(new.columns),
              "rows_ref": len(ref.rows), "rows_new": len(new.rows),
              "max_abs_diff": 0.0, "mismatches": 0}
    if not report["columns_match"] or len(ref.rows) != len(new.rows):
        report["match"] = False
        return report
    for ra, rb in zip(ref.rows, new.rows):
        for a, b in zip(ra, _normalise_row(rb)):
            if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
                if math.isnan(a) and math.isnan(b):
                    continue
                d = abs(a - b)
                report["max_abs_diff"] = max(report["max_abs_diff"], d)
                if not d <= atol + rtol * abs(a):
                    report["mismatches"] += 1
            elif a != b:
                report["mismatches"] += 1
    report["match"] = report["mismatches"] == 0
    return report


def _normalise_row(row):
    # round-trip through the CSV cell format so types compare like-for-like
    return [_parse_cell(_cell(v)) for v in row]


# ---------------------------------------------------------------- argument types

def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text):
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers a,b, got {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _sector(text):
    names = {"all": "all", "1": "gamma1", "2": "gamma2", "3": "gamma3"}
    if text in names:
        return names[text]
    if text in trace.SECTORS:
        return text
    raise argparse.ArgumentTypeError(f"sector must be all, 1, 2 or 3, got {text!r}")


_MOLLIFIERS = {"gaussian": "gaussian_freq", "sharp": "sharp_energy",
               "gaussian_freq": "gaussian_freq", "sharp_energy": "sharp_energy"}


def _mollifier(text):
    try:
        return _MOLLIFIERS[text]
    except KeyError:
        raise argparse.ArgumentTypeError("mollifier must be gaussian or sharp") from None


# ---------------------------------------------------------------- zeros

def _zeros(args, count: int) -> AiryZeroTable:
    """Zero table of at least ``count`` entries, via the cache if one was named."""
    path = getattr(args, "zeros_cache", None)
    if path is None:
        return zero_table(count)
    p = Path(path)
    if p.exists():
        table = AiryZeroTable.load_csv(p)
        log.info("loaded %d zeros from %s (residuals re-verified)", len(table), p)
        if len(table) >= count:
            return table
        table = table.extended(count)
    else:
        table = zero_table(count)
    table.save_csv(p)
    log.info("wrote %d zeros to %s", len(table), p)
    return table


# ---------------------------------------------------------------- subcommands

def cmd_airy_zeros(args) -> Table:
    table = _zeros(args, args.count)
    rows = [r for r in table.rows() if r[0] <= args.count]
    return Table(["m", "t_m", "seed", "residual"], rows)


def cmd_spectrum(args) -> Table:
    zeros = _zeros(args, 64)
    pts = spectrum.enumerate_below(args.emax, zeros)
    rows = []
    for p in pts:
        lam_bs = spectrum.bohr_sommerfeld(p.m, p.n).Lambda
        rows.append([p.m, p.n, p.lam, p.sqrt_lambda, lam_bs, p.sqrt_lambda - math.sqrt(lam_bs)])
    return Table(["m", "n", "lambda", "sqrt_lambda", "Lambda", "diff"], rows,
                 {"count": len(rows)})


def cmd_bohr_sommerfeld(args) -> Table:
    c1, c2 = args.sector
    zeros = _zeros(args, args.mmax)
    dev = spectrum.sector_deviation(c1, c2, args.mmax, zeros, m_min=args.mmin)
    rows = [[int(r["m"]), int(r["n_lo"]), int(r["n_hi"]), float(r["max_dev"]), float(r["mean_dev"]),
             int(r["argmax_n"])] for r in dev]
    meta = {"max_dev": float(dev["max_dev"].max()) if dev.size else None}
    return Table(["m", "n_lo", "n_hi", "max_dev", "mean_dev", "argmax_n"], rows, meta)


def cmd_lengths(args) -> Table:
    tab = geodesics.length_spectrum(args.kmax, args.lmax)
    rows = []
    for g in tab.entries:
        r1, r2 = g.residuals()
        rows.append([g.k, g.ell, g.eta0, g.length, r1, r2])
    meta = {}
    for ell in range(1, args.lmax):
        try:
            meta[f"gap_below_{ell}"] = geodesics.gap_below(ell, tab)
        except FriedlanderError:
            break
    return Table(["k", "ell", "eta0", "length", "residual1", "residual2"], rows, meta)


def cmd_geodesic(args) -> Table:
    g = geodesics.closed_geodesic(args.k, args.ell)
    caustic = g.xi0 ** 2 / g.eta0 ** 2
    if args.emit_trajectory:
        t, x, y = geodesics.trajectory_polyline(g, args.samples)
        return Table(["t", "x", "y"], [list(r) for r in zip(t.tolist(), x.tolist(), y.tolist())],
                     {"caustic_height": caustic, "length": g.length})
    arc_t, arc_y, _ = geodesics.follow_arcs(g.eta0, g.k)
    r1, r2 = g.residuals()
    cols = ["k", "ell", "eta0", "xi0", "length", "caustic_height", "stationary_length",
            "arc_time", "arc_dy", "residual1", "residual2"]
    row = [g.k, g.ell, g.eta0, g.xi0, g.length, caustic, geodesics.stationary_length(g.k, g.ell),
           arc_t, arc_y, r1, r2]
    return Table(cols, [row])


def _trace_request(args, t) -> trace.TraceRequest:
    return trace.TraceRequest(t, args.cutoff, args.mollifier, args.sector, phase=args.phase)


def cmd_trace(args) -> Table:
    if args.tmax < args.tmin:
        raise DomainError("need tmin <= tmax")
    h = args.dt if args.dt is not None else math.pi / (4.0 * args.cutoff)
    n = int(math.floor((args.tmax - args.tmin) / h + 1e-9))
    t = args.tmin + h * np.arange(n + 1)
    req = _trace_request(args, t)
    res = trace.windowed_trace(req, _zeros(args, trace.CERTIFIED_ZEROS), engine=args.engine)
    rows = [[a, b.real, b.imag, abs(b)] for a, b in zip(t.tolist(), res.values.tolist())]
    return Table(["t", "re", "im", "abs"], rows,
                 {"lattice_count": res.lattice_count, "cutoff_used": res.cutoff_used})


def cmd_trace_peaks(args) -> Table:
    a, b = args.window
    if b <= a:
        raise DomainError("window needs a < b")
    h = math.pi / (4.0 * args.cutoff) / args.oversample
    t = a + h * np.arange(int(math.floor((b - a) / h)) + 1)
    res = trace.windowed_trace(_trace_request(args, t), _zeros(args, trace.CERTIFIED_ZEROS))
    tol = 2.0 * math.pi / args.cutoff
    table = geodesics.length_spectrum(args.kmax, args.lmax)
    peaks = trace.match_peaks(trace.find_peaks(t, res.values), table, tol)
    rows = [[p.t, p.height, p.k, p.ell, p.offset] for p in peaks]
    return Table(["t_peak", "height", "matched_k", "matched_ell", "offset"], rows,
                 {"tolerance": tol, "all_matched": all(p.k is not None for p in peaks)})


def cmd_trace_asymmetry(args) -> Table:
    rows = trace.smoothness_asymmetry(args.ell, args.delta, args.cutoffs, _zeros(args, trace.CERTIFIED_ZEROS), phase=args.phase)
    return Table(["cutoff", "left", "right", "ratio"], [[r.cutoff, r.left, r.right, r.ratio] for r in rows])


def cmd_symbols(args) -> Table:
    claims = list(args.claim or [])
    expected = {}
    if args.suite or not claims:
        for c in symbols.DEFAULT_CLAIMS:
            expected[c] = "pass"
        for c in symbols.NEGATIVE_CONTROLS:
            expected[c] = "fail"
        claims = list(expected) + [c for c in claims if c not in expected]
    cols = ["claim", "kind", "j", "k", "alpha", "beta", "fitted_constant", "violation_ratio",
            "stable", "passed", "flagged"]
    shells = None
    rows, verdicts = [], {}
    for text in claims:
        claim = symbols.parse_claim(text)
        ests = symbols.run_claim(claim, args.jmax, args.kmax)
        verdicts[text] = symbols.verdict(ests)
        for e in ests:
            keys = sorted(e.shell_constants)
            if shells is None:
                shells = keys
            rows.append([text, e.kind, e.order_j, e.order_k, e.alpha, e.beta, e.fitted_constant,
                         e.max_violation_ratio, e.stable, e.passed, e.flagged]
                        + [e.shell_constants[s] for s in keys])
    cols += [f"c_shell{s}" for s in (shells or [])]
    meta = {"verdicts": verdicts}
    if expected:
        meta["expected"] = {c: expected.get(c) for c in claims}
    return Table(cols, rows, meta)


_POISSON_CASES = {
    "self-dual": ((1.0, 0.0, 1.0), (0.0, 0.0)),
    "shifted": ((1.0, 0.0, 1.0), (0.3, -0.17)),
    "anisotropic": ((2.0, 0.5, 0.75), (0.0, 0.0)),
}


def cmd_poisson(args) -> Table:
    if args.A is not None or args.shift is not None:
        A = args.A or [1.0, 0.0, 1.0]
        if len(A) != 3:
            raise DomainError("--A takes a11,a12,a22")
        cases = {"custom": (tuple(A), tuple(args.shift or (0.0, 0.0)))}
    else:
        cases = _POISSON_CASES
    rows = []
    for name, (A, a) in cases.items():
        M = ((A[0], A[1]), (A[1], A[2]))
        lhs, rhs, gap = trace.poisson_check(M, a)
        rows.append([name, A[0], A[1], A[2], a[0], a[1], lhs, rhs.real, rhs.imag, gap])
    return Table(["case", "a11", "a12", "a22", "shift1", "shift2", "lhs", "rhs_re", "rhs_im", "gap"], rows)


# ---------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
    p.add_argument("--zeros-cache", metavar="PATH", help="CSV cache for the Airy zero table")
    p.add_argument("--from-file", metavar="REF", help="compare against a previous output instead of printing")
    p.add_argument("--rtol", type=float, default=0.0, help="relative tolerance for --from-file")
    p.add_argument("--atol", type=float, default=0.0, help="absolute tolerance for --from-file")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _trace_flags(p, defaults=True):
    p.add_argument("--cutoff", type=float, default=50.0 if defaults else 150.0, help="frequency cutoff Lambda")
    p.add_argument("--sector", type=_sector, default="all", help="all, 1, 2 or 3")
    p.add_argument("--mollifier", type=_mollifier, default="gaussian_freq", help="gaussian or sharp")
    p.add_argument("--phase", choices=tuple(trace.PHASES), default="friedlander")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="friedlander", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("airy-zeros", help="refined zeros t_m of Ai(-t)")
    p.add_argument("--count", type=_positive_int, required=True)
    _common(p)
    p.set_defaults(func=cmd_airy_zeros)

    p = sub.add_parser("spectrum", help="eigenvalues lambda(m, n) <= emax")
    p.add_argument("--emax", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bohr-sommerfeld", help="|sqrt(lambda) - sqrt(Lambda)| on a sector c1 <= n/m <= c2")
    p.add_argument("--sector", type=_pair, default=[0.5, 2.0], metavar="C1,C2")
    p.add_argument("--mmin", type=_positive_int, default=1)
    p.add_argument("--mmax", type=_positive_int, required=True)
    _common(p)
    p.set_defaults(func=cmd_bohr_sommerfeld)

    p = sub.add_parser("lengths", help="length spectrum L_{k,ell}")
    p.add_argument("--kmax", type=_positive_int, required=True)
    p.add_argument("--lmax", type=_positive_int, required=True)
    _common(p)
    p.set_defaults(func=cmd_lengths)

    p = sub.add_parser("geodesic", help="one closed geodesic, optionally as a polyline")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--ell", type=_positive_int, required=True)
    p.add_argument("--emit-trajectory", action="store_true")
    p.add_argument("--samples", type=_positive_int, default=64, help="polyline samples per arc")
    _common(p)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("trace", help="mollified wave trace Z(t) (subcommands: peaks, asymmetry)")
    _trace_flags(p)
    p.add_argument("--tmin", type=float, default=0.5)
    p.add_argument("--tmax", type=float, default=7.0)
    p.add_argument("--dt", type=float, default=None, help="grid step (default pi/(4 cutoff))")
    p.add_argument("--engine", choices=("binned", "direct"), default="binned")
    _common(p)
    p.set_defaults(func=cmd_trace)
    tsub = p.add_subparsers(dest="trace_command", metavar="{peaks,asymmetry}")

    q = tsub.add_parser("peaks", help="local maxima of |Z| matched to the length table")
    _trace_flags(q, defaults=False)
    q.add_argument("--window", type=_pair, default=[5.0, 6.2], metavar="A,B")
    q.add_argument("--oversample", type=_positive_int, default=4)
    q.add_argument("--kmax", type=_positive_int, default=200)
    q.add_argument("--lmax", type=_positive_int, default=6)
    _common(q)
    q.set_defaults(func=cmd_trace_peaks)

    q = tsub.add_parser("asymmetry", help="left/right roughness of Re Z around 2 pi ell")
    q.add_argument("--ell", type=_positive_int, default=1)
    q.add_argument("--delta", type=float, default=0.05)
    q.add_argument("--cutoffs", type=_floats, default=[50.0, 100.0, 200.0], metavar="L1,L2,...")
    q.add_argument("--phase", choices=tuple(trace.PHASES), default="friedlander")
    _common(q)
    q.set_defaults(func=cmd_trace_asymmetry)

    p = sub.add_parser("symbols", help="empirical symbol-class checks of the phase")
    p.add_argument("--claim", action="append", help='e.g. "G:gamma1:2/3,1/3", "F:gamma2:cl:1"')
    p.add_argument("--suite", action="store_true", help="run the default claims and negative controls")
    p.add_argument("--jmax", type=int, default=2, choices=range(0, 5))
    p.add_argument("--kmax", type=int, default=2, choices=range(0, 5))
    _common(p)
    p.set_defaults(func=cmd_symbols)

    p = sub.add_parser("poisson-check", help="Poisson summation for 2D Gaussians")
    p.add_argument("--A", type=_floats, default=None, metavar="A11,A12,A22")
    p.add_argument("--shift", type=_pair, default=None, metavar="A1,A2")
    _common(p)
    p.set_defaults(func=cmd_poisson)
    return parser


def config_of(args) -> dict:
    skip = set(_NON_CONFIG)
    if getattr(args, "trace_command", None):
        skip |= {"tmin", "tmax", "dt", "engine"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    cfg["version"] = __version__
    return cfg


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    config = config_of(args)
    try:
        table = args.func(args)
        text = render(table, config, args.format)
        if args.from_file:
            ref_config, ref = load_table(args.from_file)
            _, new = load_table_text(text)
            report = compare_tables(ref, new, args.rtol, args.atol)
            report["config_match"] = ref_config == json.loads(json.dumps(_json_value(config)))
            _emit(json.dumps(report, sort_keys=True) + "\n", args.out)
            return 0 if report["match"] else 1
        _emit(text, args.out)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for k, v in sorted(getattr(exc, "diagnostics", {}).items()):
            print(f"  {k} = {v}", file=sys.stderr)
        return 1
    except (FriedlanderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_entry():  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
