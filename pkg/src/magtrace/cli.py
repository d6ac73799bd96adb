"""Command-line driver.

Exit codes: 0 success, 2 usage or parse error, 3 completeness or tolerance
failure, 4 numerical failure.

Settings are resolved as command-line flags, then a flat ``key = value``
config file (``--config``), then built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import DATA_ENV, __version__, data_path
from .errors import (
    DataFormatError,
    DomainError,
    EnumerationError,
    IntegrationError,
    MagtraceError,
    SpectrumWindowError,
)

EXIT_OK, EXIT_USAGE, EXIT_INCOMPLETE, EXIT_NUMERIC = 0, 2, 3, 4
GROUP_SUFFIX, LAPLACE_SUFFIX = ".group", "_laplace.txt"


class UsageError(Exception):
    pass


# formatting -------------------------------------------------------------------

def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _to_json(obj, indent=0) -> str:
    """Deterministic JSON: keys in insertion order, floats at 17 significant
    digits, non-finite floats as strings."""
    pad, pad1 = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt_float(v) if math.isfinite(v) else json.dumps(repr(v))
    if isinstance(obj, complex):
        return _to_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad1}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad1 + _to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return json.dumps(str(obj))


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# config -----------------------------------------------------------------------

def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys are
    read as underscores."""
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


def _apply_config(args, sub: argparse.ArgumentParser, cfg: dict, given: set) -> None:
    actions = {a.dest: a for a in sub._actions}
    for key, raw in cfg.items():
        if key == "command":
            continue
        if key not in actions:
            raise UsageError(f"unknown config key {key!r} for command {args.command!r}")
        if key in given:
            continue
        act = actions[key]
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            val = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                val = act.type(raw)
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {key}: {raw!r}") from None
        else:
            val = raw
        setattr(args, key, val)


# test functions -----------------------------------------------------------------

def parse_phi(spec: str):
    """``gaussian:sigma=1`` or ``bump:center=5.5,half_width=0.5,symmetric=true``."""
    from .testfn import bump_hat_pair, gaussian_pair

    kind, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise UsageError(f"bad test-function parameter {item!r}")
        params[k.strip()] = v.strip()
    try:
        if kind == "gaussian":
            sigma = float(params.pop("sigma", 1.0))
            if params:
                _extra(params)
            return gaussian_pair(sigma)
        if kind in ("bump", "twobump"):
            c = float(params.pop("center"))
            w = float(params.pop("half_width"))
            sym = params.pop("symmetric", "true" if kind == "twobump" else "false")
            if params:
                _extra(params)
            return bump_hat_pair(c, w, symmetric=sym.lower() in ("1", "true", "yes"))
    except KeyError as exc:
        raise UsageError(f"test function {kind!r} needs parameter {exc.args[0]}") from None
    except ValueError as exc:
        raise UsageError(f"bad test-function spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown test-function kind {kind!r}")


def _extra(params):
    raise UsageError(f"unexpected test-function parameters {sorted(params)}")


def parse_n_range(text: str) -> list:
    """``40``, ``20:200`` or ``20:200:10`` (inclusive)."""
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise UsageError(f"bad N range {text!r}") from None
    if len(parts) == 1:
        out = parts
    elif len(parts) in (2, 3):
        step = parts[2] if len(parts) == 3 else 1
        if step <= 0:
            raise UsageError("N step must be positive")
        out = list(range(parts[0], parts[1] + 1, step))
    else:
        raise UsageError(f"bad N range {text!r}")
    if not out or min(out) < 1:
        raise UsageError("N values must be positive integers")
    return out


def _resolve_data(name, suffix):
    """A path, or the bare name of a file in the data directory."""
    p = Path(name)
    if p.exists():
        return p
    if p.parent == Path("."):
        for cand in (name, f"{name}{suffix}"):
            q = data_path(cand)
            if q.exists():
                return q
    return p


# commands -----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .flow import FlowParams, PhaseState, conserved_quantities, integrate_flow

    for key in ("E", "T"):
        if getattr(args, key) is None:
            raise UsageError(f"simulate requires --{key}")
    p = FlowParams(args.B, args.E)
    reg = p.regime
    if reg.near_critical:
        _warn("near-critical energy, expect slow asymptotics")
    s0 = PhaseState(args.x0, args.y0, args.theta0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = integrate_flow(s0, p, args.T, tol=args.tol, coords=args.coords,
                              n_samples=args.samples)
    _emit(traj.to_csv(), args.out)
    d = conserved_quantities(traj)
    summary = {"regime": reg.regime, "near_critical": reg.near_critical, "E": args.E, "B": args.B,
               "T": args.T, "tol": args.tol, "coords": args.coords, "seed": args.seed,
               "energy_drift": d.energy_drift, "c_drift": d.c_drift,
               "nfev": traj.diagnostics["nfev"]}
    text = _to_json(summary) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_classes(args) -> int:
    from .fuchsian import enumerate_classes, load_group

    G = load_group(_resolve_data(args.group, GROUP_SUFFIX))
    if (args.max_length is None) == (args.max_norm is None):
        raise UsageError("give exactly one of --max-length, --max-norm")
    max_norm = args.max_norm if args.max_norm is not None else math.exp(args.max_length)
    cl = enumerate_classes(G, max_norm, max_word_length=args.max_word_length,
                           include_powers=args.include_powers)
    header = f"# completeness: {cl.completeness}\n"
    _emit(header + cl.to_csv(), args.out)
    cert = {k: v for k, v in cl.certificate.items()}
    sys.stderr.write(_to_json({"completeness": cl.completeness, "count": len(cl),
                               "certificate": cert}) + "\n")
    if args.require_exhaustive and not cl.exhaustive:
        print("error: enumeration is not exhaustive for the requested norm", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .spectrum import (
        continuous_eigenvalues,
        interior_eigenvalues,
        lambda_scaled,
        load_laplace_spectrum,
    )

    rows = []
    L = load_laplace_spectrum(_resolve_data(args.laplace, LAPLACE_SUFFIX)) if args.laplace else None
    g = args.g if args.g is not None else (L.genus if L is not None else 2)
    for N in parse_n_range(args.N):
        data = interior_eigenvalues(N, g)
        if L is not None:
            data += continuous_eigenvalues(L, N)
        for d in data:
            rows.append([N, d.origin, d.index, d.nu, d.multiplicity, lambda_scaled(d.nu, N)])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "origin", "index", "nu", "multiplicity", "lambda_scaled"])
    for N, origin, idx, nu, m, lam in rows:
        nu_s = str(nu) if isinstance(nu, int) else fmt_float(nu)
        w.writerow([N, origin, idx, nu_s, m, fmt_float(lam)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    from .fuchsian import enumerate_classes, load_group
    from .spectrum import interior_eigenvalues, load_laplace_spectrum
    from .traceformula import (
        Y_N_exact,
        c1_supercritical,
        coefficients_critical,
        coefficients_subcritical,
        energy_regime,
        residual_analysis,
        weyl_term,
    )

    if args.E is None and not args.critical:
        raise UsageError("trace requires --E (or --critical)")
    E = math.sqrt(2) if args.E is None else args.E
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        reg = energy_regime(E, args.critical)
    if any("near-critical" in str(w.message) for w in caught):
        _warn("near-critical energy, expect slow asymptotics")
    E = reg.E
    phi = parse_phi(args.phi)
    N_list = parse_n_range(args.N)
    L = load_laplace_spectrum(_resolve_data(args.laplace, LAPLACE_SUFFIX)) if args.laplace else None
    g = args.g if args.g is not None else (L.genus if L is not None else 2)
    if reg.regime == "Supercritical" and L is None and not args.coefficients_only:
        raise UsageError("supercritical Y_N needs the Laplace spectrum: pass --laplace, "
                         "or --coefficients-only for the orbit side alone")

    classes = None
    if reg.regime == "Supercritical":
        if phi.support_hat is None:
            raise UsageError("supercritical coefficients need a test function with compactly "
                             "supported transform (for example bump:...)")
        G = load_group(_resolve_data(args.group, GROUP_SUFFIX))
        rate = E / math.sqrt(E * E - 2)
        need = phi.support_max() / rate
        classes = enumerate_classes(G, math.exp(need + 1e-6),
                                    max_word_length=args.max_word_length)

    def coeffs(N):
        if reg.regime == "Critical":
            return coefficients_critical(phi, g, N)
        if reg.regime == "Subcritical":
            return coefficients_subcritical(N, E, g, phi)
        rep = c1_supercritical(N, E, classes, phi)
        rep.c0 = complex(weyl_term(E, g, phi.hat_at_zero()))
        return rep

    rows, good = [], []
    failures = 0
    last = None
    for N in N_list:
        rep = coeffs(N)
        last = rep
        row = {"N": N, "c0": rep.c0, "c1": rep.c1}
        if reg.regime == "Subcritical":
            row["c1_rederived"] = rep.diagnostics["c1_rederived"]
        if not args.coefficients_only:
            try:
                res = Y_N_exact(interior_eigenvalues(N, g), L, E, N, phi,
                                tail_tol=args.tail_tol, details=True)
            except SpectrumWindowError as exc:
                row["error"] = str(exc)
                failures += 1
                rows.append(row)
                continue
            Y = res.value
            row.update({"Y_N": Y, "tail_bound": res.tail_bound,
                        "r0": Y - rep.c0 * N, "r1": Y - rep.c0 * N - rep.c1})
            good.append((N, Y, rep.c0, rep.c1))
        rows.append(row)

    fit = None
    if len(good) >= 4:
        table = {N: (Y, c0, c1) for N, Y, c0, c1 in good}
        fr = residual_analysis(lambda N: table[N], [N for N, *_ in good])
        fit = {"N": fr.N, "slope_r0": fr.slopes[0], "ci_r0": fr.intervals[0],
               "slope_r1": fr.slopes[1], "ci_r1": fr.intervals[1]}

    breakdown = []
    for item in last.breakdown:
        breakdown.append({k: v for k, v in item.items()})
    report = {
        "E": E, "N": N_list, "regime": reg.regime, "g": g,
        "phi": {"spec": args.phi, "kind": phi.kind, "params": phi.params,
                "convention": phi.convention},
        "reference_N": last.N, "c0": last.c0, "c1": last.c1,
        "orbit_breakdown": breakdown, "residuals": rows, "fit": fit,
        "laplace": str(args.laplace) if args.laplace else None,
        "tail_tol": args.tail_tol, "seed": args.seed,
    }
    if classes is not None:
        report["classes"] = {"count": len(classes), "completeness": classes.completeness,
                             "max_length": classes.certificate.get("max_length")}
    _emit(_to_json(report) + "\n", args.out)
    if args.plot_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "Y_N", "c0N_plus_c1", "residual"])
        for N, Y, c0, c1 in good:
            pred = c0 * N + c1
            w.writerow([N, fmt_float(Y.real if isinstance(Y, complex) else Y),
                        fmt_float(pred.real), fmt_float(abs(Y - pred))])
        Path(args.plot_csv).write_text(buf.getvalue())
    for row in rows:
        if "error" in row:
            print(f"error: N={row['N']}: {row['error']}", file=sys.stderr)
    return EXIT_INCOMPLETE if failures else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import CRITERIA

    only = set(parse_n_range(args.only)) if args.only else None
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for crit in CRITERIA:
            n = int(crit.__name__.rsplit("_", 1)[1])
            if only and n not in only:
                continue
            res = crit()
            print(res.line())
            results.append(res)
    if args.json:
        Path(args.json).write_text(_to_json(
            [{"number": r.number, "title": r.title, "status": r.status,
              "tolerance": r.tolerance, "runtime": r.runtime, "details": r.details}
             for r in results]) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INCOMPLETE


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap (computations here are single-threaded)")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    ap = argparse.ArgumentParser(
        prog="magtrace",
        description="Magnetic trace-formula laboratory on compact hyperbolic surfaces.",
        epilog=f"Data files are looked up in ${DATA_ENV} before the shipped data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sp = ap.add_subparsers(dest="command", metavar="command")

    s = sp.add_parser("simulate", parents=[common], help="integrate the magnetic flow")
    s.add_argument("--E", type=float, help="value of the Hamiltonian (> 1)")
    s.add_argument("--B", type=float, default=1.0, help="field strength (default 1)")
    s.add_argument("--T", type=float, help="integration time")
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--y0", type=float, default=1.0)
    s.add_argument("--theta0", type=float, default=math.pi / 2)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--coords", choices=["angle", "cotangent"], default="angle")
    s.add_argument("--samples", type=int, default=201)
    s.add_argument("--summary", help="write the drift summary here instead of stderr")
    s.set_defaults(func=cmd_simulate)

    c = sp.add_parser("classes", parents=[common], help="enumerate primitive conjugacy classes")
    c.add_argument("--group", default="bolza", help="group file or shipped name (default bolza)")
    c.add_argument("--max-length", type=float, dest="max_length")
    c.add_argument("--max-norm", type=float, dest="max_norm")
    c.add_argument("--max-word-length", type=int, default=16, dest="max_word_length")
    c.add_argument("--include-powers", action="store_true", dest="include_powers")
    c.add_argument("--require-exhaustive", action="store_true", dest="require_exhaustive")
    c.set_defaults(func=cmd_classes)

    p = sp.add_parser("spectrum", parents=[common], help="list magnetic Laplacian eigenvalues")
    p.add_argument("--N", default="1", help="N or N range a:b[:step]")
    p.add_argument("--g", type=int, default=None, help="genus (default from data, else 2)")
    p.add_argument("--laplace", default=None, help="Laplace spectrum file or shipped name")
    p.set_defaults(func=cmd_spectrum)

    t = sp.add_parser("trace", parents=[common], help="both sides of the trace formula")
    t.add_argument("--E", type=float)
    t.add_argument("--critical", action="store_true", help="E = sqrt 2 exactly")
    t.add_argument("--N", default="20:200:10", help="N or N range a:b[:step]")
    t.add_argument("--g", type=int, default=None)
    t.add_argument("--phi", default="gaussian:sigma=1", help="test function spec")
    t.add_argument("--laplace", default=None)
    t.add_argument("--group", default="bolza")
    t.add_argument("--max-word-length", type=int, default=16, dest="max_word_length")
    t.add_argument("--tail-tol", type=float, default=1e-10, dest="tail_tol")
    t.add_argument("--coefficients-only", action="store_true", dest="coefficients_only")
    t.add_argument("--plot-csv", default=None, dest="plot_csv")
    t.set_defaults(func=cmd_trace)

    v = sp.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--only", default=None, help="criterion number or range a:b")
    v.add_argument("--json", default=None, help="write detailed results here")
    v.set_defaults(func=cmd_verify)
    return ap


def _subparser(parser, command):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[command]
    raise KeyError(command)


def _given_dests(sub, argv) -> set:
    """Destinations set explicitly on the command line."""
    given = set()
    for a in sub._actions:
        if any(x == opt or x.startswith(opt + "=") for opt in a.option_strings for x in argv):
            given.add(a.dest)
    return given


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.config:
            sub = _subparser(parser, args.command)
            _apply_config(args, sub, read_config(args.config), _given_dests(sub, argv))
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"magtrace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DomainError) as exc:
        print(f"magtrace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EnumerationError as exc:
        print(f"magtrace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except SpectrumWindowError as exc:
        print(f"magtrace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (IntegrationError, FloatingPointError, ArithmeticError) as exc:
        print(f"magtrace {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MagtraceError as exc:
        print(f"magtrace {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
