"""Command-line entry point.

Subcommands write CSV (to ``--out`` or stdout) whose first line echoes every
effective parameter. Exit codes: 0 success, 1 numeric or invariant failure,
2 usage error. A ``--config`` file of ``key = value`` lines supplies
defaults; explicit flags win.
"""
from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import apparatus as app
from . import flipcode as fc
from .csvio import fmt_float, params_line, write_csv
from .dynamics import independent_sum, thermal_qubit
from .events import ComponentSpace, Projector, compile_structure
from .histories import consistency_matrix, lifetime_family, reliability_curve, weight
from .numkernel import read_matrix
from .structure import StructureSyntaxError, atoms, parse_program

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# --- argument parsing ------------------------------------------------------------

def parse_grid(text: str) -> list[float]:
    """``"0,0.2,0.5"`` or ``"start:stop:num"`` (inclusive linspace)."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
            if num < 1:
                raise ValueError
            return [float(x) for x in np.linspace(start, stop, num)]
        values = [float(x) for x in text.split(",") if x.strip()]
        if not values:
            raise ValueError
        return values
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}") from None


def positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="-", help="output CSV path (default: stdout)")
    p.add_argument("--quiet", action="store_true", help="suppress summaries on stderr")
    p.add_argument("--config", help="file of 'key = value' default overrides")


def _curve_flags(p: argparse.ArgumentParser, t_max: float) -> None:
    p.add_argument("--alpha", type=float, help="amplitude of |1> (|111> for the code)")
    p.add_argument("--n-thermal", type=float, default=0.0, help="bath occupation N in [0, 0.5]")
    p.add_argument("--t-max", type=positive_float, default=t_max, help="final time in 1/gamma0")
    p.add_argument("--dt", type=positive_float, default=1e-3, help="check interval in 1/gamma0")
    p.add_argument("--method", choices=("exact", "euler"), default="exact")
    p.add_argument("--gamma0", type=positive_float, default=1.0, help="rescales the printed t column only")
    p.add_argument("--stride", type=int, default=1, help="print every stride-th grid point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qreliability", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("physical", help="single-qubit reliability: Markov limit vs closed form")
    _common(p)
    _curve_flags(p, 5.0)

    p = sub.add_parser("logical", help="logical-bit reliability: closed form, ODE, full 8-dim model")
    _common(p)
    _curve_flags(p, 5.0)
    p.add_argument("--tol-ode", type=positive_float, default=1e-10)
    p.add_argument("--tol-full", type=positive_float, default=1e-5)

    p = sub.add_parser("phase", help="FT/NFT phase diagram")
    _common(p)
    p.add_argument("--alpha-grid", type=parse_grid, default=parse_grid("0:1:21"))
    p.add_argument("--n-grid", type=parse_grid, default=parse_grid("0:0.5:11"))
    p.add_argument("--t-max", type=positive_float, default=20.0)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("apparatus", help="apparatus density matrix, lifetime and entropies")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-thermal", type=float, default=0.0)
    p.add_argument("--t-max", type=positive_float, default=10.0)
    p.add_argument("--grid", type=int, default=200, help="continuous grid points")
    p.add_argument("--variant", choices=("ode-consistent", "printed"), default="ode-consistent")
    p.add_argument("--kernel", choices=("g-limit", "as-printed"), default="g-limit")
    p.add_argument("--discrete", action="store_true", help="use discrete checks of the 8-dim model")
    p.add_argument("--dt", type=positive_float, default=0.05, help="check interval with --discrete")
    p.add_argument("--alpha-grid", type=parse_grid, help="entropy scan over alpha (with --n-grid)")
    p.add_argument("--n-grid", type=parse_grid)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trajectory", help="user-defined structure functions")
    _common(p)
    p.add_argument("structure", help="structure file (component declarations + system := expr)")
    p.add_argument("--matrix", action="append", default=[], metavar="NAME=PATH",
                   help="bind a component projector from a matrix file")
    p.add_argument("--initial", help="initial ket as an n x 1 matrix file")
    p.add_argument("--alpha", type=float, help="initial alpha |1..1> + beta |0..0> (qubits only)")
    p.add_argument("--n-thermal", type=float, default=0.0)
    p.add_argument("--t-max", type=positive_float, default=5.0)
    p.add_argument("--dt", type=positive_float, default=1e-3)
    p.add_argument("--method", choices=("exact", "euler"), default="exact")
    p.add_argument("--unitary", help="closed-system interval unitary (matrix file)")
    p.add_argument("--steps", type=int, default=2, help="number of checks with --unitary")
    p.add_argument("--check-consistency", action="store_true")
    p.add_argument("--tol", type=positive_float, default=1e-10, help="consistency tolerance")
    return parser


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def read_config(path) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subparsers.choices), None)
    if command is None:
        return
    sub = subparsers.choices[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"config key {key!r} is not a {command} option")
        if isinstance(action, argparse._StoreTrueAction):
            low = value.lower()
            if low not in _BOOL_TRUE | _BOOL_FALSE:
                raise UsageError(f"config key {key!r}: expected a boolean, got {value!r}")
            defaults[key] = low in _BOOL_TRUE
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
            if action.choices is not None and defaults[key] not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
    sub.set_defaults(**defaults)


def _effective(args, skip=("out", "quiet", "config", "command", "func")) -> dict:
    return {k: v for k, v in vars(args).items() if k not in skip}


@contextlib.contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _summary(args, **items) -> None:
    if not args.quiet:
        body = "; ".join(f"{k}={v if isinstance(v, str) else fmt_float(v)}" for k, v in items.items())
        print(f"# summary: {body}", file=sys.stderr)


def _params(args) -> fc.CodeParams:
    if args.alpha is None:
        raise UsageError("--alpha is required")
    try:
        return fc.CodeParams(args.alpha, args.n_thermal)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_stride(args) -> None:
    if args.stride < 1:
        raise UsageError("--stride must be >= 1")


def _require_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a, dtype=float))):
            raise NumericFailure("non-finite values in the computed curves")


def _curve(model, survival, psi, args, meta):
    try:
        return reliability_curve(model, survival, psi, args.t_max, args.dt, args.method, meta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --- subcommands -------------------------------------------------------------------

def cmd_physical(args) -> int:
    params = _params(args)
    _check_stride(args)
    model, survival, psi = fc.physical_setup(params)
    curve = _curve(model, survival, psi, args, {"alpha": params.alpha, "n_thermal": params.n_thermal})
    closed = fc.r_physical(curve.times, params)
    extra = curve.extrapolated
    diff = np.abs(extra - closed)
    _require_finite(curve.values, closed, extra)
    rows = [
        (curve.times[i] / args.gamma0, curve.values[i], curve.err_est[i], extra[i], closed[i], diff[i])
        for i in range(0, len(curve.times), args.stride)
    ]
    with _output(args.out) as out:
        write_csv(out, ["t", "R", "err_est", "R_extrapolated", "R_closed", "abs_diff"], rows, _effective(args))
    _summary(args, M=fc.coeff_m(params), max_abs_diff=float(diff.max()))
    return EXIT_OK


def cmd_logical(args) -> int:
    params = _params(args)
    _check_stride(args)
    model, survival, psi = fc.logical_setup(params)
    curve = _curve(model, survival, psi, args, {"alpha": params.alpha, "n_thermal": params.n_thermal})
    t = curve.times
    r_p = fc.r_physical(t, params)
    raw = fc.r_logical_closed_raw(t, params)
    closed = np.clip(raw, 0.0, 1.0)
    ode = fc.r_logical_ode(t, params)
    full = curve.extrapolated
    classical = fc.classical_curve(np.clip(r_p, 0.0, 1.0))
    _require_finite(r_p, raw, ode, full)
    rows = [(t[i] / args.gamma0, r_p[i], closed[i], ode[i], full[i], classical[i]) for i in range(0, len(t), args.stride)]
    with _output(args.out) as out:
        write_csv(out, ["t", "R_P", "R_L_closed", "R_L_ode", "R_L_full", "R_classical"], rows, _effective(args))
    err_ode = float(np.max(np.abs(raw - ode)))
    err_full = float(np.max(np.abs(raw - full)))
    _summary(args, max_closed_vs_ode=err_ode, max_closed_vs_full=err_full)
    if err_ode > args.tol_ode or err_full > args.tol_full:
        raise NumericFailure(
            f"columns disagree: closed vs ODE {err_ode:.3e} (tol {args.tol_ode:g}), "
            f"closed vs full {err_full:.3e} (tol {args.tol_full:g})"
        )
    return EXIT_OK


def cmd_phase(args) -> int:
    if args.samples < 10:
        raise UsageError("--samples must be >= 10")
    try:
        rows = fc.phase_diagram(args.alpha_grid, args.n_grid, args.t_max, args.samples, max(1, args.workers))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = _effective(args)
    params["alpha_grid"] = " ".join(fmt_float(a) for a in args.alpha_grid)
    params["n_grid"] = " ".join(fmt_float(n) for n in args.n_grid)
    params.pop("workers")
    with _output(args.out) as out:
        write_csv(out, ["alpha", "n_thermal", "class", "r_c"], rows, params)
    _summary(args, points=str(len(rows)), ft=str(sum(r[2] == "FT" for r in rows)))
    return EXIT_OK


def _phase_spread(args, variant: str, form: str) -> float:
    base = app.d_blocks(args.alpha, args.n_thermal, variant)
    ref = app.apparatus_matrix_blocks(base, args.t_max, args.grid, form).entries
    spread = 0.0
    for phi in (0.7, 1.7, math.pi):
        m = app.apparatus_matrix_blocks(app.with_phase(base, phi), args.t_max, args.grid, form).entries
        spread = max(spread, float(np.max(np.abs(m - ref))))
    return spread


def cmd_apparatus(args) -> int:
    variant = args.variant.replace("-", "_")
    form = args.kernel.replace("-", "_")
    if (args.alpha_grid is None) != (args.n_grid is None):
        raise UsageError("--alpha-grid and --n-grid must be given together")
    if args.alpha_grid is not None:
        try:
            rows = fc.entropy_scan(args.alpha_grid, args.n_grid, args.t_max, args.grid, variant, form, max(1, args.workers))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        params = _effective(args)
        params["alpha_grid"] = " ".join(fmt_float(a) for a in args.alpha_grid)
        params["n_grid"] = " ".join(fmt_float(n) for n in args.n_grid)
        params.pop("workers")
        with _output(args.out) as out:
            write_csv(out, ["alpha", "n_thermal", "s_shannon", "s_von_neumann", "gap"], rows, params)
        return EXIT_OK

    params = _params(args)
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    if args.discrete:
        model, survival, psi = fc.logical_setup(params)
        f = int(round(args.t_max / args.dt))
        from .dynamics import propagator

        m = app.apparatus_matrix_discrete(propagator(model, args.dt), survival, psi, f, args.dt)
    else:
        blocks = app.d_blocks(params.alpha, params.n_thermal, variant)
        m = app.apparatus_matrix_blocks(blocks, args.t_max, args.grid, form)
    if not np.all(np.isfinite(m.entries)):
        raise NumericFailure("non-finite apparatus matrix")
    rows = []
    for i in range(m.size):
        for j in range(m.size):
            z = m.entries[i, j]
            rows.append((i, j, m.times[i], m.times[j], z.real, z.imag))
    with _output(args.out) as out:
        write_csv(out, ["i", "j", "t_i", "t_j", "re", "im"], rows, _effective(args))

    summary = {"trace": m.trace, "min_eigenvalue": m.min_eigenvalue()}
    if m.trace > 1e-14:
        summary["mean_lifetime"] = app.lifetime_mean(m)
        try:
            s_s, s_v, gap = app.entropy_gap(m)
            summary.update(s_shannon=s_s, s_von_neumann=s_v, gap=gap)
        except ValueError as exc:
            summary["entropy"] = f"undefined ({exc})"
    if not args.discrete:
        summary["phase_spread"] = _phase_spread(args, variant, form)
    _summary(args, **summary)
    faithful = args.discrete or (variant == "ode_consistent" and form == "g_limit")
    problems = m.violations()
    if problems:
        msg = "; ".join(problems)
        if faithful:
            raise NumericFailure(f"apparatus invariants fail: {msg}")
        if not args.quiet:
            print(f"warning: {msg} (expected for variant={variant}, kernel={form})", file=sys.stderr)
    return EXIT_OK


def _load_structure(args):
    try:
        text = Path(args.structure).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.structure}: {exc}") from None
    program = parse_program(text)
    base = Path(args.structure).parent
    bindings = {}
    for decl in program.components:
        if decl.matrix:
            path = Path(decl.matrix)
            bindings[decl.name] = path if path.is_absolute() else base / path
    for item in args.matrix:
        if "=" not in item:
            raise UsageError(f"--matrix expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        bindings[name.strip()] = Path(path.strip())
    space = ComponentSpace(tuple(d.name for d in program.components), tuple(d.dim for d in program.components))
    unknown = [a for a in atoms(program.system) if a not in space.names]
    if unknown:
        raise UsageError(f"undeclared component(s): {', '.join(unknown)}")
    projectors = {}
    for name in space.names:
        if name not in bindings:
            raise UsageError(f"component {name!r} has no matrix (use --matrix {name}=PATH)")
        try:
            projectors[name] = Projector(read_matrix(bindings[name]))
        except (OSError, ValueError) as exc:
            raise UsageError(f"component {name!r}: {exc}") from None
    extra = set(bindings) - set(space.names)
    if extra:
        raise UsageError(f"--matrix given for undeclared component(s): {', '.join(sorted(extra))}")
    return program, space, compile_structure(program.system, projectors, space)


def _initial_ket(args, space: ComponentSpace) -> np.ndarray:
    if args.initial:
        try:
            ket = read_matrix(args.initial)
        except (OSError, ValueError) as exc:
            raise UsageError(f"--initial: {exc}") from None
        if ket.shape != (space.dim, 1):
            raise UsageError(f"--initial must be a {space.dim} x 1 matrix, got {ket.shape}")
        ket = ket[:, 0]
        norm = np.linalg.norm(ket)
        if abs(norm - 1) > 1e-10:
            raise UsageError(f"--initial has norm {norm:.12g}, expected 1")
        return ket
    if args.alpha is None:
        raise UsageError("give --initial or --alpha")
    if any(d != 2 for d in space.dims):
        raise UsageError("--alpha needs every component to be a qubit")
    if not 0 <= args.alpha <= 1:
        raise UsageError("--alpha must lie in [0, 1]")
    ket = np.zeros(space.dim, dtype=np.complex128)
    ket[-1] = args.alpha
    ket[0] = math.sqrt(max(0.0, 1 - args.alpha**2))
    return ket


def cmd_trajectory(args) -> int:
    program, space, survival = _load_structure(args)
    psi = _initial_ket(args, space)
    params = _effective(args)
    params["matrix"] = " ".join(args.matrix)
    if args.unitary:
        try:
            u = read_matrix(args.unitary)
        except (OSError, ValueError) as exc:
            raise UsageError(f"--unitary: {exc}") from None
        if args.steps < 1:
            raise UsageError("--steps must be >= 1")
        times = [float(k) for k in range(1, args.steps + 1)]
        family = lifetime_family(psi, times, survival)
        us = [u] * args.steps
        try:
            report = consistency_matrix(family, us, args.tol)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.check_consistency:
            labels = report.labels
            rows = [
                (i, j, labels[i], labels[j], report.matrix[i, j])
                for i in range(len(labels)) for j in range(len(labels))
            ]
            header = ["i", "j", "label_i", "label_j", "re_overlap"]
        else:
            dil = app.dilated_weights(family, us, survival)
            rows = [(tr.label, weight(tr, us), dil[i]) for i, tr in enumerate(family.trajectories)]
            header = ["label", "weight", "dilated_weight"]
        with _output(args.out) as out:
            write_csv(out, header, rows, params)
        i, j = report.worst_pair()
        _summary(args, consistent="true" if report.consistent else "false",
                 max_offdiag=report.max_offdiag, pair=f"{report.labels[i]},{report.labels[j]}")
        return EXIT_OK

    if any(d != 2 for d in space.dims):
        raise UsageError("the thermal model needs every component to be a qubit")
    try:
        model = independent_sum(thermal_qubit(args.n_thermal), len(space.dims))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    curve = _curve(model, survival, psi, args, {})
    _require_finite(curve.values)
    with _output(args.out) as out:
        write_csv(out, ["t", "R", "err_est"], zip(curve.times, curve.values, curve.err_est), params)
    return EXIT_OK


COMMANDS = {
    "physical": cmd_physical,
    "logical": cmd_logical,
    "phase": cmd_phase,
    "apparatus": cmd_apparatus,
    "trajectory": cmd_trajectory,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except StructureSyntaxError as exc:
        print(f"error: syntax error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader went away (e.g. piped into head); keep the interpreter quiet on exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
