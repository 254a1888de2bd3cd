"""Command-line front end.

Exit codes: 0 success, 1 input or validation error, 2 numeric failure
(angle lift, refinement, I/O), 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys

import numpy as np

from . import algebra, csvio, svgout
from .curves import detect_loops, parse_curve_spec, sample_curve
from .equidistants import css, equidistant, wigner_caustic
from .errors import CausticsError, CurveSpecError, LiftError, RegularityError, RenderError
from .pairing import pair_families
from .report import RunReport
from .singular import (
    MODES,
    CurveArc,
    cusp_events,
    css_cusp_events,
    existence_windows,
    inflexion_events,
    loop_existence_window,
    parity_report,
    singular_lambda_spectrum,
    spectrum_range,
    verify_existence,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_CHECK = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="caustic", description=__doc__)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def common(sp, curve=True):
        if curve:
            sp.add_argument("--curve", required=True, help="curve JSON file")
            sp.add_argument("--n", type=int, default=2048,
                            help="sampling density (default 2048)")
        sp.add_argument("--out", help="output file")
        sp.add_argument("--json", action="store_true",
                        help="machine-readable report on stdout")
        return sp

    common(sub.add_parser("sample", help="sample the curve"))
    sp = common(sub.add_parser("equidist", help="equidistant set at a ratio"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    common(sub.add_parser("wigner", help="midpoint caustic"))
    common(sub.add_parser("css", help="centre symmetry set"))
    sp = common(sub.add_parser("cusps", help="refined cusp events"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp = common(sub.add_parser("parity", help="cusp count parity checks"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    common(sub.add_parser("spectrum", help="singular ratio spectrum"))
    sp = common(sub.add_parser("inflexions", help="inflexion events"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    common(sub.add_parser("loops", help="detect loops"))
    sp = common(sub.add_parser("windows", help="guaranteed singular windows"))
    sp.add_argument("--mode", choices=MODES + ("auto",), default="auto")
    sp.add_argument("--split", help="two parameters s0,s1 cutting the curve")
    sp.add_argument("--loop", dest="loop_index", type=int,
                    help="use the k-th detected loop")
    sp.add_argument("--verify", action="store_true",
                    help="probe the window for cusps")
    sp = common(sub.add_parser("compose-check", help="composition law check"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--tol", type=float)
    sp = common(sub.add_parser("css-check", help="CSS invariance check"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--tol", type=float)
    sp = common(sub.add_parser("reconstruct", help="rebuild the curve from "
                               "an equidistant"))
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--tol", type=float)
    sp = common(sub.add_parser("render", help="render CSV layers to SVG"),
                curve=False)
    sp.add_argument("--in", dest="infiles", required=True,
                    help="comma-separated CSV files")
    sp.add_argument("--dashed", help="comma-separated layer indices to dash")
    return p


def _load(args):
    with open(args.curve) as f:
        text = f.read()
    spec = parse_curve_spec(text)
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    sc = sample_curve(spec, args.n)
    return spec, sc, digest


def _emit(report: RunReport, args) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(report.to_json() + "\n")
    else:
        for line in report.lines():
            sys.stdout.write(line + "\n")


def _events_summary(report, events):
    kinds = {}
    for e in events:
        kinds[e.kind] = kinds.get(e.kind, 0) + 1
    for k in sorted(kinds):
        report.add(f"events_{k}", "pass", kinds[k])


def cmd_dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        return _run(args)
    except (CurveSpecError, UsageError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    except (LiftError, RegularityError, RenderError, CausticsError, OSError) as e:
        sys.stderr.write(f"numeric/io error: {e}\n")
        return EXIT_NUMERIC


def _run(args) -> int:
    cmd = args.command
    if cmd == "render":
        return _cmd_render(args)
    spec, sc, digest = _load(args)
    report = RunReport(command=cmd, inputs={"curve": args.curve,
                                            "digest": digest, "n": args.n})

    if cmd == "sample":
        report.add("samples", "pass", sc.n)
        report.add("rotation_number", "pass", sc.rotation_number)
        if args.out:
            csvio.write_curve_csv(sc, args.out)
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd in ("equidist", "wigner", "css"):
        families = pair_families(sc)
        if cmd == "equidist":
            report.inputs["lambda"] = args.lam
            eqset = equidistant(sc, args.lam, families)
            if args.lam not in (0.0, 1.0):
                eqset.events.extend(cusp_events(sc, args.lam, families))
        elif cmd == "wigner":
            eqset = wigner_caustic(sc, families)
            if not eqset.degenerate:
                eqset.events.extend(cusp_events(sc, 0.5, families))
        else:
            eqset = css(sc, families)
            eqset.events.extend(css_cusp_events(sc, families))
        report.add("branches", "pass", len(eqset.branches))
        report.add("degenerate", "pass", int(eqset.degenerate))
        _events_summary(report, eqset.events)
        if args.out:
            csvio.write_csv(eqset, args.out)
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd == "cusps":
        events = cusp_events(sc, args.lam)
        report.inputs["lambda"] = args.lam
        _events_summary(report, events)
        for e in events:
            if e.kind == "cusp":
                report.add(f"cusp_at_{e.s_a:.9g}", "pass", e.residual,
                           tol=1e-9, note=f"location ({e.location[0]:.9g}, "
                                          f"{e.location[1]:.9g})")
        if args.out:
            csvio.write_events_csv(events, args.lam, args.out, source=sc)
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd == "parity":
        rep = parity_report(sc, args.lam)
        report.inputs["lambda"] = args.lam
        report.checks.extend(rep.checks)
        report.add("cusp_count", "pass", rep.cusp_count)
        report.add("css_cusp_count", "pass", rep.css_cusp_count)
        _emit(report, args)
        if not rep.conclusive:
            return EXIT_OK
        return EXIT_OK if rep.passed else EXIT_CHECK

    if cmd == "spectrum":
        spectra = singular_lambda_spectrum(sc)
        lo, hi = spectrum_range(spectra)
        report.add("families", "pass", len(spectra))
        report.add("range_lo", "pass", lo)
        report.add("range_hi", "pass", hi)
        if args.out:
            with open(args.out, "w", newline="") as f:
                f.write("family,s_a,lambda_star\n")
                for sp in spectra:
                    for s, l in zip(sp.s, sp.lam_star):
                        f.write(f"{sp.family_index},{s:.12g},{l:.12g}\n")
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd == "inflexions":
        events = inflexion_events(sc, args.lam)
        report.inputs["lambda"] = args.lam
        _events_summary(report, events)
        if args.out:
            csvio.write_events_csv(events, args.lam, args.out, source=sc)
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd == "loops":
        loops = detect_loops(sc)
        report.add("loops", "pass", len(loops))
        for i, lp in enumerate(loops):
            report.add(f"loop_{i}", "pass", lp.convexity,
                       note=f"s in [{lp.s_start:.9g}, {lp.s_end:.9g}], "
                            f"rotation {lp.rotation:.6g}")
        if args.out:
            with open(args.out, "w", newline="") as f:
                f.write("index,s_start,s_end,rotation,convexity,x,y\n")
                for i, lp in enumerate(loops):
                    f.write(f"{i},{lp.s_start:.12g},{lp.s_end:.12g},"
                            f"{lp.rotation:.12g},{lp.convexity},"
                            f"{lp.point[0]:.12g},{lp.point[1]:.12g}\n")
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK

    if cmd == "windows":
        if args.split:
            s0, s1 = (float(x) for x in args.split.split(","))
            arc0 = CurveArc(sc, s0, s1)
            arc1 = CurveArc(sc, s1, s0 + sc.period)
            mode = args.mode if args.mode != "auto" else "curvature_ratio_diff_side"
            window = existence_windows(arc0, arc1, mode)
        elif args.loop_index is not None:
            loops = detect_loops(sc)
            if not 0 <= args.loop_index < len(loops):
                raise ValueError(f"loop index out of range (found {len(loops)})")
            _, _, window = loop_existence_window(loops[args.loop_index])
        else:
            raise UsageError("windows needs --split s0,s1 or --loop K")
        report.inputs["mode"] = window.source
        report.add("assumptions_ok", "pass" if window.assumptions_ok else "fail",
                   int(window.assumptions_ok))
        report.add("rho_min", "pass", window.rho_min)
        report.add("rho_max", "pass", window.rho_max)
        for lo, hi in window.lambdas:
            report.add("window", "pass", f"[{lo:.9g}, {hi:.9g}]")
        for d in window.diagnostics:
            report.add("hypothesis", "pass", d)
        code = EXIT_OK
        if args.verify:
            ver = verify_existence(sc, window)
            for lam, hits in ver.probes:
                report.add(f"probe_{lam:.6g}", "pass" if hits >= 1 else "fail",
                           hits, tol=1)
            code = EXIT_OK if ver.passed else EXIT_CHECK
        _emit(report, args)
        return code

    if cmd == "compose-check":
        rep = algebra.verify_composition(sc, args.lam, args.delta, tol=args.tol)
        report.checks.extend(rep.checks)
        report.inputs.update(rep.inputs)
        _emit(report, args)
        return EXIT_OK if rep.passed else EXIT_CHECK

    if cmd == "css-check":
        rep = algebra.verify_css_invariance(sc, args.lam, args.delta,
                                            tol=args.tol)
        report.checks.extend(rep.checks)
        report.inputs.update(rep.inputs)
        _emit(report, args)
        return EXIT_OK if rep.passed else EXIT_CHECK

    if cmd == "reconstruct":
        families = pair_families(sc)
        base = equidistant(sc, args.lam, families)
        base.events.extend(cusp_events(sc, args.lam, families))
        rec = algebra.reconstruct(base, args.lam)
        report.inputs["lambda"] = args.lam
        pts = rec.all_points()
        report.add("points", "pass", len(pts))
        d = algebra.hausdorff(pts, sc.points)
        tol = args.tol if args.tol else 5e-3 * algebra.diameter(sc.points)
        report.add("hausdorff_to_input", "pass" if d.hausdorff < tol else "fail",
                   d.hausdorff, tol=tol)
        if args.out:
            csvio.write_csv(rec, args.out)
            report.artifacts.append(args.out)
        _emit(report, args)
        return EXIT_OK if report.passed else EXIT_CHECK

    raise UsageError(f"unknown command {cmd!r}")


def _cmd_render(args) -> int:
    files = [s for s in args.infiles.split(",") if s]
    dashed = set()
    if args.dashed:
        dashed = {int(x) for x in args.dashed.split(",")}
    if not args.out:
        raise UsageError("render needs --out FILE")
    layers = []
    palette_idx = 0
    for i, path in enumerate(files):
        branches, events = csvio.read_csv(path)
        color = svgout.PALETTE[palette_idx % len(svgout.PALETTE)]
        palette_idx += 1
        style = {"dashed": i in dashed, "stroke": color}
        for b in sorted(branches):
            layers.append((branches[b], dict(style)))
        marks = np.array([(x, y) for x, y, k in events if k == "cusp"])
        if len(marks):
            layers.append((marks, {"markers_only": True, "stroke": color}))
    svgout.render_svg(layers, args.out)
    report = RunReport(command="render", inputs={"in": files},
                       artifacts=[args.out])
    report.add("layers", "pass", len(layers))
    _emit(report, args)
    return EXIT_OK


def main(argv=None) -> int:
    code = cmd_dispatch(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
