"""``dcsflow`` command line: validate, curvature, flow, solve.

Exit codes: 0 success (including "not converged" and uniqueness warnings),
1 validation failure, 2 runtime singularity or solver failure, 3 IO or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .curvature import alpha_curvature, curvature_report
from .energy import GAUGES, GaugeRequiredError, SolverError, newton_solve
from .fileio import FileFormatError, load_state, load_target, save_state, write_json, write_vertex_table
from .flows import INTEGRATORS, KINDS, FlowError, FlowSpec, run
from .mesh import MeshError, WeightedSurface, WeightsError, builtin_mesh, check_structure_conditions, load_mesh, load_weights
from .metric import ConformalState, DomainExitError, InvalidMetricError
from .triangle import DegenerateFaceError, evaluate_faces

logger = logging.getLogger("dcsflow")

EXIT_OK, EXIT_INVALID, EXIT_SINGULAR, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _load_surface(args) -> WeightedSurface:
    spec = args.mesh
    if spec.startswith("builtin:"):
        t = builtin_mesh(spec.split(":", 1)[1])
    else:
        t = load_mesh(spec)
    w = args.weights
    if w.startswith("uniform:"):
        try:
            _, eps, eta = w.split(":")
            return WeightedSurface.uniform(t, int(eps), float(eta))
        except ValueError:
            raise ConfigError(f"--weights {w!r}: expected uniform:EPSILON:ETA") from None
    return load_weights(t, w)


def _load_state(args, surface: WeightedSurface) -> ConformalState:
    if args.state:
        st = load_state(surface, args.state, args.geometry, args.alpha)
    else:
        st = ConformalState.zeros(surface, args.geometry or "euclidean", args.alpha or 0.0)
    amp = getattr(args, "perturb", 0.0) or 0.0
    if amp:
        rng = np.random.default_rng(args.seed)
        u = st.u + rng.uniform(-amp, amp, st.u.size)
        try:
            st = st.with_u(surface, u)
        except DomainExitError as exc:
            raise ConfigError(f"perturbed start leaves the coordinate domain: {exc}") from None
    return st


def _load_target(args, surface: WeightedSurface, required: bool):
    given = [x is not None for x in (args.target_constant, args.target_file, args.target_from_state)]
    if sum(given) > 1:
        raise ConfigError("give at most one of --target-constant, --target-file, --target-from-state")
    if args.target_constant is not None:
        return np.full(surface.n_vertices, float(args.target_constant))
    if args.target_file is not None:
        return load_target(args.target_file, surface.n_vertices)
    if args.target_from_state is not None:
        src = load_state(surface, args.target_from_state, args.geometry, args.alpha)
        return alpha_curvature(surface, src)
    if required:
        raise ConfigError("this run needs a target curvature (--target-constant, --target-file or --target-from-state)")
    return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    surface = _load_surface(args)
    violations = check_structure_conditions(surface)
    report = {"structure_violations": [v.describe() for v in violations], "inadmissible_faces": [], "metric_error": None}
    try:
        state = _load_state(args, surface)
        data = evaluate_faces(surface, state.u, state.geometry)
        faces = surface.triangulation.faces
        report["inadmissible_faces"] = [
            {"face": int(f), "vertices": faces[f].tolist()} for f in data.degenerate
        ]
    except InvalidMetricError as exc:
        report["metric_error"] = str(exc)
    ok = not violations and not report["inadmissible_faces"] and report["metric_error"] is None
    report["valid"] = ok
    write_json(_out_dir(args) / "validation.json", report)
    for line in report["structure_violations"]:
        print(line)
    for item in report["inadmissible_faces"]:
        print(f"face {item['face']} {tuple(item['vertices'])} is inadmissible")
    if report["metric_error"]:
        print(report["metric_error"])
    print("valid" if ok else "invalid")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_curvature(args) -> int:
    surface = _load_surface(args)
    state = _load_state(args, surface)
    rep = curvature_report(surface, state, spectrum=args.spectrum)
    out = _out_dir(args)
    save_state(state, out / "state.json")
    write_json(out / "curvature.json", rep.to_dict())
    write_vertex_table(out / "curvature.csv", {"K": rep.K, "R_alpha": rep.R_alpha})
    print(f"gauss_bonnet_residual {rep.gauss_bonnet_residual:.3e}")
    if not rep.admissible:
        print(f"extended curvature used on faces {np.flatnonzero(rep.extended).tolist()}")
    if rep.eigenvalues is not None:
        print("eigenvalue signs", rep.to_dict()["eigenvalue_signs"])
    return EXIT_OK


def cmd_flow(args) -> int:
    surface = _load_surface(args)
    state = _load_state(args, surface)
    modified = args.kind.startswith("modified")
    target = _load_target(args, surface, required=modified)
    if target is not None and not modified:
        raise ConfigError(f"{args.kind} does not take a target curvature")
    try:
        spec = FlowSpec(args.kind, state.alpha, state.geometry, args.extended, target)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(args)
    try:
        trace = run(
            surface, state, spec, h=args.h, integrator=args.integrator, residual_tol=args.tol,
            t_max=args.t_max, adaptive=args.adaptive, local_tol=args.local_tol,
        )
    except FlowError as exc:
        if exc.trace is not None and exc.trace.states:
            exc.trace.write_csv(out / "trace.csv")
            exc.trace.write_events_csv(out / "events.csv")
            write_json(out / "summary.json", exc.trace.summary(surface) | {"error": str(exc)})
            for e in exc.trace.events[-5:]:
                print(f"event t={e.time:.6g} {e.kind} {e.face}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    trace.write_csv(out / "trace.csv")
    trace.write_events_csv(out / "events.csv")
    summary = trace.summary(surface)
    write_json(out / "summary.json", summary)
    save_state(ConformalState.from_u(surface, trace.final.u, state.geometry, state.alpha), out / "final_state.json")
    if trace.converged:
        print(f"converged t={trace.final.t:.6g} residual={trace.final.residual:.3e} rate={summary['rate']:.6g}")
    else:
        print(f"warning: not converged by t={trace.final.t:.6g} (residual {trace.final.residual:.3e})", file=sys.stderr)
        print("not converged")
    return EXIT_OK


def cmd_solve(args) -> int:
    surface = _load_surface(args)
    state = _load_state(args, surface)
    target = _load_target(args, surface, required=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            res = newton_solve(
                surface, state, state.alpha, target, args.gauge, tol=args.tol, max_iter=args.max_iter
            )
        except GaugeRequiredError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except (SolverError, DomainExitError, InvalidMetricError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SINGULAR
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _out_dir(args)
    save_state(res.state, out / "solution.json")
    write_json(out / "solve_report.json", res.to_dict())
    print(f"solved in {res.iterations} iterations, residual {res.residual:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcsflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mesh", required=True, help="OFF file, or builtin:NAME (tetrahedron, torus7, genus2)")
    common.add_argument("--weights", required=True, help="JSON weights file, or uniform:EPSILON:ETA")
    common.add_argument("--geometry", default=None, help="euclidean (default) or hyperbolic")
    common.add_argument("--alpha", type=float, default=None, help="alpha (default 0, or the state file's value)")
    common.add_argument("--state", help="JSON state file with 'u' or 'f' (default f = 0)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--perturb", type=float, default=0.0, help="add uniform noise of this amplitude to u")

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("--target-constant", type=float)
    target.add_argument("--target-file")
    target.add_argument("--target-from-state", help="use the alpha-curvature of this state file as target")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check structure conditions and admissibility")
    p = sub.add_parser("curvature", parents=[common], help="curvature report")
    p.add_argument("--spectrum", action="store_true", help="include eigenvalues of the curvature Jacobian")
    p = sub.add_parser("flow", parents=[common, target], help="run a curvature flow")
    p.add_argument("--kind", choices=KINDS, default="normalized_ricci")
    p.add_argument("--extended", action="store_true")
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--integrator", choices=INTEGRATORS, default="rk4")
    p.add_argument("--adaptive", action="store_true", help="step doubling inside each step of size h")
    p.add_argument("--local-tol", type=float, default=1e-12)
    p = sub.add_parser("solve", parents=[common, target], help="Newton solve for a prescribed curvature")
    p.add_argument("--gauge", choices=GAUGES)
    p.add_argument("--tol", type=float, default=1e-11)
    p.add_argument("--max-iter", type=int, default=100)
    return parser


COMMANDS = {"validate": cmd_validate, "curvature": cmd_curvature, "flow": cmd_flow, "solve": cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MeshError, WeightsError, FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainExitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InvalidMetricError, DegenerateFaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
