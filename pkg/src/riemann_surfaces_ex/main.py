from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from riemann_surfaces_ex import __version__
from riemann_surfaces_ex.core import metrics as app_metrics
from riemann_surfaces_ex.core.config import Settings
from riemann_surfaces_ex.core.errors import DomainError, InconsistencyError, NumericalError, RiemannSurfaceError
from riemann_surfaces_ex.core.lifespan import session
from riemann_surfaces_ex.core.schemas import (
    CurveSpec,
    DivisorSpec,
    FunctionSpec,
    PolynomialPairSpec,
    ResultEnvelope,
    TargetSpec,
    to_pair,
    to_pairs,
)
from riemann_surfaces_ex.core.telemetry import get_tracer
from riemann_surfaces_ex.services import divisor, jacobian, periods, polycore, topology
from riemann_surfaces_ex.services.curve import Curve
from riemann_surfaces_ex.services.divisor import Divisor
from riemann_surfaces_ex.services.export_service import ExportService

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

SEED_ATTEMPTS = 50


# ==========================
# Command context and inputs
# ==========================

@dataclass
class CommandResult:
    outputs: dict[str, Any]
    diagnostics: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, Any] = field(default_factory=dict)
    curve_hash: str | None = None


@dataclass
class CommandContext:
    """Parsed arguments plus the settings layers a command resolves its curve with.

    Precedence: environment < curve spec options < command-line flags.
    """

    args: argparse.Namespace
    settings: Settings
    overrides: dict[str, Any]
    exporter: ExportService

    def curve(self) -> tuple[CurveSpec, Curve]:
        spec = load_model(CurveSpec, self.args.spec)
        settings = spec.settings(self.settings).with_overrides(**self.overrides)
        return spec, spec.to_curve(settings)


def load_model(model: type[ModelT], path: Path) -> ModelT:
    """Read and validate a JSON input file.

    Raises:
        DomainError: If the file is unreadable or does not match the model.
    """
    try:
        return model.model_validate_json(Path(path).read_text())
    except OSError as e:
        raise DomainError(f"Cannot read {path}: {e}") from e
    except ValidationError as e:
        raise DomainError(f"Invalid {model.__name__} in {path}: {e}") from e


def _curve_inputs(args: argparse.Namespace, spec: CurveSpec) -> dict[str, Any]:
    return {"spec_path": str(args.spec), "curve": spec.model_dump(mode="json")}


def _cycles(perm: Any) -> list[list[int]]:
    """1-based cycles of a sympy permutation, fixed points included."""
    return [[i + 1 for i in cycle] for cycle in perm.full_cyclic_form]


# ========
# Commands
# ========

def cmd_genus(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    g = topology.genus(curve)
    md = curve.monodromy()
    profile = topology.ramification_profile(md)

    outputs: dict[str, Any] = {
        "genus": g,
        "kind": curve.kind.value,
        "sheets": profile.m,
        "total_ramification": profile.V,
        "euler_characteristic": topology.euler_characteristic(g),
    }
    if curve.is_hyperelliptic:
        expected = topology.hyperelliptic_genus(curve.p.degree)
        outputs["hyperelliptic_genus"] = expected
        if expected != g:
            raise InconsistencyError(f"Monodromy genus {g} disagrees with hyperelliptic genus {expected}")

    diagnostics = {
        "relation_holds": md.relation_holds(),
        "accepted_steps": md.stats.accepted,
        "rejected_steps": md.stats.rejected,
        "max_residual": md.stats.max_residual,
    }
    return CommandResult(outputs, diagnostics, _curve_inputs(ctx.args, spec), curve.curve_hash())


def cmd_branch(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    locus = curve.branch_locus()
    outputs = {
        "branch_points": [{"z": to_pair(b.z), "source": b.source.value} for b in locus.finite_points],
        "count": len(locus.finite_points),
        "includes_infinity": locus.includes_infinity,
        "base_point": to_pair(curve.base_point),
    }
    plots = ctx.exporter.branch_points(curve)
    diagnostics = {"plot_files": [str(plots)] if plots else []}
    return CommandResult(outputs, diagnostics, _curve_inputs(ctx.args, spec), curve.curve_hash())


def cmd_monodromy(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    md = curve.monodromy()
    profile = topology.ramification_profile(md)
    outputs = {
        "base_point": to_pair(md.base_point),
        "base_fiber": to_pairs(md.base_fiber),
        "branch_points": [
            {"z": to_pair(z), "permutation": _cycles(perm), "cycle_type": list(point.partition)}
            for z, perm, point in zip(md.branch_points, md.perms, profile.per_branch_point)
        ],
        "infinity": {
            "permutation": _cycles(md.perm_infinity),
            "cycle_type": list(profile.per_branch_point[-1].partition),
        },
        "loop_order": [k + 1 for k in md.loop_order],
        "transitive": topology.is_connected(md),
        "relation_holds": md.relation_holds(),
    }
    plots = [ctx.exporter.branch_points(curve), ctx.exporter.monodromy_loops(curve)]
    diagnostics = {
        "accepted_steps": md.stats.accepted,
        "rejected_steps": md.stats.rejected,
        "max_residual": md.stats.max_residual,
        "plot_files": [str(p) for p in plots if p],
    }
    return CommandResult(outputs, diagnostics, _curve_inputs(ctx.args, spec), curve.curve_hash())


def cmd_periods(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    pm = periods.period_matrix(curve)
    outputs: dict[str, Any] = {
        "genus": pm.genus,
        "E": to_pairs(pm.E),
        "F": to_pairs(pm.F),
        "Z": to_pairs(pm.Z),
        "real_independent": periods.real_independence(pm.omega),
        "b_cycles_reversed": pm.b_reversed,
        "chain": to_pairs(pm.cycles.chain),
    }
    if pm.genus == 1:
        outputs["tau"] = to_pair(pm.Z[0, 0])

    plots = [ctx.exporter.branch_points(curve), ctx.exporter.homology_cycles(pm.cycles)]
    diagnostics = {
        **pm.diagnostics.as_dict(),
        "quadrature_nodes": pm.quadrature_nodes,
        "segments": [{"index": s.index, "nodes": s.nodes, "delta": s.delta} for s in pm.segments],
        "plot_files": [str(p) for p in plots if p],
    }
    return CommandResult(outputs, diagnostics, _curve_inputs(ctx.args, spec), curve.curve_hash())


def cmd_rr(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    divisor_spec = load_model(DivisorSpec, ctx.args.divisor)
    D = divisor_spec.to_divisor(curve)
    g = divisor.curve_genus(curve)

    l_dim = divisor.dim_L(curve, D)
    i_dim = divisor.dim_I_minus(curve, D)
    chi = divisor.chi(D, g)
    outputs: dict[str, Any] = {
        "genus": g,
        "degree": D.degree,
        "dim_L": l_dim,
        "dim_I_minus": i_dim,
        "chi": chi,
        "canonical_degree": divisor.canonical_degree(g),
        "riemann_roch_holds": l_dim - i_dim == chi,
    }
    try:
        outputs["monomial_dim_L"] = divisor.monomial_dim_L(curve, D)
    except DomainError:
        outputs["monomial_dim_L"] = None

    diagnostics: dict[str, Any] = {}
    if D.degree:
        table = divisor.taylor_table(curve, D)
        diagnostics["singular_values"] = [float(s) for s in table.singular_values()]
        diagnostics["rank_threshold"] = curve.settings.rank_threshold

    inputs = {**_curve_inputs(ctx.args, spec), "divisor": D.descriptor()}
    return CommandResult(outputs, diagnostics, inputs, curve.curve_hash())


def cmd_abel(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    f = load_model(FunctionSpec, ctx.args.function).to_function(curve)
    aj = jacobian.AbelJacobi(curve)

    D = divisor.principal_divisor(curve, f)
    image = aj.of_divisor(D)
    principal = jacobian.is_origin(image, curve.settings.jacobian_tol)
    outputs = {
        "divisor": D.descriptor(),
        "image": image.descriptor(),
        "principal": principal,
        "lattice_distance": aj.lattice.distance(image.representative),
    }
    report = periods.residues(curve, f)
    diagnostics = {
        "residues": report.descriptor(),
        "residue_sum": to_pair(report.total),
        "base_point": aj.base.descriptor(),
    }
    inputs = {**_curve_inputs(ctx.args, spec), "function_path": str(ctx.args.function)}
    return CommandResult(outputs, diagnostics, inputs, curve.curve_hash())


def _random_seed(curve: Curve, g: int, rng: np.random.Generator) -> Divisor:
    """Draw g regular points away from the branch disks until the divisor is general."""
    zs = curve.finite_branch_zs
    spread = max(1.0, float(np.max(np.abs(zs))))
    diffs = np.abs(zs[:, None] - zs[None, :])
    separation = float(np.min(diffs[~np.eye(len(zs), dtype=bool)])) if len(zs) > 1 else 1.0
    for _ in range(SEED_ATTEMPTS):
        candidates = spread * (rng.uniform(-1, 1, g) + 1j * rng.uniform(-1, 1, g))
        if any(curve.distance_to_branch_points(z) < 0.25 * separation for z in candidates):
            continue
        points = [curve.point(z, sheet=int(rng.integers(1, 3))) for z in candidates]
        seed = Divisor.from_points(points)
        if len(seed) == g and jacobian.is_general(curve, seed):
            return seed
    raise DomainError(f"Could not draw a general seed divisor in {SEED_ATTEMPTS} attempts")


def cmd_invert(ctx: CommandContext) -> CommandResult:
    spec, curve = ctx.curve()
    target_spec = load_model(TargetSpec, ctx.args.target)
    aj = jacobian.AbelJacobi(curve)
    g = aj.genus
    if len(target_spec.coords) != 2 * g:
        raise DomainError(f"Target needs {2 * g} lattice coordinates, got {len(target_spec.coords)}")

    target = aj.lattice.reduce(aj.lattice.generators @ np.asarray(target_spec.coords, dtype=float))
    if target_spec.seed is not None:
        seed = target_spec.seed.to_divisor(curve)
    else:
        seed = _random_seed(curve, g, np.random.default_rng(curve.settings.seed))

    result = jacobian.jacobi_invert(curve, target, seed, aj)
    image = aj.lattice.reduce(aj.positive(result))
    residual = aj.lattice.distance(image.representative - target.representative)
    outputs = {
        "divisor": result.descriptor(),
        "image": image.descriptor(),
        "target": target.descriptor(),
        "residual": residual,
    }
    diagnostics = {"seed": seed.descriptor(), "newton_steps": curve.settings.newton_steps}
    inputs = {**_curve_inputs(ctx.args, spec), "target": target_spec.model_dump(mode="json")}
    return CommandResult(outputs, diagnostics, inputs, curve.curve_hash())


def cmd_resultant(ctx: CommandContext) -> CommandResult:
    pair = load_model(PolynomialPairSpec, ctx.args.polys)
    f, g = pair.polys()
    exact = f.is_gaussian_integer and g.is_gaussian_integer

    sylvester_value = polycore.resultant(f, g)
    forms = {
        "from_roots": polycore.resultant_from_roots(f, g),
        "via_f_roots": polycore.resultant_via_f_roots(f, g),
        "via_g_roots": polycore.resultant_via_g_roots(f, g),
    }
    scale = max(1.0, abs(sylvester_value))
    outputs: dict[str, Any] = {
        "resultant": to_pair(sylvester_value),
        "product_forms": {name: to_pair(value) for name, value in forms.items()},
        "discriminant_f": to_pair(polycore.discriminant(f)) if f.degree >= 1 else None,
        "discriminant_g": to_pair(polycore.discriminant(g)) if g.degree >= 1 else None,
        "exact": exact,
    }
    if exact:
        outputs["resultant_exact"] = str(polycore.resultant_exact(f, g))
    diagnostics = {
        "product_form_defects": {name: abs(value - sylvester_value) / scale for name, value in forms.items()},
    }
    return CommandResult(outputs, diagnostics, {"polys_path": str(ctx.args.polys), "polys": pair.model_dump(mode="json")})


COMMANDS: dict[str, Callable[[CommandContext], CommandResult]] = {
    "genus": cmd_genus,
    "branch": cmd_branch,
    "monodromy": cmd_monodromy,
    "periods": cmd_periods,
    "rr": cmd_rr,
    "abel": cmd_abel,
    "invert": cmd_invert,
    "resultant": cmd_resultant,
}


# ======
# Parser
# ======

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="Root-finding and path-tracking tolerance")
    common.add_argument("--quad-order", type=int, help="Initial Gauss-Chebyshev node count")
    common.add_argument("--newton-steps", type=int, help="Continuation increments for Jacobi inversion")
    common.add_argument("--json-out", type=Path, help="Also write the result envelope to this path")
    common.add_argument("--seed", type=int, help="Seed for randomized choices")
    common.add_argument("--plot-dir", type=Path, help="Directory for CSV plot data")
    common.add_argument("--workers", type=int, help="Worker threads for segment quadrature")
    common.add_argument("--log-level", help="Logging level (DEBUG, INFO, ...)")

    parser = argparse.ArgumentParser(
        prog="riemann-surfaces",
        description="Compact Riemann surfaces of plane algebraic curves",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("genus", "Genus from monodromy and Riemann-Hurwitz"),
        ("branch", "Branch locus"),
        ("monodromy", "Loop permutations and cycle types"),
        ("periods", "Period matrix, Z and bilinear diagnostics"),
    ):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("spec", type=Path, help="Curve spec JSON")

    rr = sub.add_parser("rr", parents=[common], help="Riemann-Roch dimensions of a divisor")
    rr.add_argument("spec", type=Path, help="Curve spec JSON")
    rr.add_argument("divisor", type=Path, help="Divisor JSON")

    abel = sub.add_parser("abel", parents=[common], help="Abel-Jacobi image of a principal divisor")
    abel.add_argument("spec", type=Path, help="Curve spec JSON")
    abel.add_argument("function", type=Path, help="Function JSON")

    invert = sub.add_parser("invert", parents=[common], help="Jacobi inversion of a target point")
    invert.add_argument("spec", type=Path, help="Curve spec JSON")
    invert.add_argument("target", type=Path, help="Target JSON")

    resultant = sub.add_parser("resultant", parents=[common], help="Resultant and discriminants of two polynomials")
    resultant.add_argument("polys", type=Path, help="Polynomial pair JSON")
    return parser


def _cli_overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "root_tol": args.tol,
        "track_tol": args.tol,
        "quad_order": args.quad_order,
        "newton_steps": args.newton_steps,
        "seed": args.seed,
        "workers": args.workers,
        "log_level": args.log_level,
    }


# ===========
# Entry point
# ===========

def run(argv: list[str] | None = None) -> int:
    """Run one command and print its result envelope; returns the exit code."""
    args = build_parser().parse_args(argv)
    overrides = _cli_overrides(args)
    settings = Settings.from_env().with_overrides(**overrides)

    with session(settings):
        start_time = time.time()
        exit_code = 0
        error: str | None = None
        result = CommandResult({})

        with tracer.start_as_current_span(f"cmd_{args.command}") as span:
            try:
                ctx = CommandContext(args, settings, overrides, ExportService(args.plot_dir))
                result = COMMANDS[args.command](ctx)
                if result.curve_hash:
                    span.set_attribute("curve_hash", result.curve_hash)
            except RiemannSurfaceError as e:
                exit_code = e.exit_code
                error = e.message
                logger.error(f"{args.command} failed ({type(e).__name__}): {e.message}")
                if isinstance(e, NumericalError):
                    result.diagnostics = {"residual": e.residual, **e.diagnostics}
                span.set_attribute("error", True)
                span.set_attribute("error_message", e.message)
            except Exception as e:
                exit_code = InconsistencyError.exit_code
                error = str(e)
                logger.exception(f"Unexpected error in {args.command}: {e}")
                span.set_attribute("error", True)
                span.set_attribute("error_message", str(e))
            span.set_attribute("exit_code", exit_code)

        duration = time.time() - start_time
        app_metrics.record_command(args.command, exit_code, duration)

        envelope = ResultEnvelope(
            command=args.command,
            curve_hash=result.curve_hash,
            inputs=result.inputs,
            outputs=result.outputs,
            diagnostics=result.diagnostics,
            tool_version=__version__,
            wall_time=duration,
            exit_code=exit_code,
            error=error,
        )
        print(envelope.model_dump_json(indent=2))
        if args.json_out is not None:
            ExportService.write_envelope(envelope, args.json_out)

        logger.info(f"{args.command} finished with exit code {exit_code} in {duration:.2f}s")
    return exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
