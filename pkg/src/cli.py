"""
Command-line interface for the bundle-pricing toolkit.
"""

import sys
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Optional, Callable, Dict, Any, Tuple

import click
import numpy as np
from rich.console import Console

from src import baselines, constk, hardness, iid2, oracles
from src.errors import BundlePricingError, ParseError, ConsistencyError
from src.logger import ProgressTracker
from src.market import choice_table, expected_revenue
from src.rational import parse_rational, format_rational, format_vector
from src.report import Report, ReportExporter, ReportViewer
from src.utils import (
    load_config, apply_overrides, budget,
    load_instance, load_menu, load_comp, load_hard_instance,
)

Body = Callable[[Dict[str, Any], ProgressTracker], Tuple[Report, Dict[str, Path]]]


def common_options(func):
    """Flags shared by every solver command."""
    options = [
        click.option("--config", "-c", type=click.Path(path_type=Path), help="Path to config file (default: config.json)"),
        click.option("--verbose", "-v", is_flag=True, help="Enable verbose output"),
        click.option("--quiet", "-q", is_flag=True, help="No progress bars or summary table"),
        click.option("--output", "-o", type=click.Path(path_type=Path), help="Write the JSON report here instead of stdout"),
        click.option("--decimal-digits", type=int, help="Significant digits of decimal annotations"),
        click.option("--budget-allocations", type=int, help="Maximum number of allocation maps"),
        click.option("--budget-lp", type=int, help="Maximum LP variables and constraints"),
        click.option("--max-items", type=int, help="Largest item count for solve-constk"),
        click.option("--workers", type=int, help="Parallel workers for the enumerations"),
        click.option("--long", "long_run", is_flag=True, help="Use the long allocation budget"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def execute(command: str, opts: Dict[str, Any], inputs: Dict[str, Any], body: Body):
    """
    Load config, run a command body under a progress tracker and emit its report.

    Exits with the error's exit code on failure.
    """
    console = Console(stderr=True)
    try:
        cfg = load_config(opts.get("config"))
        apply_overrides(
            cfg,
            budget_allocations=opts.get("budget_allocations"),
            budget_lp=opts.get("budget_lp"),
            max_items=opts.get("max_items"),
            workers=opts.get("workers"),
            decimal_digits=opts.get("decimal_digits"),
        )
        cfg["long"] = bool(opts.get("long_run"))
        verbosity = cfg.get("verbosity", {})

        with ProgressTracker(
            verbose=opts.get("verbose", False),
            log_level=verbosity.get("log_level", "INFO"),
            quiet=opts.get("quiet", False),
            show_memory_usage=verbosity.get("show_memory_usage", True),
        ) as progress:
            report, output_files = body(cfg, progress)
            report.inputs = inputs
            progress.display_memory_usage()

            exporter = ReportExporter(cfg)
            output = opts.get("output")
            if output:
                exporter.export_to_json(report, output, progress)
                output_files["JSON"] = output
            else:
                click.echo(report.to_json(exporter.digits))
            progress.display_summary(command, report.summary_rows(exporter.digits), output_files)
    except BundlePricingError as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(e.exit_code)
    except (ValueError, ZeroDivisionError) as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(BundlePricingError.exit_code)


def _rational_option(value: Optional[str], name: str) -> Optional[Fraction]:
    if value is None:
        return None
    try:
        return parse_rational(value)
    except ParseError as e:
        raise ParseError(f"--{name}: {e}") from e


@click.group()
def cli():
    """Bundle pricing toolkit - exact revenue-optimal pricing for an additive buyer."""
    pass


@cli.command("srev")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Instance file")
@common_options
def srev_command(instance: Path, **opts):
    """Optimal separate item pricing."""
    def body(cfg, progress):
        dist = load_instance(instance)
        result = baselines.srev(dist)
        data = result.to_dict()
        data["menu"] = baselines.srev_menu(result).to_dict()
        return Report("srev", {}, data, {"revenue": result.revenue}), {}

    execute("srev", opts, {"instance": str(instance)}, body)


@cli.command("brev")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Instance file")
@common_options
def brev_command(instance: Path, **opts):
    """Optimal grand-bundle price."""
    def body(cfg, progress):
        dist = load_instance(instance)
        result = baselines.brev(dist, budget(cfg, "valuations"))
        data = result.to_dict()
        data["menu"] = baselines.brev_menu(dist, result).to_dict()
        return Report("brev", {}, data, {"revenue": result.revenue}), {}

    execute("brev", opts, {"instance": str(instance)}, body)


@cli.command("drev-exact")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Instance file")
@common_options
def drev_command(instance: Path, **opts):
    """Optimal deterministic revenue by exhaustive allocation search (tiny instances)."""
    def body(cfg, progress):
        dist = load_instance(instance)
        limit = budget(cfg, "allocations_long" if cfg.get("long") else "allocations")
        result = oracles.drev_bruteforce(
            dist, limit, cfg.get("workers", 1), progress, budget(cfg, "valuations")
        )
        prices = oracles.mechanism_prices(dist, result.alloc, result.utilities)
        violations = oracles.verify_price_ip(dist, result.alloc, prices)
        if violations:
            raise ConsistencyError(f"Witness mechanism is not IC/IR: {violations[0]}")
        menu = oracles.mechanism_menu(dist, result.alloc, prices)
        menu_revenue = expected_revenue(menu, dist, budget(cfg, "valuations"))
        if menu_revenue != result.revenue:
            progress.log_warning(
                f"Witness menu earns {format_rational(menu_revenue)}, search found {format_rational(result.revenue)}"
            )

        if cfg.get("verbosity", {}).get("show_search_stats", False):
            progress.record("Feasible maps", result.feasible_maps)
            progress.record("Search nodes", result.nodes_visited)

        data = result.to_dict()
        data["prices"] = format_vector(prices)
        data["menu"] = menu.to_dict()
        return Report("drev-exact", {}, data, {"revenue": result.revenue}), {}

    execute("drev-exact", opts, {"instance": str(instance)}, body)


@cli.command("rev-lp")
@click.option("--instance", "-i", type=click.Path(path_type=Path), help="Instance file (standard LP)")
@click.option("--n", "n", type=int, help="Item count (symmetric LP)")
@click.option("--a", "a", type=str, default="1", show_default=True, help="Low value (symmetric LP)")
@click.option("--b", "b", type=str, help="High value (symmetric LP)")
@click.option("--p", "p", type=str, help="Probability of the high value (symmetric LP)")
@common_options
def rev_lp_command(instance: Optional[Path], n: Optional[int], a: str, b: Optional[str], p: Optional[str], **opts):
    """
    Optimal lottery revenue via the standard LP, or the symmetric LP for i.i.d. two-point items.
    """
    def body(cfg, progress):
        if instance is not None:
            dist = load_instance(instance)
            result = oracles.solve_rev_lp(
                dist, budget(cfg, "lp_variables"), budget(cfg, "lp_constraints"), budget(cfg, "valuations")
            )
            data = {"lp": "standard", "value": format_rational(result.value), "pivots": result.pivots}
            return Report("rev-lp", {}, data, {"value": result.value}), {}

        if n is None or b is None or p is None:
            raise ParseError("rev-lp needs --instance, or --n, --b and --p")
        low, high, prob = _rational_option(a, "a"), _rational_option(b, "b"), _rational_option(p, "p")
        if not 0 < low < high:
            raise ParseError(f"symmetric LP needs 0 < a < b, got a={low}, b={high}")
        if n < 1 or not 0 < prob < 1:
            raise ParseError(f"symmetric LP needs n >= 1 and 0 < p < 1, got n={n}, p={prob}")
        solved = oracles.solve_symmetric_lp(n, high / low, prob)
        value = solved.value * low
        data = {
            "lp": "symmetric",
            "value": format_rational(value),
            "constraints": solved.constraints,
            "solution": solved.solution.to_dict(),
        }
        return Report("rev-lp", {}, data, {"value": value}), {}

    execute("rev-lp", opts, {"instance": str(instance) if instance else None, "n": n, "a": a, "b": b, "p": p}, body)


@cli.command("solve-iid2")
@click.option("--n", "n", type=int, required=True, help="Item count")
@click.option("--a", "a", type=str, required=True, help="Low value")
@click.option("--b", "b", type=str, required=True, help="High value")
@click.option("--p", "p", type=str, required=True, help="Probability of the high value")
@common_options
def solve_iid2_command(n: int, a: str, b: str, p: str, **opts):
    """Optimal pricing of n i.i.d. items on {a, b}."""
    def body(cfg, progress):
        try:
            inst = iid2.Iid2Instance(n, _rational_option(a, "a"), _rational_option(b, "b"), _rational_option(p, "p"))
        except ValueError as e:
            raise ParseError(str(e)) from e
        solution = iid2.solve_iid2(inst)
        data = solution.to_dict()
        data["menu"] = iid2.iid2_menu(inst, solution).to_dict()
        return Report("solve-iid2", {}, data, {"revenue": solution.revenue}), {}

    execute("solve-iid2", opts, {"n": n, "a": a, "b": b, "p": p}, body)


@cli.command("solve-constk")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Instance file")
@click.option("--emit-candidates", is_flag=True, help="Include every candidate vertex in the report")
@common_options
def solve_constk_command(instance: Path, emit_candidates: bool, **opts):
    """Optimal bundle pricing for a constant number of items."""
    def body(cfg, progress):
        dist = load_instance(instance)
        result = constk.solve_constk(
            dist,
            max_items=budget(cfg, "constk_max_items"),
            subset_budget=budget(cfg, "constk_subsets"),
            workers=cfg.get("workers", 1),
            valuation_budget=budget(cfg, "valuations"),
            progress_tracker=progress,
        )
        data = result.to_dict(emit_candidates)
        data["menu"] = constk.price_menu(result.best_prices, result.k).to_dict()

        output_files = {}
        if emit_candidates:
            output_dir = Path(cfg.get("output", {}).get("output_dir", "output"))
            csv_path = ReportExporter(cfg).export_candidates_csv(
                data["candidates"], output_dir / f"{instance.stem}_candidates.csv", progress
            )
            if csv_path:
                output_files["CSV"] = csv_path
        return Report("solve-constk", {}, data, {"revenue": result.revenue}), output_files

    execute("solve-constk", opts, {"instance": str(instance), "emit_candidates": emit_candidates}, body)


@cli.command("eval-menu")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Instance file")
@click.option("--menu", "-m", "menu_path", required=True, type=click.Path(path_type=Path), help="Menu file")
@common_options
def eval_menu_command(instance: Path, menu_path: Path, **opts):
    """Expected revenue of a menu and every valuation's choice."""
    def body(cfg, progress):
        dist = load_instance(instance)
        menu = load_menu(menu_path)
        if menu.max_item() >= dist.n:
            raise ParseError(f"Menu refers to item {menu.max_item() + 1}; instance has {dist.n} items")
        table = choice_table(menu, dist, budget(cfg, "valuations"))
        revenue = sum((prob * choice.price_paid for _, prob, choice in table), Fraction(0))
        choices = [
            {
                "valuation": format_vector(v),
                "prob": format_rational(prob),
                "entry": None if choice.chosen is None else choice.chosen + 1,
                "utility": format_rational(choice.utility),
                "price": format_rational(choice.price_paid),
            }
            for v, prob, choice in table
        ]
        data = {"revenue": format_rational(revenue), "menu": menu.to_dict(), "choices": choices}
        return Report("eval-menu", {}, data, {"revenue": revenue}), {}

    execute("eval-menu", opts, {"instance": str(instance), "menu": str(menu_path)}, body)


@cli.command("reduce-comp")
@click.option("--input", "-i", "input_path", required=True, type=click.Path(path_type=Path), help="COMP file")
@common_options
def reduce_comp_command(input_path: Path, **opts):
    """Rewrite a COMP instance as a COMP* instance."""
    def body(cfg, progress):
        inst = load_comp(input_path)
        star, t_prime = hardness.comp_to_compstar(inst)
        limit = budget(cfg, "tstar_subsets")
        data = {
            "compstar": star.to_dict(),
            "t_prime": t_prime,
            "w_prime": star.w,
            "conditions": list(hardness.compstar_conditions(star.B, star.W)),
        }
        if comb(star.n, star.n // 2) <= limit:
            source_count = hardness.count_tstar(inst, limit)
            reduced_count = hardness.count_tstar(star, limit)
            source_yes, reduced_yes = source_count >= inst.t, reduced_count >= t_prime
            if source_yes != reduced_yes:
                raise ConsistencyError("Reduction changed the yes/no answer")
            data.update({
                "source_t_star": source_count,
                "reduced_t_star": reduced_count,
                "yes_instance": source_yes,
            })
        else:
            progress.log_warning("Reduced instance too large to recount; yes/no check skipped")
        return Report("reduce-comp", {}, data, {}), {}

    execute("reduce-comp", opts, {"input": str(input_path)}, body)


@cli.command("build-hard-instance")
@click.option("--input", "-i", "input_path", required=True, type=click.Path(path_type=Path), help="COMP* file")
@click.option("--t", "t", type=int, help="Threshold (default: t from the file)")
@common_options
def build_hard_instance_command(input_path: Path, t: Optional[int], **opts):
    """Construct the pricing instance of a COMP* instance."""
    def body(cfg, progress):
        star = hardness.CompStarInstance.of(load_comp(input_path))
        threshold = star.t if t is None else t
        if not 1 <= threshold <= 2 ** star.n:
            raise ParseError(f"--t must lie in [1, 2^{star.n}], got {threshold}")
        hard = hardness.build_hard_instance(star, threshold)
        decimal = {"sigma": hard.sigma, "tau": hard.tau, "eps": hard.eps, "alpha": hard.alpha}
        return Report("build-hard-instance", {}, hard.to_dict(), decimal), {}

    execute("build-hard-instance", opts, {"input": str(input_path), "t": t}, body)


@cli.command("compare-solutions")
@click.option("--instance", "-i", required=True, type=click.Path(path_type=Path), help="Hard instance file")
@common_options
def compare_solutions_command(instance: Path, **opts):
    """Exact revenues of Solutions 1 and 2 and the winner."""
    def body(cfg, progress):
        hard = load_hard_instance(instance)
        pair = hardness.build_solutions(
            hard,
            tstar_budget=budget(cfg, "tstar_subsets"),
            direct_eval_max_n=cfg.get("hardness", {}).get("direct_eval_max_n", 4),
        )
        verdict = hardness.decide_winner(pair, hard.t)
        data = pair.to_dict()
        data.update(verdict.to_dict())
        data["yes_instance"] = pair.t_star >= hard.t
        decimal = {"rev1": pair.rev1, "rev2": pair.rev2, "margin": verdict.margin, "residual": verdict.residual}
        return Report("compare-solutions", {}, data, decimal), {}

    execute("compare-solutions", opts, {"instance": str(instance)}, body)


@cli.command("verify")
@click.option("--instance", "-i", type=click.Path(path_type=Path), help="Instance file")
@click.option("--menu", "-m", "menu_path", type=click.Path(path_type=Path), help="Menu file")
@click.option("--comp", "comp_path", type=click.Path(path_type=Path), help="COMP file")
@common_options
def verify_command(instance: Optional[Path], menu_path: Optional[Path], comp_path: Optional[Path], **opts):
    """Check input files against their invariants."""
    def body(cfg, progress):
        if not (instance or menu_path or comp_path):
            raise ParseError("verify needs at least one of --instance, --menu, --comp")
        data: Dict[str, Any] = {"valid": True}
        if instance:
            dist = load_instance(instance)
            data["instance"] = {"items": dist.n, "grid_size": dist.grid_size}
        if menu_path:
            menu = load_menu(menu_path)
            data["menu"] = {"entries": len(menu)}
        if comp_path:
            comp = load_comp(comp_path)
            first, second = hardness.compstar_conditions(comp.B, comp.W)
            data["comp"] = {"n": comp.n, "w": comp.w, "compstar": first and second}
        return Report("verify", {}, data), {}

    inputs = {"instance": str(instance) if instance else None,
              "menu": str(menu_path) if menu_path else None,
              "comp": str(comp_path) if comp_path else None}
    execute("verify", opts, inputs, body)


@cli.command("residual-scan")
@click.option("--max-n", type=int, help="Largest even n scanned (default: from config)")
@click.option("--samples", type=int, help="Random instances per n (default: from config)")
@click.option("--seed", type=int, help="Random seed (default: from config)")
@common_options
def residual_scan_command(max_n: Optional[int], samples: Optional[int], seed: Optional[int], **opts):
    """Measure from which n the revenue-gap residual stays below C'/2."""
    def body(cfg, progress):
        settings = cfg.get("hardness", {})
        top = settings.get("threshold_max_n", 12) if max_n is None else max_n
        count = settings.get("samples_per_n", 10) if samples is None else samples
        rng = np.random.default_rng(settings.get("seed", 2017) if seed is None else seed)
        if top < 2 or count < 1:
            raise ParseError("--max-n must be at least 2 and --samples positive")

        scan = hardness.residual_scan(
            list(range(2, top + 1, 2)), count, rng, budget(cfg, "tstar_subsets"), progress
        )
        progress.record("Threshold n", "none" if scan.threshold is None else scan.threshold)
        return Report("residual-scan", {}, scan.to_dict()), {}

    execute("residual-scan", opts, {"max_n": max_n, "samples": samples, "seed": seed}, body)


@cli.command("show")
@click.argument("report_path", type=click.Path(path_type=Path))
@click.option("--limit", "-l", type=int, help="Limit rows shown in long tables")
def show_command(report_path: Path, limit: Optional[int]):
    """
    Render a saved report.

    REPORT_PATH: Path to a JSON report
    """
    viewer = ReportViewer()
    try:
        viewer.load_json(report_path)
    except BundlePricingError as e:
        viewer.console.print(f"[red]Error: {e}[/red]")
        sys.exit(e.exit_code)

    viewer.display_summary()
    viewer.display_witness()
    viewer.display_candidates(limit=limit)
    viewer.display_rows(limit=limit)


if __name__ == "__main__":
    cli()
