"""Plumbing-graph knot invariant calculator: Upsilon, tau, d, barcodes and exactness checks."""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from src.cubecx import CubeComplexEngine, max_cells_limit
from src.errors import ConfigError, ExactnessFailure, PlumbCalcError
from src.fixtures import list_fixtures, resolve_input
from src.kecx import KEComplexEngine
from src.plumbing import IntersectionLattice, PlumbingLoader, SpincClass, bad_vertices, conjugate_class, spinc_classes
from src.quadratic import parse_t
from src.report import (
    InvariantReport,
    Provenance,
    ReportWriter,
    dumps,
    exactness_payload,
    homology_payload,
    relations_payload,
)
from src.upsilon import UpsilonEngine
from src.utils import config_digest, fingerprint, load_config, setup_logger

CONFIG_PATH = "config/settings.yaml"


@dataclass
class RunConfig:
    """Command-line options merged over the configuration file.

    Attributes:
        command: Sub-command name.
        input: Plumbing file path or fixture name.
        spinc: "all" or a class index.
        t: Deformation parameter for homology and verify.
        t_grid: Plot grid denominator.
        box: Cube box radius override.
        window: [K,E] window width override.
        qmax: Exponent cutoff override.
        vertex: Surgery vertex for verify.
        out: Output path, or None for stdout.
        format: json, csv or png.
        workers: Worker threads.
        max_cells: Cube complex capacity.
    """

    command: str
    input: str | None = None
    spinc: str = "all"
    t: Fraction | None = None
    t_grid: int | None = None
    box: int | None = None
    window: int | None = None
    qmax: Fraction | None = None
    vertex: str | None = None
    out: str | None = None
    format: str = "json"
    workers: int = 4
    max_cells: int = 2_000_000

    @classmethod
    def from_args(cls, args: argparse.Namespace, config: dict[str, Any]) -> "RunConfig":
        """Merge parsed arguments with config defaults and validate them.

        Raises:
            ConfigError: On non-positive overrides or an unknown format.
        """
        t = parse_t(args.t) if getattr(args, "t", None) is not None else None
        qmax = None
        if getattr(args, "qmax", None) is not None:
            try:
                qmax = Fraction(args.qmax)
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"--qmax must be rational, got {args.qmax!r}") from e
        cfg = cls(
            command=args.command,
            input=getattr(args, "input", None),
            spinc=getattr(args, "spinc", "all"),
            t=t,
            t_grid=getattr(args, "t_grid", None),
            box=getattr(args, "box", None),
            window=getattr(args, "window", None),
            qmax=qmax,
            vertex=getattr(args, "vertex", None),
            out=getattr(args, "out", None),
            format=getattr(args, "format", None) or config["output"].get("format", "json"),
            workers=config["engine"].get("workers", 4),
            max_cells=max_cells_limit(config),
        )
        for name in ("t_grid", "window", "workers", "max_cells"):
            value = getattr(cfg, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if cfg.box is not None and cfg.box < 0:
            raise ConfigError(f"box must be non-negative, got {cfg.box}")
        if cfg.qmax is not None and cfg.qmax <= 0:
            raise ConfigError(f"qmax must be positive, got {cfg.qmax}")
        if cfg.format not in ("json", "csv", "png"):
            raise ConfigError(f"Unknown format {cfg.format!r}")
        if cfg.spinc != "all" and not cfg.spinc.isdigit():
            raise ConfigError(f"--spinc takes 'all' or a class index, got {cfg.spinc!r}")
        return cfg

    def select_classes(self, lat: IntersectionLattice) -> list[SpincClass]:
        """Classes named by --spinc.

        Raises:
            ConfigError: If the index is not below |det Q|.
        """
        classes = spinc_classes(lat)
        if self.spinc == "all":
            return classes
        index = int(self.spinc)
        if index >= len(classes):
            raise ConfigError(f"Spin^c index {index} out of range (|det Q| = {len(classes)})")
        return [classes[index]]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="PlumbCalc: knot invariants of plumbing graphs.")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    def with_input(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = subparsers.add_parser(name, help=help_text)
        cmd.add_argument("input", help="Plumbing file or fixture name")
        cmd.add_argument("--spinc", default="all", help="'all' or a Spin^c class index")
        cmd.add_argument("--out", help="Write the report here instead of stdout")
        return cmd

    cmd_inv = with_input("invariants", "Upsilon, tau and d per Spin^c class")
    cmd_inv.add_argument("--t", help="Also attach cube-complex barcodes at this t")
    cmd_inv.add_argument("--box", type=int, help="Starting cube box radius")
    cmd_inv.add_argument("--format", choices=["json"], default="json")

    cmd_hom = with_input("homology", "Persistent homology of the cube complex")
    cmd_hom.add_argument("--t", required=True, help="Deformation parameter, e.g. 2/3")
    cmd_hom.add_argument("--box", type=int, help="Starting cube box radius")

    cmd_ver = with_input("verify", "Check the surgery exact sequence")
    cmd_ver.add_argument("--vertex", required=True, help="Framed vertex not adjacent to v0")
    cmd_ver.add_argument("--t", required=True, help="Rational deformation parameter")
    cmd_ver.add_argument("--window", type=int, help="Window width W")
    cmd_ver.add_argument("--qmax", help="Exponent cutoff")
    cmd_ver.add_argument("--box", type=int, help="Cube box radius for the barcode match")

    cmd_plot = with_input("plot", "Upsilon curve samples")
    cmd_plot.add_argument("--t-grid", type=int, help="Grid denominator b (t = j/b)")
    cmd_plot.add_argument("--format", choices=["csv", "png"], default="csv")

    cmd_fix = subparsers.add_parser("fixtures", help="Shipped fixture pack")
    fix_sub = cmd_fix.add_subparsers(dest="action")
    fix_sub.add_parser("list")
    fix_show = fix_sub.add_parser("show")
    fix_show.add_argument("name")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 0

    try:
        config = load_config(CONFIG_PATH)
    except FileNotFoundError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return ConfigError.exit_code
    except PlumbCalcError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code
    logger = setup_logger(config)

    try:
        cfg = RunConfig.from_args(args, config)
        if cfg.command == "fixtures":
            text = run_fixtures(args)
        elif cfg.command == "invariants":
            text = run_invariants(cfg, config, logger)
        elif cfg.command == "homology":
            text = run_homology(cfg, config, logger)
        elif cfg.command == "verify":
            text = run_verify(cfg, config, logger)
        elif cfg.command == "plot":
            text = run_plot(cfg, config, logger)
        else:
            parser.print_help()
            return 0
    except PlumbCalcError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    if text and not cfg.out:
        sys.stdout.write(text)
    return 0


def load_input(cfg: RunConfig, config: dict[str, Any]) -> tuple[str, Any, IntersectionLattice]:
    path = resolve_input(cfg.input)
    return PlumbingLoader(config).load(path)


def provenance(cfg: RunConfig, config: dict[str, Any], text: str, **parameters: Any) -> Provenance:
    return Provenance(cfg.input, fingerprint(text), config_digest(config), parameters)


def run_invariants(cfg: RunConfig, config: dict[str, Any], logger: logging.Logger) -> str:
    """Compute Υ, τ and d for the selected classes.

    Args:
        cfg: Run configuration.
        config: Configuration dictionary.
        logger: Logger instance.
    """
    text, graph, lat = load_input(cfg, config)
    classes = cfg.select_classes(lat)
    bad_count = len(bad_vertices(graph))
    engine = UpsilonEngine(config)

    logger.info(f"Computing invariants for {len(classes)} classes with {cfg.workers} workers")
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda s: engine.compute(lat, s, bad_count), classes))

    conjugates = {s.index: conjugate_class(lat, s).index for s in classes}
    report = InvariantReport(
        provenance(cfg, config, text, envelope_pieces=engine.pieces, zemke_window=engine.window),
        results,
        conjugates,
    )
    if cfg.t is not None:
        cube = CubeComplexEngine(config)
        for spinc in classes:
            report.homology[spinc.index] = cube.homology(lat, spinc, cfg.t, cfg.box)
    return ReportWriter(config).emit(dumps(report.to_json()), cfg.out)


def run_homology(cfg: RunConfig, config: dict[str, Any], logger: logging.Logger) -> str:
    """Stabilized cube-complex barcodes for the selected classes."""
    text, _, lat = load_input(cfg, config)
    classes = cfg.select_classes(lat)
    engine = CubeComplexEngine(config)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda s: engine.homology(lat, s, cfg.t, cfg.box), classes))
    logger.info(f"Homology complete: boxes {[r.box for r in results]}")
    payload = {
        "provenance": provenance(cfg, config, text, t=cfg.t, max_cells=cfg.max_cells).to_json(),
        "classes": [homology_payload(r) for r in results],
    }
    return ReportWriter(config).emit(dumps(payload), cfg.out)


def run_verify(cfg: RunConfig, config: dict[str, Any], logger: logging.Logger) -> str:
    """Verify the surgery exact sequence and audit the elementary relations.

    Raises:
        ExactnessFailure: After the report is written, if any check failed.
    """
    text, _, lat = load_input(cfg, config)
    engine = KEComplexEngine(config)
    report = engine.verify(lat, cfg.vertex, cfg.t, cfg.window, cfg.qmax, cfg.box)
    relations_window = config["engine"].get("relations_window", 2)
    relations = [
        relations_payload(s.index, engine.relations(lat, s, cfg.t, relations_window))
        for s in cfg.select_classes(lat)
    ]
    payload = exactness_payload(report, cfg.input)
    payload["relations"] = relations
    payload["provenance"] = provenance(
        cfg, config, text, window=report.window, qmax=report.qmax, box=engine.box if cfg.box is None else cfg.box
    ).to_json()
    output = ReportWriter(config).emit(dumps(payload), cfg.out)
    failure = report.first_failure()
    if failure is not None:
        if not cfg.out:
            sys.stdout.write(output)
        raise ExactnessFailure(f"{failure.name}: {failure.detail}")
    logger.info("EXACTNESS PASS: all checks hold on the interior window.")
    return output


def run_plot(cfg: RunConfig, config: dict[str, Any], logger: logging.Logger) -> str:
    """CSV samples of Υ, or a PNG when --format png."""
    _, graph, lat = load_input(cfg, config)
    engine = UpsilonEngine(config)
    bad_count = len(bad_vertices(graph))
    results = [engine.compute(lat, s, bad_count) for s in cfg.select_classes(lat)]
    writer = ReportWriter(config)
    if cfg.format == "png":
        if not cfg.out:
            raise ConfigError("--format png needs --out")
        writer.render_png(results, cfg.out)
        return ""
    return writer.emit(writer.csv(results, cfg.t_grid), cfg.out)


def run_fixtures(args: argparse.Namespace) -> str:
    if args.action == "show":
        return resolve_input(args.name).read_text(encoding="utf-8")
    return "".join(f"{info.name}\t{info.description}\n" for info in list_fixtures())


if __name__ == "__main__":
    sys.exit(main())
