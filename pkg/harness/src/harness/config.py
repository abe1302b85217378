"""Problem files → solver objects."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from fredholm import expr
from fredholm.colloc import Discretization, Problem, manufactured_problem
from fredholm.contour import Contour
from fredholm.errors import ConfigurationError
from fredholm.piecewise import PiecewiseFn
from fredholm.quadrature import Kernel, QuadratureConfig
from shared import Angle, ExactBlock, PieceBlock, RhsBlock, RunConfig

ANGLE_CONSTANTS = {"pi": np.pi}


def load_config(config_path: str | Path) -> RunConfig:
    """Read a YAML or JSON problem file; relative sample paths resolve against its directory."""
    config_path = Path(config_path)
    with open(config_path, "r") as f:
        config_data = yaml.safe_load(f)
    if not isinstance(config_data, dict):
        raise ConfigurationError(f"{config_path} does not contain a mapping")
    config = RunConfig(**config_data)
    if config.rhs is not None and config.rhs.samples is not None:
        samples = Path(config.rhs.samples)
        if not samples.is_absolute():
            samples = config_path.parent / samples
        config = config.model_copy(update={"rhs": config.rhs.model_copy(update={"samples": str(samples)})})
    return config


def resolve_angle(value: Angle) -> float:
    """A number, or an expression such as ``"0.7*pi"``."""
    if isinstance(value, (int, float)):
        return float(value)
    tree = expr.parse(value)
    extra = expr.variables(tree) - set(ANGLE_CONSTANTS)
    if extra:
        raise ConfigurationError(f"angle {value!r} may only use {sorted(ANGLE_CONSTANTS)}, found {sorted(extra)}")
    result = expr.evaluate(tree, ANGLE_CONSTANTS)
    if result.imag != 0.0:
        raise ConfigurationError(f"angle {value!r} is not real")
    return float(result.real)


def build_contour(config: RunConfig) -> Contour:
    block = config.contour
    if block.preset is not None:
        contour = Contour.from_preset(block.preset)
    else:
        contour = Contour.from_text(block.map, block.derivative)
    if block.reference_angle:
        contour = Contour(map=contour.map, reference_angle=block.reference_angle, name=contour.name)
    return contour


def _pieces(contour: Contour, pieces: list[PieceBlock], jumps: list[Angle]) -> PiecewiseFn:
    return PiecewiseFn.from_expressions(
        contour,
        [(resolve_angle(p.lo), resolve_angle(p.hi), p.expr) for p in pieces],
        [resolve_angle(a) for a in jumps],
    )


def _as_complex(value) -> complex:
    if isinstance(value, (tuple, list)):
        return complex(*value)
    return complex(value)


def build_rhs(contour: Contour, block: RhsBlock) -> PiecewiseFn:
    if block.pieces is not None:
        return _pieces(contour, block.pieces, block.jumps)
    table = pd.read_csv(block.samples)
    missing = {"theta", "re", "im"} - set(table.columns)
    if missing:
        raise ConfigurationError(f"sample file {block.samples} lacks columns {sorted(missing)}")
    return PiecewiseFn.from_samples(
        contour,
        table["theta"].to_numpy(dtype=float),
        table["re"].to_numpy(dtype=float) + 1j * table["im"].to_numpy(dtype=float),
        [resolve_angle(a) for a in block.jumps],
        [_as_complex(v) for v in block.jump_values or []],
    )


def build_exact(contour: Contour, block: ExactBlock | None) -> PiecewiseFn | None:
    if block is None:
        return None
    return _pieces(contour, block.pieces, block.jumps)


def build_quadrature(config: RunConfig) -> QuadratureConfig:
    d = config.discretization
    return QuadratureConfig(N=d.quad_N, oracle_N=d.oracle_N)


def build_discretization(
    config: RunConfig, n_B: int | None = None, rule: str | None = None, basis: str | None = None
) -> Discretization:
    d = config.discretization
    return Discretization(
        n_B=n_B or d.n_B,
        m=d.m,
        quad=build_quadrature(config),
        eps2=d.eps2,
        rule=rule or d.collocation_rule,
        basis=basis or d.basis,
    )


def build_problem(config: RunConfig, n_B: int | None = None) -> Problem:
    """The problem of ``config``; the contour is sampled at 10 points per node of the largest ``n_B`` used."""
    contour = build_contour(config)
    contour.validate(n_B or config.discretization.n_B)
    kernel = Kernel.from_text(config.kernel)
    exact = build_exact(contour, config.exact_solution)
    if config.manufactured:
        return manufactured_problem(
            contour, kernel, config.lam_complex, exact, build_quadrature(config), name=config.name
        )
    rhs = build_rhs(contour, config.rhs)
    return Problem(
        contour=contour, kernel=kernel, lam=config.lam_complex, rhs=rhs, exact_solution=exact, name=config.name
    )
