"""Experiment configuration: parsing, validation, and resolution.

A config is a JSON object with up to three sections:

* ``metric``    -- {"name": ..., "s": optional override, "params": {...}}
* ``source``    -- one of {"inline": [...]}, {"generator": {...}},
                   {"csv": "path"}, {"orbit": {...}}
* ``parameters`` -- seed, tail window, delta grid, search grids, explicit
                   witness, axiom sampler, solver settings, contraction.

Everything is optional except what the invoked command needs; missing or
contradictory pieces raise :class:`ConfigError`, which the CLI maps to its
configuration exit code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .certificates import delta_grid
from .contractions import Contraction, iterate, make_contraction
from .errors import CauchyCertError, ConfigError
from .metrics import DbMetric, Point, SamplerConfig, make_metric
from .sequences import (
    SearchConfig,
    SequencePrefix,
    ShiftWitness,
    TailConfig,
    make_sequence,
)


def load_config_text(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    return data


def read_csv_points(path: str, header: bool = False) -> list[list[float]]:
    """One point per row, comma-separated coordinates; malformed rows are
    hard errors reported with their line number."""
    rows: list[list[float]] = []
    width: Optional[int] = None
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read csv {path!r}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            if header and lineno == 1:
                continue
            line = raw.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                row = [float(c) for c in cells]
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: malformed row {line!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ConfigError(
                    f"{path}:{lineno}: expected {width} coordinates, got {len(row)}"
                )
            rows.append(row)
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least 2 points, got {len(rows)}")
    return rows


@dataclass
class Experiment:
    """A parsed config plus lazily resolved pieces the commands pull from."""

    raw: dict
    seed: int

    # -- metric ------------------------------------------------------------
    def metric(self) -> DbMetric:
        section = self.raw.get("metric")
        if not isinstance(section, dict) or "name" not in section:
            raise ConfigError('config needs a "metric" object with a "name"')
        params = section.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError('"metric.params" must be an object')
        try:
            return make_metric(section["name"], s=section.get("s"), **params)
        except CauchyCertError as exc:
            raise ConfigError(str(exc)) from exc
        except TypeError as exc:
            raise ConfigError(f"bad metric parameters: {exc}") from exc

    # -- sequence source ---------------------------------------------------
    def sequence(self, metric: DbMetric, csv_header: bool = False) -> SequencePrefix:
        section = self.raw.get("source")
        if not isinstance(section, dict) or len(section) != 1:
            raise ConfigError(
                'config needs a "source" object with exactly one of '
                '"inline", "generator", "csv", "orbit"'
            )
        (kind, spec), = section.items()
        try:
            if kind == "inline":
                return SequencePrefix.from_values(spec, metric)
            if kind == "generator":
                if not isinstance(spec, dict) or "name" not in spec:
                    raise ConfigError('"source.generator" needs a "name"')
                return make_sequence(spec["name"], metric, **spec.get("params", {}))
            if kind == "csv":
                return SequencePrefix.from_values(read_csv_points(spec, csv_header), metric)
            if kind == "orbit":
                if not isinstance(spec, dict):
                    raise ConfigError('"source.orbit" must be an object')
                f = self._contraction_from(spec.get("contraction"))
                n = spec.get("n")
                if not isinstance(n, int) or n < 2:
                    raise ConfigError('"source.orbit.n" must be an integer >= 2')
                x0 = Point(spec.get("x0", 0.0))
                return iterate(f, x0, n, metric).sequence
        except ConfigError:
            raise
        except (CauchyCertError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown source kind {kind!r}")

    # -- parameters --------------------------------------------------------
    def _params(self) -> dict:
        params = self.raw.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError('"parameters" must be an object')
        return params

    def tail(self) -> TailConfig:
        spec = self._params().get("tail", {})
        try:
            return TailConfig(tau=spec.get("tau", 0.5), eps=spec.get("eps", 1e-6))
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"bad tail parameters: {exc}") from exc

    def deltas(self) -> list[float]:
        spec = self._params().get("delta_grid", {})
        if not isinstance(spec, dict):
            raise ConfigError('"parameters.delta_grid" must be an object')
        if "values" in spec:
            values = spec["values"]
            if not values or any(not isinstance(v, (int, float)) or v <= 0 for v in values):
                raise ConfigError("explicit delta values must be positive numbers")
            return [float(v) for v in values]
        try:
            return delta_grid(spec.get("delta0", 0.5), spec.get("levels", 7))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def explicit_deltas(self) -> bool:
        return "values" in self._params().get("delta_grid", {})

    def search(self) -> SearchConfig:
        spec = self._params().get("search", {})
        try:
            return SearchConfig(
                p_max=spec.get("p_max", 8),
                lambdas=tuple(spec.get("lambdas", SearchConfig.lambdas)),
                n0_values=(
                    tuple(spec["n0_values"]) if "n0_values" in spec else None
                ),
            )
        except (ValueError, AttributeError, TypeError) as exc:
            raise ConfigError(f"bad search parameters: {exc}") from exc

    def witness_for(self, delta: float) -> Optional[ShiftWitness]:
        """Explicit witness parameters from the config, applied at ``delta``."""
        spec = self._params().get("witness")
        if spec is None:
            return None
        try:
            return ShiftWitness(
                delta=delta,
                p=spec["p"],
                lam=spec.get("lambda", 0.5),
                n0=spec.get("n0", 1),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad witness parameters: {exc}") from exc

    def sampler(self) -> SamplerConfig:
        spec = self._params().get("axioms", {})
        box = spec.get("box", [0.0, 10.0])
        if not (isinstance(box, (list, tuple)) and len(box) == 2):
            raise ConfigError('"parameters.axioms.box" must be [low, high]')
        try:
            return SamplerConfig(
                pair_count=spec.get("pair_count", 200),
                triple_count=spec.get("triple_count", 200),
                seed=self.seed,
                box_low=float(box[0]),
                box_high=float(box[1]),
                grid_points=spec.get("grid_points", 11),
            )
        except ValueError as exc:
            raise ConfigError(f"bad axiom sampler parameters: {exc}") from exc

    def _contraction_from(self, spec) -> Contraction:
        if not isinstance(spec, dict) or "name" not in spec:
            raise ConfigError('a contraction spec needs a "name"')
        try:
            return make_contraction(spec["name"], **spec.get("params", {}))
        except CauchyCertError as exc:
            raise ConfigError(str(exc)) from exc
        except TypeError as exc:
            raise ConfigError(f"bad contraction parameters: {exc}") from exc

    def contraction(self) -> Contraction:
        return self._contraction_from(self._params().get("contraction"))

    def solver_settings(self) -> dict:
        spec = self._params().get("solver", {})
        if not isinstance(spec, dict):
            raise ConfigError('"parameters.solver" must be an object')
        return spec


def make_experiment(raw: dict, seed_override: Optional[int] = None) -> Experiment:
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError('"parameters" must be an object')
    seed = params.get("seed", 0)
    if seed_override is not None:
        seed = seed_override
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    # Echo the effective seed so the recorded config is self-contained.
    echoed = dict(raw)
    echoed["parameters"] = dict(params)
    echoed["parameters"]["seed"] = seed
    return Experiment(raw=echoed, seed=seed)
