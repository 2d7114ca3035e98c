"""
Experiment configuration files.

Configs are INI files with one section per concern; every section is optional
and missing keys take the record defaults:

    [model]       ModelSpec fields
    [memories]    seed, cycles (e.g. "0 1 2 | 3 4 5 6"), episode_length
    [simulation]  SimulationSettings fields
    [retrieval]   RetrievalCriterion fields
    [learning]    LearningConfig fields
    [capacity]    CapacitySettings fields; k_values accepts "3..10" or "3 5 7"

See docs/CONFIG.md for the full schema.
"""

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from ..exceptions import ConfigError, InvalidArgumentError
from ..ml.memories import parse_cycles
from ..models.models import (
    CapacitySettings,
    LearningConfig,
    MemorySettings,
    ModelSpec,
    RetrievalCriterion,
    SimulationSettings,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    memories: MemorySettings = field(default_factory=MemorySettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    retrieval: RetrievalCriterion = field(default_factory=RetrievalCriterion)
    learning: LearningConfig = field(default_factory=LearningConfig)
    capacity: CapacitySettings = field(default_factory=CapacitySettings)


_SECTIONS: dict[str, type[BaseModel]] = {
    "model": ModelSpec,
    "memories": MemorySettings,
    "simulation": SimulationSettings,
    "retrieval": RetrievalCriterion,
    "learning": LearningConfig,
    "capacity": CapacitySettings,
}


def parse_int_list(text: str) -> tuple[int, ...]:
    """'3..10' -> (3, ..., 10); '3 5 7' or '3,5,7' -> (3, 5, 7)."""
    text = text.strip()
    try:
        if ".." in text:
            start, stop = text.split("..", 1)
            return tuple(range(int(start), int(stop) + 1))
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError as e:
        raise ConfigError(f"cannot parse integer list '{text}'") from e


def _section_values(name: str, raw: dict[str, str]) -> dict[str, Any]:
    values: dict[str, Any] = {k: v.strip() for k, v in raw.items()}
    if name == "memories" and "cycles" in values:
        try:
            values["cycles"] = tuple(tuple(c) for c in parse_cycles(values["cycles"]))
        except InvalidArgumentError as e:
            raise ConfigError(str(e)) from e
    if name == "capacity":
        for key in ("k_values", "n_f_grid"):
            if key in values:
                values[key] = parse_int_list(values[key])
        if values.get("alpha_s", "").lower() in ("", "none", "default"):
            values.pop("alpha_s", None)
    return values


def _build(name: str, values: dict[str, Any]) -> BaseModel:
    record = _SECTIONS[name]
    unknown = set(values) - set(record.model_fields)
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")
    try:
        return record(**values)
    except ValidationError as e:
        raise ConfigError(f"[{name}]: {e}") from e


def config_from_mapping(sections: dict[str, dict[str, str]]) -> ExperimentConfig:
    """Validate raw section -> key -> text values into an ExperimentConfig."""
    unknown = set(sections) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    built = {name: _build(name, _section_values(name, raw)) for name, raw in sections.items()}
    return ExperimentConfig(**built)


def load_config(path: str | Path) -> ExperimentConfig:
    """
    Read and validate an INI experiment config.

    Raises:
        ConfigError: if the file is missing, unparsable or fails validation
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    config = config_from_mapping(sections)
    logger.debug("loaded config %s with sections %s", path, sorted(sections))
    return config
