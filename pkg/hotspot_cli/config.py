"""
Configuration management for the hotspot CLI.

Precedence, lowest to highest: built-in defaults, environment (HOTSPOT_SEED,
HOTSPOT_PERMUTATIONS), config file, command-line flags.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from hotspot_cli.errors import ValidationError

logger = logging.getLogger(__name__)

ENV_OVERRIDES = {
    "HOTSPOT_SEED": "seed",
    "HOTSPOT_PERMUTATIONS": "permutations",
}


Quadrant = Literal["HH", "HL", "LH", "LL"]


class PipelineConfig(BaseModel):
    """Parameters of one end-to-end run. Input paths are checked when the run starts."""

    model_config = ConfigDict(extra="forbid")

    crashes: Optional[str] = None
    highg: Optional[str] = None
    pois: Optional[str] = None
    bbox: Optional[Tuple[float, float, float, float]] = None
    cell_size: float = Field(400.0, gt=0)
    weights: Literal["queen", "rook"] = "queen"
    permutations: int = Field(999, ge=1)
    seed: int = 42
    alternative: Literal["directional", "two-sided"] = "directional"
    lisa_alpha: float = Field(0.05, gt=0, lt=1)
    mw_alpha: float = Field(0.05, gt=0, lt=1)
    group_a: Quadrant = "HH"
    # Each entry is compared against group_a in its own Mann-Whitney table.
    group_b: List[Quadrant] = Field(default_factory=lambda: ["LH"])
    output_dir: str = "hotspot_output"

    @field_validator("group_b", mode="before")
    @classmethod
    def _one_or_many(cls, value: Any) -> Any:
        return [value] if isinstance(value, str) else value

    @model_validator(mode="after")
    def _distinct_groups(self) -> "PipelineConfig":
        if not self.group_b:
            raise ValueError("group_b needs at least one LISA group")
        if self.group_a in self.group_b:
            raise ValueError(f"group_b must not contain group_a ({self.group_a})")
        if len(set(self.group_b)) != len(self.group_b):
            raise ValueError("group_b lists a LISA group more than once")
        return self


def get_config_path(explicit: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """Get the path to the configuration file, or None when there is none."""
    if explicit:
        path = Path(explicit)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        return path

    if os.environ.get("HOTSPOT_CONFIG_PATH"):
        return Path(os.environ["HOTSPOT_CONFIG_PATH"])

    locations = [
        Path.cwd() / "hotspot.yaml",
        Path.cwd() / "hotspot.yml",
        Path.cwd() / "hotspot.json",
        Path.home() / ".config" / "hotspot-cli" / "config.yaml",
    ]
    for location in locations:
        if location.exists():
            return location
    return None


def load_environment() -> None:
    """Load environment variables from a .env file (DOTENV_PATH, else ./.env)."""
    env_path = os.environ.get("DOTENV_PATH")
    if env_path:
        load_dotenv(env_path)
    elif (Path.cwd() / ".env").exists():
        load_dotenv(Path.cwd() / ".env")


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML or JSON config document into a plain dict."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read config file {path}: {e}")
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ValidationError(f"error loading config file {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"config file {path} must hold a mapping at the top level")
    return data


def deep_merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    """Deep merge two dictionaries."""
    result = base.copy()
    for key, value in updates.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = value
    return result


def env_overrides() -> Dict[str, Any]:
    values = {}
    for var, field in ENV_OVERRIDES.items():
        raw = os.environ.get(var)
        if raw:
            try:
                values[field] = int(raw)
            except ValueError:
                raise ValidationError(f"{var} must be an integer, got {raw!r}")
    return values


def build_config(data: Dict[str, Any]) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(data)
    except PydanticValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ValidationError(f"invalid configuration: {problems}")


def get_config(
    config_path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None
) -> PipelineConfig:
    """
    Get the effective configuration by combining:
    1. Built-in defaults
    2. Environment variables
    3. Config file (explicit path or discovered)
    4. Flag overrides; None values mean "not given"
    """
    load_environment()
    data = env_overrides()
    path = get_config_path(config_path)
    if path is not None:
        logger.debug("loading configuration from %s", path)
        data = deep_merge(data, load_config_file(path))
    if overrides:
        data = deep_merge(data, {k: v for k, v in overrides.items() if v is not None})
    return build_config(data)


def save_config(config: PipelineConfig, path: Union[str, Path]) -> None:
    """Write a config in the format its suffix names (.json, else YAML)."""
    path = Path(path)
    data = config.model_dump(mode="json")
    if path.suffix == ".json":
        path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")


DEFAULT_CONFIG_YAML = """# hotspot-cli configuration
# Every field can also be given as a command-line flag; flags win over this file.

# Input point files (CSV with x,y columns; POIs need kind,x,y)
crashes: crashes.csv
highg: highg.csv
pois: null

# Grid: bbox is [min_x, min_y, max_x, max_y] in projected meters.
# Leave it null to cover all crash and high-G points.
bbox: null
cell_size: 400

# Contiguity: queen or rook
weights: queen

# Permutation inference
permutations: 999
seed: 42
alternative: directional  # directional or two-sided

# Significance levels
lisa_alpha: 0.05
mw_alpha: 0.05

# Mann-Whitney comparison groups (HH, HL, LH, LL): group_a against each group_b
group_a: HH
group_b: [LH]

output_dir: hotspot_output
"""


def create_default_config(path: Optional[Union[str, Path]] = None, force: bool = False) -> Path:
    """
    Create a default hotspot.yaml.

    Raises:
        ValidationError: If the file already exists and `force` is not set
    """
    config_path = Path(path) if path else Path.cwd() / "hotspot.yaml"
    if config_path.exists() and not force:
        raise ValidationError(f"config file already exists at {config_path} (use --force to overwrite)")
    config_path.write_text(DEFAULT_CONFIG_YAML, encoding="utf-8")
    return config_path
