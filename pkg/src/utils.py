"""
Configuration loading and input-file readers shared by the CLI.
"""

import copy
import json
from pathlib import Path
from typing import Optional, Dict, Any

from src.errors import ParseError
from src.hardness import CompInstance, HardInstance
from src.market import ProductDistribution, Menu

DEFAULT_CONFIG: Dict[str, Any] = {
    "budgets": {
        "valuations": 4096,
        "allocations": 1048576,
        "allocations_long": 16777216,
        "lp_variables": 400,
        "lp_constraints": 4000,
        "constk_subsets": 2000000,
        "constk_max_items": 3,
        "tstar_subsets": 1000000,
    },
    "output": {
        "decimal_digits": 12,
        "output_dir": "output",
        "export_csv": True,
    },
    "hardness": {
        "direct_eval_max_n": 4,
        "threshold_max_n": 12,
        "samples_per_n": 10,
        "seed": 2017,
    },
    "verbosity": {
        "log_level": "INFO",
        "show_memory_usage": True,
        "show_search_stats": False,
    },
    "workers": 1,
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[Path] = None) -> Dict[str, Any]:
    """
    Load configuration from JSON file over the built-in defaults.

    Args:
        config_path: Path to config file (default: config.json in current directory,
            silently skipped when absent)

    Returns:
        Configuration dictionary

    Raises:
        ParseError: If an explicitly given file is missing or any file is not valid JSON
    """
    explicit = config_path is not None
    if config_path is None:
        config_path = Path("config.json")

    if not config_path.exists():
        if explicit:
            raise ParseError(f"Config file not found: {config_path}")
        return copy.deepcopy(DEFAULT_CONFIG)

    return _merge(DEFAULT_CONFIG, read_json(config_path))


def apply_overrides(
    config: Dict[str, Any],
    budget_allocations: Optional[int] = None,
    budget_lp: Optional[int] = None,
    max_items: Optional[int] = None,
    workers: Optional[int] = None,
    decimal_digits: Optional[int] = None,
) -> Dict[str, Any]:
    """
    Write CLI flag values into the config in place.

    Args:
        config: Loaded configuration
        budget_allocations: Allocation-map budget (both normal and long)
        budget_lp: Budget on LP variables and on LP constraints
        max_items: Largest item count for the constant-k solver
        workers: joblib workers
        decimal_digits: Significant digits of decimal annotations

    Returns:
        The same dictionary
    """
    for name, value in (("budget_allocations", budget_allocations), ("budget_lp", budget_lp),
                        ("max_items", max_items), ("workers", workers), ("decimal_digits", decimal_digits)):
        if value is not None and value < 1:
            raise ParseError(f"--{name.replace('_', '-')} must be positive, got {value}")

    budgets = config.setdefault("budgets", {})
    if budget_allocations is not None:
        budgets["allocations"] = budget_allocations
        budgets["allocations_long"] = budget_allocations
    if budget_lp is not None:
        budgets["lp_variables"] = budget_lp
        budgets["lp_constraints"] = budget_lp
    if max_items is not None:
        budgets["constk_max_items"] = max_items
    if workers is not None:
        config["workers"] = workers
    if decimal_digits is not None:
        config.setdefault("output", {})["decimal_digits"] = decimal_digits
    return config


def budget(config: Dict[str, Any], key: str) -> int:
    return config.get("budgets", {}).get(key, DEFAULT_CONFIG["budgets"][key])


def read_json(path: Path) -> Any:
    """
    Read a JSON document.

    Raises:
        ParseError: If the file is missing or malformed
    """
    if not path.exists():
        raise ParseError(f"File not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from e


def load_instance(path: Path) -> ProductDistribution:
    return ProductDistribution.from_dict(read_json(path))


def load_menu(path: Path) -> Menu:
    return Menu.from_dict(read_json(path))


def load_comp(path: Path) -> CompInstance:
    return CompInstance.from_dict(read_json(path))


def load_hard_instance(path: Path) -> HardInstance:
    """Read a hard instance, either bare or wrapped in a build-hard-instance report."""
    data = read_json(path)
    if isinstance(data, dict) and "schema_version" in data:
        if data.get("command") != "build-hard-instance":
            raise ParseError(f"{path} is a {data.get('command')} report, not a hard instance")
        data = data.get("result", {})
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return HardInstance.from_dict(data)
