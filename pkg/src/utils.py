import json
import yaml
from pathlib import Path
from typing import Any, Dict

VALID_PROFILES = {"quick", "standard", "ablation"}


def load_context_config(profile: str, config_dir: str = "config") -> Dict[str, Any]:
    """
    Load solver configuration from a YAML or JSON file.

    Supports:
      - .yaml/.yml OR .json (but not both)
      - base.yaml merged with the profile config
      - Only 'quick', 'standard', or 'ablation' profiles are valid

    Raises:
      - ValueError if profile is invalid or multiple config files exist
      - FileNotFoundError if expected config file not found
    """

    if profile not in VALID_PROFILES:
        raise ValueError(
            f"Invalid profile '{profile}'. "
            f"Must be one of: {', '.join(sorted(VALID_PROFILES))}"
        )

    base_path = Path(config_dir) / "base.yaml"
    profile_yaml = Path(config_dir) / f"{profile}.yaml"
    profile_yml = Path(config_dir) / f"{profile}.yml"
    profile_json = Path(config_dir) / f"{profile}.json"

    base_config = {}
    if base_path.exists():
        base_config = read_config_file(base_path)

    profile_files = [
        p for p in [profile_yaml, profile_yml, profile_json] if p.exists()
    ]

    if not profile_files:
        raise FileNotFoundError(
            f"No config file found for profile '{profile}' "
            f"in {config_dir}. Expected one of: {profile_yaml}, {profile_yml}, {profile_json}"
        )

    if len(profile_files) > 1:
        raise ValueError(
            f"Multiple config files found for profile '{profile}': {profile_files}. "
            f"Use only one (.yaml/.yml OR .json)."
        )

    profile_config = read_config_file(profile_files[0])
    return {**base_config, **profile_config}


def read_config_file(path: Path) -> Dict[str, Any]:
    """Read YAML or JSON file into a dictionary."""
    with open(path, "r") as f:
        if path.suffix in (".yaml", ".yml"):
            return yaml.safe_load(f) or {}
        elif path.suffix == ".json":
            return json.load(f)
        else:
            raise ValueError(f"Unsupported config file type: {path.suffix}")
