"""Configuration loading and result files."""

from .config import ConfigError, RunConfig, apply_overrides, load_config, loads
from .outputs import read_csv, write_csv, write_json, write_manifest

__all__ = ["ConfigError", "RunConfig", "apply_overrides", "load_config", "loads",
           "read_csv", "write_csv", "write_json", "write_manifest"]
