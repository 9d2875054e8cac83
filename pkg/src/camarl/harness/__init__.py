"""Experiment orchestration: manifests, scale presets, and the CLI."""

from camarl.harness.defaults import DESK, PAPER, config_dict, default_config
from camarl.harness.manifest import (
    ExperimentManifest, new_manifest, read_manifest, write_manifest)
from camarl.harness.cli import build_parser, execute, main

__all__ = [
    "DESK", "PAPER", "ExperimentManifest", "build_parser", "config_dict",
    "default_config", "execute", "main", "new_manifest", "read_manifest",
    "write_manifest",
]
