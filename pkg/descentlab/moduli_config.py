#!/usr/bin/env python3
"""
DESCENTLAB - CONFIGURATION
Centralizes every limit, default sample and tolerance used by the oracles.
Values come from the dataclass defaults below, optionally overlaid by
config.json and by the DESCENTLAB_OUTPUT_DIR environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv


DEFAULT_CONFIG_FILE = Path(__file__).resolve().parent.parent / "config.json"
OUTPUT_DIR_ENV = "DESCENTLAB_OUTPUT_DIR"


# ============================================================================
# ENUMERATION
# ============================================================================

@dataclass
class EnumerationLimits:
    """Caps on brute-force universes"""

    FIELD_CAP: int = 10**7
    DEFAULT_GRID_SIZE: int = 3


# ============================================================================
# AXIOM AUDITS
# ============================================================================

@dataclass
class AuditDefaults:
    """Scalar samples for D3, translation and homogeneity audits"""

    SCALE_SET: Tuple[Fraction, ...] = (Fraction(3, 2), Fraction(2), Fraction(5))
    SHIFT_SET: Tuple[Fraction, ...] = (Fraction(-1), Fraction(1, 2), Fraction(3))
    HOMOGENEITY_SCALES: Tuple[Fraction, ...] = (Fraction(1, 2), Fraction(2), Fraction(3))
    C3_STEPS: int = 4  # sampled deltas in (0, r-1] for the (c3) form


# ============================================================================
# CLASSIFICATION
# ============================================================================

@dataclass
class ClassificationDefaults:
    """Subset enumeration cap and Z2 probes"""

    SUBSET_CAP: int = 16
    Z2_PROBES: Tuple[Fraction, ...] = (Fraction(1, 2), Fraction(2))


# ============================================================================
# MARKOV
# ============================================================================

@dataclass
class MarkovDefaults:
    """Simulation horizon, run counts and tolerance"""

    HORIZON: float = 50.0
    RUNS: int = 10**5
    TV_TOLERANCE: float = 0.02
    BATCHES: int = 8


# ============================================================================
# EXACT ARITHMETIC
# ============================================================================

@dataclass
class ExactDefaults:
    """Precision of interval enclosures for irrational values"""

    INTERVAL_BITS: int = 96


# ============================================================================
# DISPERSION
# ============================================================================

@dataclass
class DispersionDefaults:
    """Radius sweep and quadrature settings"""

    SWEEP_START: float = 0.25
    SWEEP_RATIO: float = 0.5
    SWEEP_RADII: int = 6
    TAIL: int = 2
    MIN_CELLS: int = 2
    MIN_RESOLUTION: int = 16
    FD_STEP: float = 1e-5
    CONVERGENCE_TOLERANCE: float = 0.02
    MC_SAMPLES: int = 10**6


# ============================================================================
# OUTPUT / LOGGING
# ============================================================================

@dataclass
class OutputDefaults:
    """Where reports are written"""

    OUTPUT_DIR: str = "results"
    FORMAT: str = "json"


@dataclass
class LoggingDefaults:
    """Log level and optional rotating log file"""

    LEVEL: str = "INFO"
    FILE: Optional[str] = None
    MAX_SIZE_MB: int = 10
    BACKUP_COUNT: int = 3


# ============================================================================
# GLOBAL CONFIGURATION
# ============================================================================

def _encode(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    return value


def _decode(current: Any, raw: Any) -> Any:
    """Coerce a JSON value to the type of the default it replaces."""
    if isinstance(current, tuple):
        return tuple(Fraction(str(v)) for v in raw)
    if isinstance(current, bool):
        return bool(raw)
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


class ModuliConfig:
    """Aggregated configuration"""

    SECTIONS = (
        "enumeration",
        "audit",
        "classification",
        "markov",
        "exact",
        "dispersion",
        "output",
        "logging",
    )

    def __init__(self):
        self.enumeration = EnumerationLimits()
        self.audit = AuditDefaults()
        self.classification = ClassificationDefaults()
        self.markov = MarkovDefaults()
        self.exact = ExactDefaults()
        self.dispersion = DispersionDefaults()
        self.output = OutputDefaults()
        self.logging = LoggingDefaults()

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """Export as a JSON-ready dict (rationals as "p/q")"""
        return {
            name: {k: _encode(v) for k, v in getattr(self, name).__dict__.items()}
            for name in self.SECTIONS
        }

    def update_from_dict(self, data: Dict[str, Any]) -> None:
        for name, values in data.items():
            if name.startswith("_") or name not in self.SECTIONS:
                continue
            section = getattr(self, name)
            known = {f.name for f in fields(section)}
            for key, raw in values.items():
                if key.startswith("_") or key not in known:
                    continue
                setattr(section, key, _decode(getattr(section, key), raw))

    def validate(self) -> Tuple[bool, List[str]]:
        """
        Check ranges of every section

        Returns:
            (is_valid, problems)
        """
        problems: List[str] = []
        if self.enumeration.FIELD_CAP < 1:
            problems.append("enumeration.FIELD_CAP must be positive")
        if self.enumeration.DEFAULT_GRID_SIZE < 1:
            problems.append("enumeration.DEFAULT_GRID_SIZE must be positive")
        if any(r <= 1 for r in self.audit.SCALE_SET):
            problems.append("audit.SCALE_SET entries must exceed 1")
        if any(r <= 0 for r in self.audit.HOMOGENEITY_SCALES):
            problems.append("audit.HOMOGENEITY_SCALES entries must be positive")
        if any(r <= 0 for r in self.classification.Z2_PROBES):
            problems.append("classification.Z2_PROBES entries must be positive")
        if self.exact.INTERVAL_BITS < 64:
            problems.append("exact.INTERVAL_BITS must be at least 64")
        if not 0 < self.dispersion.SWEEP_RATIO < 1:
            problems.append("dispersion.SWEEP_RATIO must lie in (0, 1)")
        if self.dispersion.SWEEP_RADII < 4:
            problems.append("dispersion.SWEEP_RADII must be at least 4")
        if not 1 <= self.dispersion.TAIL <= self.dispersion.SWEEP_RADII:
            problems.append("dispersion.TAIL must lie in [1, SWEEP_RADII]")
        if self.dispersion.MIN_RESOLUTION < 16:
            problems.append("dispersion.MIN_RESOLUTION must be at least 16")
        if self.output.FORMAT not in ("json", "csv"):
            problems.append("output.FORMAT must be json or csv")
        return (not problems, problems)


def load_config(path: Optional[Path] = None, config: Optional[ModuliConfig] = None) -> ModuliConfig:
    """
    Overlay config.json and the environment onto the defaults

    Args:
        path: JSON file; missing files leave the defaults untouched
        config: instance to update (a fresh one if omitted)
    """
    config = config or ModuliConfig()
    path = Path(path) if path else DEFAULT_CONFIG_FILE
    if path.exists():
        with open(path, "r", encoding="utf-8") as handle:
            config.update_from_dict(json.load(handle))
    load_dotenv()
    env_dir = os.getenv(OUTPUT_DIR_ENV)
    if env_dir:
        config.output.OUTPUT_DIR = env_dir
    return config


def save_config(path: Path, config: Optional[ModuliConfig] = None) -> None:
    config = config or CONFIG
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config.to_dict(), handle, indent=4)


# ============================================================================
# GLOBAL INSTANCE
# ============================================================================

CONFIG = load_config()


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("🔧 DESCENTLAB - CONFIGURATION")
    print("=" * 60 + "\n")

    ok, issues = CONFIG.validate()
    for issue in issues:
        print(f"❌ {issue}")
    if ok:
        print("✅ Configuration valid")
        for section, values in CONFIG.to_dict().items():
            print(f"\n📋 {section}:")
            for key, value in values.items():
                print(f"   {key}: {value}")

    print("\n" + "=" * 60 + "\n")
