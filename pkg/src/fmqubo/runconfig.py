"""Run configuration: INI files, flag overrides, and provenance hashing.

A run is configured by an INI file with sections [run], [train], and
[anneal]; command-line flags override file values key by key.  Unknown
sections or keys are rejected by name so typos fail loudly.  The fully
resolved configuration has a stable hash that is embedded in every
output CSV.
"""

from __future__ import annotations

import configparser
import hashlib

from .anneal import AnnealConfig
from .errors import ValidationError
from .fm import TrainConfig

__all__ = [
    "RUN_KEYS",
    "TRAIN_KEYS",
    "ANNEAL_KEYS",
    "load_config_file",
    "merge_overrides",
    "build_train_config",
    "build_anneal_config",
    "scenario_train_defaults",
    "parse_number_list",
    "parse_int_list",
    "config_hash",
]

RUN_KEYS = {
    "scenario", "data", "box", "combo", "algorithm", "n_values", "m_values",
    "seeds", "n_init", "m_slack", "n_test", "i_max", "epsilon", "warm_start",
    "skip_duplicates", "out", "figures",
}
TRAIN_KEYS = {
    "rank", "rank3", "learning_rate", "epochs", "batch_size", "beta1",
    "beta2", "init_scale", "tolerance", "patience",
}
ANNEAL_KEYS = {"num_reads", "num_sweeps", "t_initial", "t_final", "schedule"}

_SECTIONS = {"run": RUN_KEYS, "train": TRAIN_KEYS, "anneal": ANNEAL_KEYS}


def load_config_file(path) -> dict[str, dict[str, str]]:
    """Parse an INI config into {section: {key: raw string}}."""
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"bad config file {path}: {exc}")
    out: dict[str, dict[str, str]] = {}
    bad: list[str] = []
    for section in parser.sections():
        if section not in _SECTIONS:
            bad.append(f"[{section}]")
            continue
        out[section] = {}
        for key, value in parser.items(section):
            if key not in _SECTIONS[section]:
                bad.append(f"{section}.{key}")
            else:
                out[section][key] = value.strip()
    if bad:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(bad))}")
    return out


def merge_overrides(
    config: dict[str, dict[str, str]], overrides: dict[str, dict[str, str]]
) -> dict[str, dict[str, str]]:
    """Layer non-None override values on top of file values."""
    out = {s: dict(config.get(s, {})) for s in _SECTIONS}
    for section, values in overrides.items():
        for key, value in values.items():
            if value is None:
                continue
            if key not in _SECTIONS[section]:
                raise ValidationError(f"unknown config key {section}.{key}")
            out[section][key] = str(value)
    return out


def _convert(section: str, key: str, raw: str, kind, default):
    if raw is None:
        return default
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"bad value for {section}.{key}: {raw!r}")


def build_train_config(section: dict[str, str]) -> TrainConfig:
    g = lambda key, kind, default: _convert(
        "train", key, section.get(key), kind, default
    )
    rank3_raw = section.get("rank3")
    return TrainConfig(
        rank=g("rank", int, 8),
        rank3=None if rank3_raw in (None, "", "none") else
        _convert("train", "rank3", rank3_raw, int, None),
        learning_rate=g("learning_rate", float, 0.003),
        epochs=g("epochs", int, 500),
        batch_size=g("batch_size", int, 32),
        beta1=g("beta1", float, 0.0),
        beta2=g("beta2", float, 0.0),
        init_scale=g("init_scale", float, 0.01),
        tolerance=g("tolerance", float, 1e-6),
        patience=g("patience", int, 10),
    )


def build_anneal_config(section: dict[str, str]) -> AnnealConfig:
    g = lambda key, kind, default: _convert(
        "anneal", key, section.get(key), kind, default
    )
    t_initial = section.get("t_initial")
    t_final = section.get("t_final")
    return AnnealConfig(
        num_reads=g("num_reads", int, 5000),
        num_sweeps=g("num_sweeps", int, 1000),
        t_initial=None if t_initial in (None, "", "auto") else
        _convert("anneal", "t_initial", t_initial, float, None),
        t_final=None if t_final in (None, "", "auto") else
        _convert("anneal", "t_final", t_final, float, None),
        schedule=g("schedule", str, "geometric"),
    )


def scenario_train_defaults(scenario: str) -> dict[str, str]:
    """Per-scenario training presets (rank and regularization weights).

    Applied beneath file/flag values, so explicit settings win.
    """
    if scenario == "1":
        return {"rank": "4", "beta1": "0.02", "beta2": "0.003"}
    if scenario == "2":
        return {"rank": "8", "beta1": "0.015", "beta2": "0.002"}
    return {}


def parse_number_list(text: str) -> list[float]:
    """Comma-separated numbers, or lo:hi for an inclusive integer range."""
    text = text.strip()
    if not text:
        raise ValidationError("empty value list")
    if ":" in text and "," not in text:
        lo, _, hi = text.partition(":")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ValidationError(f"bad range {text!r}")
        if hi_i < lo_i:
            raise ValidationError(f"empty range {text!r}")
        return [float(v) for v in range(lo_i, hi_i + 1)]
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValidationError(f"bad number list {text!r}")


def parse_int_list(text: str) -> list[int]:
    values = parse_number_list(text)
    out = []
    for v in values:
        if not float(v).is_integer():
            raise ValidationError(f"expected integers, got {v}")
        out.append(int(v))
    return out


def config_hash(resolved: dict[str, dict[str, str]]) -> str:
    """Stable short hash of the fully resolved configuration."""
    parts = []
    for section in sorted(resolved):
        for key in sorted(resolved[section]):
            parts.append(f"{section}.{key}={resolved[section][key]}")
    digest = hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()
    return digest[:16]
