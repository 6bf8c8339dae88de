"""Flat key=value configuration, run manifests and bit-stable CSV output.

A config file is plain text: one `key = value` per line, `#` comments,
blank lines ignored. Unknown keys are rejected so typos cannot silently
fall back to defaults. All energies are GHz, times ns, temperatures K.
"""

import hashlib
from dataclasses import dataclass, field, fields

from .model import FineStructureParams
from .motional import DEFAULT_ACTIVATION_MEV, DEFAULT_ATTEMPT_RATE, TemperatureMap
from .photodynamics import RateParams

ARTIFACT_VERSION = "0.1.0"


class ConfigError(Exception):
    pass


def _defaults():
    out = {}
    for f in fields(FineStructureParams):
        out[f.name] = float(f.default)
    for f in fields(RateParams):
        out[f.name] = float(f.default)
    out["hop_attempt_rate"] = DEFAULT_ATTEMPT_RATE
    out["hop_activation_mev"] = DEFAULT_ACTIVATION_MEV
    out["strain_min"] = 0.0
    out["strain_max"] = 20.0
    out["strain_points"] = 801
    out["output_dir"] = "."
    return out


@dataclass
class Config:
    """Resolved configuration: model parameters, photodynamics rates,
    hop-rate Arrhenius map, sweep grid and output directory."""

    values: dict = field(default_factory=_defaults)

    def __getitem__(self, key):
        return self.values[key]

    def fine_structure(self):
        names = {f.name for f in fields(FineStructureParams)}
        return FineStructureParams(**{k: self.values[k] for k in names})

    def rates(self):
        names = {f.name for f in fields(RateParams)}
        return RateParams(**{k: self.values[k] for k in names})

    def temperature_map(self):
        return TemperatureMap(r0=self.values["hop_attempt_rate"],
                              ea=self.values["hop_activation_mev"])

    def strain_grid(self):
        import numpy as np
        n = int(self.values["strain_points"])
        if n < 2:
            raise ConfigError("strain_points must be >= 2")
        return np.linspace(self.values["strain_min"],
                           self.values["strain_max"], n)

    def dump(self):
        """Key-sorted text snapshot; reloading it reproduces the config."""
        lines = []
        for k in sorted(self.values):
            v = self.values[k]
            lines.append(f"{k} = {v!r}" if isinstance(v, float)
                         else f"{k} = {v}")
        return "\n".join(lines) + "\n"


def parse_config(text, base=None):
    """Parse key=value text over the defaults (or over `base`)."""
    cfg = Config(dict(_defaults() if base is None else base.values))
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, "
                              f"got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in cfg.values:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        old = cfg.values[key]
        try:
            if isinstance(old, int) and not isinstance(old, bool):
                cfg.values[key] = int(value)
            elif isinstance(old, float):
                cfg.values[key] = float(value)
            else:
                cfg.values[key] = value
        except ValueError as err:
            raise ConfigError(
                f"line {lineno}: bad value for {key}: {value!r}") from err
    return cfg


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err


def format_number(x):
    """Locale-independent, 9-significant-digit decimal rendering."""
    return f"{float(x):#.9g}"


def write_csv(path, header, rows):
    """Comma-separated output: header first, every number printed with 9
    significant digits, lines terminated by a single line feed."""
    ncol = len(header)
    out = [",".join(header)]
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise ValueError(f"row {i} has {len(row)} fields, "
                             f"expected {ncol}")
        out.append(",".join(
            format_number(v) if isinstance(v, (int, float)) and
            not isinstance(v, bool) else str(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record emitted next to every output set."""

    command: str
    config: Config
    inputs: dict = field(default_factory=dict)    # path -> sha256
    outputs: list = field(default_factory=list)

    def render(self):
        lines = [f"command = {self.command}",
                 f"version = {ARTIFACT_VERSION}"]
        for path in sorted(self.inputs):
            lines.append(f"input {path} sha256 {self.inputs[path]}")
        for path in self.outputs:
            lines.append(f"output {path}")
        lines.append("[config]")
        lines.append(self.config.dump().rstrip("\n"))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
