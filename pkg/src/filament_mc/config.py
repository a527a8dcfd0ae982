"""Run configuration: TOML-style files, validation, and derived objects.

The config format is a strict subset of TOML (flat [section] tables holding
strings, numbers, booleans and scalar lists) read and written by this
module, so files round-trip identically: parse -> serialize -> parse is the
identity on the parsed mapping.  Every file carries a versioned `schema`
field.

Section reference (defaults in parentheses):

  schema = 1
  [run]           process = "bm" | "bridge" | "sde"; T (1.0); steps (4096);
                  samples (10000); master_seed (20260810); workers (0 = auto,
                  else FILAMENT_MC_THREADS or cpu count); x0 ([0,0,0]);
                  drift = "zero" | "bridge" (sde only)
  [cross_section] type = "gaussian" (sigma)| "uniform_ball" (radius)
                  | "cantor_product" (depth, ratio, scale) | "point"; mass
  [kgrid]         n_radial (64); n_theta (16); n_phi (32); q_min/q_max
                  (0 = auto: [1e-3, 40]/length-scale)
  [gibbs]         betas (list); energy = "H" | "H_tilde"
  [spectrum]      beta (0.0)
  [interact]      pairs (64); separation (0.0); mode = "tanaka_rosen"
                  | "direct_mollified" | "both"; eps (0 = sqrt(dt))
  [verify]        overrides for check sample sizes (see verify module)

JSONL record schema (one line per sample, emitted by `energy`):
  {"sample_index": int, "H": float, "H_tilde": float, "diff_spectral": float,
   "diff_closed_form": float, "displacement": [x, y, z],
   "displacement_norm": float, "bound_D": float, "shells": [S_1 .. S_R]}
"""

import copy

import numpy as np

from .cross_section import CrossSection
from .gibbs import EnsembleSpec
from .kgrid import build_kgrid
from .paths import DriftModel, TimeGrid

__all__ = ["ConfigError", "parse_toml", "dump_toml", "default_config",
           "load_config", "RunConfig"]

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema": SCHEMA_VERSION,
    "run": {
        "process": "bm",
        "T": 1.0,
        "steps": 4096,
        "samples": 10000,
        "master_seed": 20260810,
        "workers": 0,
        "x0": [0.0, 0.0, 0.0],
        "drift": "zero",
    },
    "cross_section": {
        "type": "gaussian",
        "sigma": 0.5,
        "mass": 1.0,
        "radius": 0.5,
        "depth": 20,
        "ratio": 1.0 / 3.0,
        "scale": 1.0,
    },
    "kgrid": {
        "n_radial": 64,
        "n_theta": 16,
        "n_phi": 32,
        "q_min": 0.0,
        "q_max": 0.0,
    },
    "gibbs": {
        "betas": [0.0, 1.0, 2.0, 5.0],
        "energy": "H",
    },
    "spectrum": {"beta": 0.0},
    "interact": {
        "pairs": 64,
        "separation": 0.0,
        "mode": "both",
        "eps": 0.0,
    },
    # per-check sample-size overrides for the verify battery (0 = built-in
    # default: decomp 2000, tail 100000, refine 256, mv = run.samples,
    # mc_pairs 1000000); levels is the tail-bound threshold ladder
    "verify": {
        "samples": 0,
        "decomp_samples": 0,
        "tail_samples": 0,
        "refine_samples": 0,
        "mv_samples": 0,
        "mc_pairs": 0,
        "levels": [1, 2, 4, 8, 16],
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


# -- TOML-subset reader/writer --------------------------------------------------

def parse_toml(text):
    """Parse the TOML subset: [section] tables of scalars and scalar lists."""
    out = {}
    table = out
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {raw!r}")
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section name")
            table = out.setdefault(name, {})
            if not isinstance(table, dict):
                raise ConfigError(f"line {lineno}: section {name!r} clashes with a key")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            table[key] = _parse_value(val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}, key {key!r}: {exc}") from None
    return out


def _parse_value(tok):
    if not tok:
        raise ValueError("empty value")
    if tok.startswith("["):
        if not tok.endswith("]"):
            raise ValueError(f"unterminated list {tok!r}")
        inner = tok[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(t.strip()) for t in _split_list(inner)]
    if tok.startswith('"') and tok.endswith('"') and len(tok) >= 2:
        return tok[1:-1]
    if tok in ("true", "false"):
        return tok == "true"
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        raise ValueError(f"cannot parse value {tok!r}") from None


def _split_list(inner):
    parts, depth, cur = [], 0, []
    in_str = False
    for ch in inner:
        if ch == '"':
            in_str = not in_str
        if not in_str:
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append("".join(cur))
                cur = []
                continue
        cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return parts


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def dump_toml(cfg):
    """Serialize a config mapping in the same subset (deterministic order)."""
    lines = []
    for key, val in cfg.items():
        if not isinstance(val, dict):
            lines.append(f"{key} = {_format_value(val)}")
    for key, val in cfg.items():
        if isinstance(val, dict):
            lines.append("")
            lines.append(f"[{key}]")
            for k, v in val.items():
                lines.append(f"{k} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


# -- validation ------------------------------------------------------------------

def default_config():
    return copy.deepcopy(DEFAULTS)


def _merge(base, overlay, path=""):
    for k, v in overlay.items():
        if k not in base:
            raise ConfigError(f"unknown config field {path + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"field {path + k!r} must be a section")
            _merge(base[k], v, path + k + ".")
        else:
            base[k] = v
    return base


def load_config(path=None, overrides=None):
    """Defaults, overlaid with a config file and CLI overrides, validated."""
    cfg = default_config()
    if path is not None:
        with open(path) as f:
            _merge(cfg, parse_toml(f.read()))
    if overrides:
        _merge(cfg, overrides)
    return RunConfig(cfg)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


class RunConfig:
    """Validated configuration with builders for the derived objects."""

    def __init__(self, cfg):
        self.raw = cfg
        _require(cfg["schema"] == SCHEMA_VERSION,
                 f"schema must be {SCHEMA_VERSION}, got {cfg['schema']!r}")
        run = cfg["run"]
        _require(run["process"] in ("bm", "bridge", "sde"),
                 f"run.process must be bm|bridge|sde, got {run['process']!r}")
        _require(run["T"] > 0, "run.T must be positive")
        _require(int(run["steps"]) >= 1, "run.steps must be >= 1")
        _require(int(run["samples"]) >= 1, "run.samples must be >= 1")
        _require(0 <= int(run["master_seed"]) < 2**64, "run.master_seed must fit in 64 bits")
        _require(int(run["workers"]) >= 0, "run.workers must be >= 0")
        _require(len(run["x0"]) == 3, "run.x0 must be a 3-vector")
        _require(run["drift"] in ("zero", "bridge"), "run.drift must be zero|bridge")
        cs = cfg["cross_section"]
        _require(cs["type"] in ("gaussian", "uniform_ball", "cantor_product", "point"),
                 f"cross_section.type unknown: {cs['type']!r}")
        _require(cs["mass"] > 0, "cross_section.mass must be positive")
        kg = cfg["kgrid"]
        _require(int(kg["n_radial"]) >= 2, "kgrid.n_radial must be >= 2")
        _require(int(kg["n_theta"]) >= 1, "kgrid.n_theta must be >= 1")
        _require(int(kg["n_phi"]) >= 2 and int(kg["n_phi"]) % 2 == 0,
                 "kgrid.n_phi must be even and >= 2")
        _require(cfg["gibbs"]["energy"] in ("H", "H_tilde"),
                 "gibbs.energy must be H|H_tilde")
        _require(cfg["interact"]["mode"] in ("tanaka_rosen", "direct_mollified", "both"),
                 "interact.mode must be tanaka_rosen|direct_mollified|both")
        _require(int(cfg["interact"]["pairs"]) >= 1, "interact.pairs must be >= 1")

    # builders ------------------------------------------------------------

    def cross_section(self):
        cs = self.raw["cross_section"]
        kind = cs["type"]
        try:
            if kind == "gaussian":
                return CrossSection.gaussian(cs["sigma"], cs["mass"])
            if kind == "uniform_ball":
                return CrossSection.uniform_ball(cs["radius"], cs["mass"])
            if kind == "cantor_product":
                return CrossSection.cantor_product(int(cs["depth"]), cs["ratio"],
                                                   cs["scale"], cs["mass"])
            return CrossSection.point(cs["mass"])
        except ValueError as exc:
            raise ConfigError(f"cross_section: {exc}") from None

    def time_grid(self):
        run = self.raw["run"]
        return TimeGrid(float(run["T"]), int(run["steps"]))

    def kgrid(self, cross_section=None):
        cs = cross_section or self.cross_section()
        kg = self.raw["kgrid"]
        try:
            return build_kgrid(cs, int(kg["n_radial"]), int(kg["n_theta"]),
                               int(kg["n_phi"]),
                               q_min=kg["q_min"] or None, q_max=kg["q_max"] or None)
        except ValueError as exc:
            raise ConfigError(f"kgrid: {exc}") from None

    def ensemble_spec(self, cross_section=None, kgrid=None):
        run = self.raw["run"]
        cs = cross_section or self.cross_section()
        grid = self.time_grid()
        drift = None
        if run["process"] == "sde":
            x0 = np.array(run["x0"], dtype=float)
            drift = (DriftModel.bridge(grid.horizon, x0) if run["drift"] == "bridge"
                     else DriftModel.zero())
        return EnsembleSpec(
            process=run["process"], grid=grid, cross_section=cs,
            kgrid=kgrid if kgrid is not None else self.kgrid(cs),
            n_samples=int(run["samples"]), master_seed=int(run["master_seed"]),
            x0=np.array(run["x0"], dtype=float), drift=drift,
            workers=int(run["workers"]))

    def serialize(self):
        return dump_toml(self.raw)
