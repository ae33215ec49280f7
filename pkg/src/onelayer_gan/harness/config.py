"""INI-style experiment configuration.

Sections and keys (all optional except where noted)::

    [experiment]
    activation = tanh          # identity | tanh | sigmoid | relu | leaky_relu
    leak = 0.2                 # leaky_relu only
    d = 3                      # output dimension for a single run
    k = 3                      # learner latent dimension (default: d)
    k0 = 2                     # ground-truth latent dimension
    truth = random_unit_rows   # or explicit
    truth_matrix = 1; 1        # explicit truth, rows split by ';', entries by ','
    trials = 20
    seed = 0
    threads = 1

    [sweep]
    d_grid = 3, 5, 7
    n_grid = 500, 1000, 2000, 5000, 10000

    [train]
    eta = 0.2
    T = 2000
    m = 1000
    n = 1000
    ...                        # any other TrainConfig field

    [output]
    dir = out

Only ``#`` starts an inline comment, since ``;`` separates matrix rows.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..model import GroundTruth, get_activation
from ..optimizer import TrainConfig

TRUTH_MODES = ("random_unit_rows", "explicit")
U64_MAX = 2**64 - 1

_EXPERIMENT_KEYS = {"activation", "leak", "d", "k", "k0", "truth", "truth_matrix", "trials", "seed", "threads"}
_SWEEP_KEYS = {"d_grid", "n_grid"}
_OUTPUT_KEYS = {"dir"}
_TRAIN_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _int_list(text: str, key: str) -> list[int]:
    try:
        out = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: expected a list of integers, got {text!r}") from None
    if not out:
        raise ConfigError(f"{key}: empty list")
    return out


def parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in (s.strip() for s in text.split(";")) if r]
    try:
        M = np.array([[float(v) for v in r.replace(",", " ").split()] for r in rows], dtype=float)
    except ValueError:
        raise ConfigError(f"truth_matrix: cannot parse {text!r}") from None
    if M.ndim != 2 or M.size == 0:
        raise ConfigError("truth_matrix: rows must have equal, non-zero length")
    return M


@dataclass
class ExperimentConfig:
    activation: str = "tanh"
    leak: float = 0.2
    d: int = 3
    k: Optional[int] = None
    k0: int = 2
    truth: str = "random_unit_rows"
    truth_matrix: Optional[np.ndarray] = None
    trials: int = 1
    seed: int = 0
    threads: int = 1
    d_grid: list = field(default_factory=lambda: [3])
    n_grid: list = field(default_factory=lambda: [1000])
    train: TrainConfig = field(default_factory=TrainConfig)
    out_dir: str = "out"

    def __post_init__(self):
        get_activation(self.activation, self.leak)  # validates the name and leak
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 <= self.seed <= U64_MAX:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.truth not in TRUTH_MODES:
            raise ConfigError(f"truth must be one of {TRUTH_MODES}")
        if self.truth == "explicit":
            if self.truth_matrix is None:
                raise ConfigError("truth = explicit needs truth_matrix")
            self.truth_matrix = np.atleast_2d(np.asarray(self.truth_matrix, dtype=float))
            self.d, self.k0 = self.truth_matrix.shape
            if self.d_grid != [self.d]:
                self.d_grid = [self.d]
        if self.d < 1 or self.k0 < 1 or (self.k is not None and self.k < 1):
            raise ConfigError("dimensions must be positive")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be non-empty and strictly increasing")
        if not self.d_grid or any(v < 1 for v in self.d_grid):
            raise ConfigError("d_grid must list positive dimensions")

    def activation_spec(self):
        return get_activation(self.activation, self.leak)

    def make_truth(self, d: int, rng: np.random.Generator) -> GroundTruth:
        if self.truth == "explicit":
            return GroundTruth(self.truth_matrix)
        return GroundTruth.random_unit_rows(d, self.k0, rng)

    def with_overrides(self, seed=None, threads=None, out_dir=None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if threads is not None:
            changes["threads"] = threads
        if out_dir is not None:
            changes["out_dir"] = str(out_dir)
        return dataclasses.replace(self, **changes) if changes else self


def _coerce_train(key: str, raw: str):
    f = _TRAIN_FIELDS[key]
    t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    raw = raw.strip()
    if "Optional" in t and raw.lower() in ("", "none", "auto"):
        return None
    try:
        if "bool" in t:
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError
            return low in ("1", "true", "yes", "on")
        if "int" in t:
            return int(raw)
        if "float" in t:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"[train] {key}: cannot parse {raw!r} as {t}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    cp.optionxform = str  # keep T distinct from t
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = {"experiment", "sweep", "train", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"{path}: unknown section(s) {sorted(extra)}")

    kw = {}
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        bad = set(sec) - _EXPERIMENT_KEYS
        if bad:
            raise ConfigError(f"[experiment] unknown key(s) {sorted(bad)}")
        try:
            for key in ("activation", "truth"):
                if key in sec:
                    kw[key] = sec[key].strip()
            for key in ("d", "k", "k0", "trials", "seed", "threads"):
                if key in sec:
                    kw[key] = int(sec[key])
            if "leak" in sec:
                kw["leak"] = float(sec["leak"])
        except ValueError as exc:
            raise ConfigError(f"[experiment] {exc}") from None
        if "truth_matrix" in sec:
            kw["truth_matrix"] = parse_matrix(sec["truth_matrix"])
    if cp.has_section("sweep"):
        sec = cp["sweep"]
        bad = set(sec) - _SWEEP_KEYS
        if bad:
            raise ConfigError(f"[sweep] unknown key(s) {sorted(bad)}")
        for key in ("d_grid", "n_grid"):
            if key in sec:
                kw[key] = _int_list(sec[key], key)
    train_kw = {}
    if cp.has_section("train"):
        sec = cp["train"]
        bad = set(sec) - set(_TRAIN_FIELDS)
        if bad:
            raise ConfigError(f"[train] unknown key(s) {sorted(bad)}")
        train_kw = {key: _coerce_train(key, sec[key]) for key in sec}
    if cp.has_section("output"):
        sec = cp["output"]
        bad = set(sec) - _OUTPUT_KEYS
        if bad:
            raise ConfigError(f"[output] unknown key(s) {sorted(bad)}")
        if "dir" in sec:
            kw["out_dir"] = sec["dir"].strip()
    try:
        kw["train"] = TrainConfig(**train_kw)
        if "d" in kw and "d_grid" not in kw:
            kw["d_grid"] = [kw["d"]]
        if "n_grid" not in kw:
            kw["n_grid"] = [kw["train"].n]
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
