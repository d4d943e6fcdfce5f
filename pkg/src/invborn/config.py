"""Run configuration for the command line tool.

Configs are JSON objects. Unknown keys, and keys that belong to a different
model, are rejected.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .diffuse import DiffuseWaveFamily, PseudoinverseConfig, assemble_family, build_geometry, paint_inclusions
from .io import config_hash, read_matrix, write_matrix
from .series import make_random_matrix_family, make_scalar_family

MODELS = ("diffuse-wave", "scalar", "random-matrix")
COMMON_KEYS = {"model", "forward_order", "inverse_order", "pseudoinverse", "variant", "output_dir"}
MODEL_KEYS = {
    "diffuse-wave": {"k", "a", "R", "voxels_per_axis", "n_sources", "n_detectors", "coincident_detectors", "eta_spec", "cache_dir"},
    "scalar": {"coeffs", "mu", "max_order", "eta"},
    "random-matrix": {"seed", "dim_x", "dim_y", "max_order", "mu", "eta"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Inclusion:
    center: tuple
    radius: float
    contrast: float


@dataclass
class RunConfig:
    model: str
    forward_order: int = 8
    inverse_order: int = 6
    pseudoinverse: PseudoinverseConfig = field(default_factory=PseudoinverseConfig)
    exact_inverse: bool = False
    variant: str = "theorem"
    output_dir: str = "."
    # diffuse-wave
    k: float = 1.0
    a: float = 1.0
    R: float = 2.0
    voxels_per_axis: int = 12
    n_sources: int = 64
    n_detectors: int = 64
    coincident_detectors: bool = False
    eta_spec: list = field(default_factory=list)
    cache_dir: Optional[str] = None
    # scalar / random-matrix
    coeffs: list = field(default_factory=list)
    mu: float = 1.0
    max_order: Optional[int] = None
    seed: int = 0
    dim_x: int = 5
    dim_y: int = 5
    eta: Optional[list] = None

    @property
    def has_truth(self):
        if self.model == "diffuse-wave":
            return bool(self.eta_spec)
        return self.eta is not None

    def family_max_order(self):
        want = max(self.forward_order, self.inverse_order)
        if self.model == "random-matrix":
            return self.max_order or max(want, 6)
        return max(self.max_order or 0, want)

    def build_family(self):
        if self.model == "scalar":
            return make_scalar_family(self.coeffs, mu=self.mu, max_order=self.family_max_order())
        if self.model == "random-matrix":
            return make_random_matrix_family(self.dim_x, self.dim_y, self.family_max_order(), self.seed, mu=self.mu)
        geometry = build_geometry(self.a, self.R, self.voxels_per_axis, self.n_sources, self.n_detectors, self.coincident_detectors)
        if self.cache_dir is None:
            return assemble_family(geometry, self.k, max_order=self.family_max_order())
        return _cached_family(self, geometry)

    def true_eta(self, family):
        if self.model == "diffuse-wave":
            return paint_inclusions(family.geometry, [(i.center, i.radius, i.contrast) for i in self.eta_spec])
        if self.eta is None:
            return np.zeros(family.dim_x)
        return family.check_field(self.eta)

    def geometry_params(self):
        return {
            "k": self.k,
            "a": self.a,
            "R": self.R,
            "voxels_per_axis": self.voxels_per_axis,
            "n_sources": self.n_sources,
            "n_detectors": self.n_detectors,
            "coincident_detectors": self.coincident_detectors,
        }


def _cached_family(cfg, geometry):
    root = Path(cfg.cache_dir)
    key = config_hash(cfg.geometry_params())
    paths = [root / f"{key}_{name}.bin" for name in "ABC"]
    if all(p.exists() for p in paths):
        A, B, C = (read_matrix(p) for p in paths)
        return DiffuseWaveFamily(geometry, cfg.k, A, B, C, max_order=cfg.family_max_order())
    family = assemble_family(geometry, cfg.k, max_order=cfg.family_max_order())
    root.mkdir(parents=True, exist_ok=True)
    for p, mat in zip(paths, (family.A, family.B, family.C)):
        write_matrix(p, mat)
    return family


def _positive_int(doc, key):
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


def _number(doc, key):
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _parse_inclusion(item):
    if not isinstance(item, dict) or set(item) != {"center", "radius", "contrast"}:
        raise ConfigError(f"inclusion must have exactly center, radius, contrast: {item!r}")
    center = item["center"]
    if not isinstance(center, list) or len(center) != 3:
        raise ConfigError(f"inclusion center must be a list of 3 numbers, got {center!r}")
    radius = _number(item, "radius")
    if radius <= 0:
        raise ConfigError(f"inclusion radius must be positive, got {radius}")
    return Inclusion(tuple(float(c) for c in center), radius, _number(item, "contrast"))


def parse_config(doc):
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    model = doc.get("model")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    unknown = set(doc) - COMMON_KEYS - MODEL_KEYS[model]
    if unknown:
        raise ConfigError(f"unknown keys for model {model!r}: {sorted(unknown)}")

    kw = {"model": model}
    for key in ("forward_order", "inverse_order", "voxels_per_axis", "n_sources", "n_detectors", "dim_x", "dim_y", "max_order"):
        if key in doc:
            kw[key] = _positive_int(doc, key)
    for key in ("k", "a", "R", "mu"):
        if key in doc:
            kw[key] = _number(doc, key)
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            raise ConfigError("seed must be an integer")
        kw["seed"] = doc["seed"]
    for key in ("output_dir", "cache_dir"):
        if key in doc:
            if not isinstance(doc[key], str):
                raise ConfigError(f"{key} must be a string")
            kw[key] = doc[key]
    if "coincident_detectors" in doc:
        if not isinstance(doc["coincident_detectors"], bool):
            raise ConfigError("coincident_detectors must be true or false")
        kw["coincident_detectors"] = doc["coincident_detectors"]
    if "variant" in doc:
        if doc["variant"] not in ("theorem", "proposition"):
            raise ConfigError(f"variant must be 'theorem' or 'proposition', got {doc['variant']!r}")
        kw["variant"] = doc["variant"]
    if "coeffs" in doc:
        if not isinstance(doc["coeffs"], list) or not doc["coeffs"]:
            raise ConfigError("coeffs must be a nonempty list of numbers")
        kw["coeffs"] = [_number({"c": c}, "c") for c in doc["coeffs"]]
    elif model == "scalar":
        raise ConfigError("scalar model needs coeffs")
    if "eta" in doc:
        if not isinstance(doc["eta"], list):
            raise ConfigError("eta must be a list of numbers")
        kw["eta"] = [_number({"v": v}, "v") for v in doc["eta"]]
    if "eta_spec" in doc:
        if not isinstance(doc["eta_spec"], list):
            raise ConfigError("eta_spec must be a list of inclusions")
        kw["eta_spec"] = [_parse_inclusion(item) for item in doc["eta_spec"]]
    if "pseudoinverse" in doc:
        p = doc["pseudoinverse"]
        if not isinstance(p, dict) or not set(p) <= {"method", "threshold"} or "method" not in p:
            raise ConfigError("pseudoinverse must be an object with method and optional threshold")
        if p["method"] == "exact":
            if model == "diffuse-wave":
                raise ConfigError("exact inverse is only available for the scalar and random-matrix models")
            kw["exact_inverse"] = True
        else:
            try:
                kw["pseudoinverse"] = PseudoinverseConfig(p["method"], float(p.get("threshold", 1e-3)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc)) from exc
    cfg = RunConfig(**kw)
    if model == "diffuse-wave" and not cfg.R > cfg.a:
        raise ConfigError(f"R={cfg.R} must exceed a={cfg.a}")
    if model == "diffuse-wave" and cfg.k < 0:
        raise ConfigError(f"k must be nonnegative, got {cfg.k}")
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)

