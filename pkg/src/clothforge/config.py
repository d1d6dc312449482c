"""The single configuration document driving generation and evaluation.

One JSON file holds every randomization range the pipeline consumes: mesh
template ranges, deformation settings, material procedure weights, scene
composition ranges and metric parameters.  Defaults are taken directly from
the library dataclasses so the documented defaults cannot drift from the
code.  User files are deep-merged over the defaults, then validated against
a JSON schema; all validation problems raise ConfigError carrying a JSON
pointer to the offending key.

Seeds: every sample gets a 64-bit seed derived from (master_seed, category,
sample id) by SplitMix-style mixing, and each pipeline stage folds in its
own tag.  Seeds therefore never depend on worker count, execution order or
the number of other samples.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import jsonschema

from .errors import ConfigError
from .metrics import DEFAULT_SIGMA, DEFAULT_THRESHOLDS
from .scene import SceneConfig
from .simulator import DeformConfig
from .templates import (
    DEFAULT_MAX_EDGE,
    DEFAULT_SPACING,
    ClothCategory,
    ParamRanges,
    ShortsRanges,
    TowelRanges,
    TshirtRanges,
)

SCHEMA_TAG = "clothforge-config/1"

# default: random textures everywhere; uniform and tailored stay
# available for material-comparison runs
DEFAULT_MATERIAL_WEIGHTS = {
    "uniform": 0.0,
    "tailored": 0.0,
    "random_texture": 1.0,
}

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *tokens) -> int:
    """Mix a master seed with string/int tokens into a fresh 64-bit seed.

    Strings are folded in as their UTF-8 bytes, integers as 8 little-endian
    bytes, so ("towel", 3) and ("towel", 3, "deform") give unrelated
    streams.  Pure function; iteration order of callers cannot leak in.
    """
    state = _mix((int(master_seed) + _GAMMA) & _MASK)
    for token in tokens:
        if isinstance(token, str):
            data = token.encode("utf-8")
        else:
            data = int(token).to_bytes(8, "little", signed=False)
        # length tag separates e.g. ("ab", "c") from ("a", "bc")
        state = _mix(((state ^ len(data)) + _GAMMA) & _MASK)
        for i in range(0, len(data), 8):
            chunk = int.from_bytes(data[i:i + 8], "little")
            state = _mix(((state ^ chunk) + _GAMMA) & _MASK)
    return state


# ---------------------------------------------------------------------------
# defaults and schema


def _as_json(obj) -> dict:
    """dataclass -> plain dict with tuples flattened to lists."""
    out = {}
    for field in dataclasses.fields(obj):
        value = getattr(obj, field.name)
        out[field.name] = list(value) if isinstance(value, tuple) else value
    return out


def default_config() -> dict:
    return {
        "schema": SCHEMA_TAG,
        "master_seed": 0,
        "output_dir": "out",
        "workers": 1,
        "counts": {"towel": 0, "tshirt": 0, "shorts": 0},
        "mesh": {
            "max_edge": DEFAULT_MAX_EDGE,
            "boundary_spacing": DEFAULT_SPACING,
            "towel": _as_json(TowelRanges()),
            "tshirt": _as_json(TshirtRanges()),
            "shorts": _as_json(ShortsRanges()),
        },
        "deform": _as_json(DeformConfig()),
        "materials": {"weights": dict(DEFAULT_MATERIAL_WEIGHTS)},
        "scene": _as_json(SceneConfig()),
        "metrics": {"sigma": DEFAULT_SIGMA,
                    "thresholds": list(DEFAULT_THRESHOLDS)},
    }


def _pair(item: dict) -> dict:
    return {"type": "array", "items": item, "minItems": 2, "maxItems": 2}


_NUM = {"type": "number"}
_RANGE = _pair(_NUM)
_IRANGE = _pair({"type": "integer", "minimum": 0})
_PROB = {"type": "number", "minimum": 0.0, "maximum": 1.0}


def _obj(properties: dict) -> dict:
    return {"type": "object", "properties": properties,
            "additionalProperties": False}


def _ranges_obj(cls) -> dict:
    return _obj({f.name: _RANGE for f in dataclasses.fields(cls)})


SCHEMA = _obj({
    "schema": {"const": SCHEMA_TAG},
    "master_seed": {"type": "integer", "minimum": 0,
                    "exclusiveMaximum": 1 << 64},
    "output_dir": {"type": "string", "minLength": 1},
    "workers": {"type": "integer", "minimum": 1},
    "counts": _obj({c.value: {"type": "integer", "minimum": 0}
                    for c in ClothCategory}),
    "mesh": _obj({
        "max_edge": {"type": "number", "exclusiveMinimum": 0.0},
        "boundary_spacing": {"type": "number", "exclusiveMinimum": 0.0},
        "towel": _ranges_obj(TowelRanges),
        "tshirt": _ranges_obj(TshirtRanges),
        "shorts": _ranges_obj(ShortsRanges),
    }),
    "deform": _obj({
        "drop_height": _RANGE,
        "tilt_max_deg": {"type": "number", "minimum": 0.0, "maximum": 90.0},
        "flat_probability": _PROB,
        "fold_probability": _PROB,
        "fold_arc_radius": _RANGE,
        "fold_arc_angle_deg": _RANGE,
        "flip_probability": _PROB,
        "grasp_boundary_probability": _PROB,
        "settle_ke": {"type": "number", "exclusiveMinimum": 0.0},
        "settle_max_steps": {"type": "integer", "minimum": 1},
        "areal_density": {"type": "number", "exclusiveMinimum": 0.0},
        "undeformed": {"type": "boolean"},
        "stretch_stiffness": _RANGE,
        "bend_stiffness": _RANGE,
        "friction": _RANGE,
        "drag": _RANGE,
    }),
    "materials": _obj({
        "weights": _obj({name: {"type": "number", "minimum": 0.0}
                         for name in DEFAULT_MATERIAL_WEIGHTS}),
    }),
    "scene": _obj({
        "plane_height": _NUM,
        "plane_size": {"type": "number", "exclusiveMinimum": 0.0},
        "cloth_thickness": {"type": "number", "exclusiveMinimum": 0.0},
        "distractor_count": _IRANGE,
        "distractor_size": _RANGE,
        "distractor_distance": _RANGE,
        "camera_distance": _RANGE,
        "camera_elevation_deg": _RANGE,
        "camera_azimuth_deg": _RANGE,
        "ambient": _RANGE,
        "light_count": _IRANGE,
        "resolution": _pair({"type": "integer", "minimum": 8}),
        "focal_length": {"type": ["number", "null"],
                         "exclusiveMinimum": 0.0},
    }),
    "metrics": _obj({
        "sigma": {"type": "number", "exclusiveMinimum": 0.0},
        "thresholds": {"type": "array", "minItems": 1,
                       "items": {"type": "number", "exclusiveMinimum": 0.0}},
    }),
})


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if (key in merged and isinstance(merged[key], dict)
                and isinstance(value, dict)):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


_DEFORM_RANGE_KEYS = ("drop_height", "fold_arc_radius", "fold_arc_angle_deg",
                      "stretch_stiffness", "bend_stiffness", "friction",
                      "drag")
_SCENE_RANGE_KEYS = ("distractor_count", "distractor_size",
                     "distractor_distance", "camera_distance",
                     "camera_elevation_deg", "camera_azimuth_deg",
                     "ambient", "light_count")


def _post_validate(doc: dict) -> None:
    """Cross-field checks the JSON schema cannot express."""
    def need_sorted(pair, pointer):
        if pair[0] > pair[1]:
            raise ConfigError(
                f"range low {pair[0]} exceeds high {pair[1]}", pointer)

    for cat in ("towel", "tshirt", "shorts"):
        for key, pair in doc["mesh"][cat].items():
            need_sorted(pair, f"/mesh/{cat}/{key}")
    for key in _DEFORM_RANGE_KEYS:
        need_sorted(doc["deform"][key], f"/deform/{key}")
    for key in _SCENE_RANGE_KEYS:
        need_sorted(doc["scene"][key], f"/scene/{key}")

    if doc["scene"]["camera_distance"][0] <= 0.0:
        raise ConfigError("camera distance must be positive",
                          "/scene/camera_distance")
    elev = doc["scene"]["camera_elevation_deg"]
    if elev[0] <= 0.0 or elev[1] > 90.0:
        raise ConfigError("camera elevation must lie in (0, 90] degrees",
                          "/scene/camera_elevation_deg")

    weights = doc["materials"]["weights"]
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"material weights sum to {total}, expected 1",
                          "/materials/weights")

    thresholds = doc["metrics"]["thresholds"]
    if sorted(thresholds) != thresholds or len(set(thresholds)) != len(
            thresholds):
        raise ConfigError("thresholds must be strictly increasing",
                          "/metrics/thresholds")


def validate_config(doc: dict) -> None:
    errors = sorted(
        jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc),
        key=lambda e: list(e.absolute_path),
    )
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(err.message, pointer if pointer != "/" else "")
    _post_validate(doc)


def config_hash(doc: dict) -> str:
    """Content hash over everything that affects generated bytes.

    output_dir and workers are excluded: moving the dataset or changing
    parallelism must not invalidate reproducibility checks.
    """
    content = {k: v for k, v in doc.items()
               if k not in ("output_dir", "workers")}
    canonical = json.dumps(content, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# typed access


def _build(cls, section: dict):
    kwargs = {}
    for field in dataclasses.fields(cls):
        value = section[field.name]
        kwargs[field.name] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)


@dataclass(frozen=True)
class PipelineConfig:
    """A validated configuration document with typed accessors."""

    doc: dict

    @classmethod
    def from_dict(cls, user: dict | None = None) -> "PipelineConfig":
        doc = _deep_merge(default_config(), user or {})
        validate_config(doc)
        return cls(doc)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}"
                              ) from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object", "")
        return cls.from_dict(user)

    def with_overrides(self, **keys) -> "PipelineConfig":
        """Replace top-level keys (used for seed/worker overrides)."""
        doc = _deep_merge(self.doc, keys)
        validate_config(doc)
        return PipelineConfig(doc)

    # -- plain fields

    @property
    def master_seed(self) -> int:
        return self.doc["master_seed"]

    @property
    def output_dir(self) -> str:
        return self.doc["output_dir"]

    @property
    def workers(self) -> int:
        return self.doc["workers"]

    @property
    def counts(self) -> dict[ClothCategory, int]:
        return {c: self.doc["counts"][c.value] for c in ClothCategory}

    @property
    def max_edge(self) -> float:
        return self.doc["mesh"]["max_edge"]

    @property
    def boundary_spacing(self) -> float:
        return self.doc["mesh"]["boundary_spacing"]

    @property
    def material_weights(self) -> dict[str, float]:
        return dict(self.doc["materials"]["weights"])

    @property
    def metric_sigma(self) -> float:
        return self.doc["metrics"]["sigma"]

    @property
    def metric_thresholds(self) -> tuple[float, ...]:
        return tuple(self.doc["metrics"]["thresholds"])

    # -- mapped dataclasses

    def param_ranges(self) -> ParamRanges:
        mesh = self.doc["mesh"]
        return ParamRanges(
            towel=_build(TowelRanges, mesh["towel"]),
            tshirt=_build(TshirtRanges, mesh["tshirt"]),
            shorts=_build(ShortsRanges, mesh["shorts"]),
        )

    def deform_config(self) -> DeformConfig:
        return _build(DeformConfig, self.doc["deform"])

    def scene_config(self) -> SceneConfig:
        return _build(SceneConfig, self.doc["scene"])

    def hash(self) -> str:
        return config_hash(self.doc)

    def sample_seed(self, category: ClothCategory | str, sample_id: int,
                    stage: str) -> int:
        category = ClothCategory(category)
        return derive_seed(self.master_seed, category.value, sample_id,
                           stage)


__all__ = [
    "DEFAULT_MATERIAL_WEIGHTS",
    "PipelineConfig",
    "SCHEMA",
    "SCHEMA_TAG",
    "config_hash",
    "default_config",
    "derive_seed",
    "validate_config",
]
