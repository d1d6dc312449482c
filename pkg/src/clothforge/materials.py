"""Procedural albedo materials for cloth and scene surfaces.

Three procedures: a single uniform color, a cloth-tailored pattern (base
color, optional stripes, optional logo-like rectangles), and a value-noise
texture mixed with a random color.  A material is a pure function of (u, v);
evaluation is vectorized and deterministic, so a scene re-renders identically
from its serialized description.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic lattice hash to [0, 1): SplitMix64-style finalizer over
    the two cell coordinates and a seed."""
    h = ix.astype(np.uint64) * _GOLDEN
    h ^= iy.astype(np.uint64) * _MIX1
    h ^= np.uint64(seed)
    h = (h ^ (h >> np.uint64(30))) * _MIX1
    h = (h ^ (h >> np.uint64(27))) * _MIX2
    h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _value_noise(u: np.ndarray, v: np.ndarray, frequency: float,
                 seed: int) -> np.ndarray:
    """Smoothly interpolated lattice noise in [0, 1)."""
    x = u * frequency
    y = v * frequency
    x0 = np.floor(x)
    y0 = np.floor(y)
    sx = (x - x0) ** 2 * (3.0 - 2.0 * (x - x0))
    sy = (y - y0) ** 2 * (3.0 - 2.0 * (y - y0))
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    n00 = _hash01(ix, iy, seed)
    n10 = _hash01(ix + 1, iy, seed)
    n01 = _hash01(ix, iy + 1, seed)
    n11 = _hash01(ix + 1, iy + 1, seed)
    top = n00 * (1.0 - sx) + n10 * sx
    bot = n01 * (1.0 - sx) + n11 * sx
    return top * (1.0 - sy) + bot * sy


def _fbm(u: np.ndarray, v: np.ndarray, octaves: int, scale: float,
         seed: int) -> np.ndarray:
    total = np.zeros_like(u, dtype=np.float64)
    amplitude = 1.0
    norm = 0.0
    for octave in range(octaves):
        total += amplitude * _value_noise(u, v, scale * 2.0 ** octave,
                                          seed + 131 * octave)
        norm += amplitude
        amplitude *= 0.5
    return total / norm


def _as_uv(u, v):
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if u.shape != v.shape:
        raise ValueError("u and v must have the same shape")
    return u, v


def _color(rgb) -> tuple[float, float, float]:
    r, g, b = (float(c) for c in rgb)
    for c in (r, g, b):
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"color component {c} outside [0, 1]")
    return (r, g, b)


@dataclass(frozen=True)
class UniformColor:
    rgb: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "rgb", _color(self.rgb))

    def albedo(self, u, v) -> np.ndarray:
        u, _ = _as_uv(u, v)
        return np.broadcast_to(np.array(self.rgb), u.shape + (3,)).copy()

    def to_dict(self) -> dict:
        return {"procedure": "uniform", "rgb": list(self.rgb)}


@dataclass(frozen=True)
class LogoPatch:
    """Axis-aligned UV rectangle painted in a flat color."""
    u0: float
    v0: float
    u1: float
    v1: float
    rgb: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "rgb", _color(self.rgb))
        if not (self.u0 < self.u1 and self.v0 < self.v1):
            raise ValueError("logo rectangle must have positive extent")


@dataclass(frozen=True)
class TailoredMaterial:
    """Base color with optional stripes and logo rectangles.

    Stripes run perpendicular to the direction (cos angle, sin angle) in UV
    space: the signed coordinate s = u cos + v sin alternates between the
    stripe color (first `stripe_width` fraction of each period) and the base.
    A non-positive period disables striping.
    """
    base_rgb: tuple[float, float, float]
    stripe_rgb: tuple[float, float, float] = (0.0, 0.0, 0.0)
    stripe_period: float = 0.0
    stripe_width: float = 0.5
    stripe_angle: float = 0.0
    logos: tuple[LogoPatch, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base_rgb", _color(self.base_rgb))
        object.__setattr__(self, "stripe_rgb", _color(self.stripe_rgb))
        object.__setattr__(self, "logos", tuple(self.logos))
        if self.stripe_period > 0 and not 0.0 < self.stripe_width < 1.0:
            raise ValueError("stripe_width must be a fraction in (0, 1)")

    def albedo(self, u, v) -> np.ndarray:
        u, v = _as_uv(u, v)
        out = np.broadcast_to(np.array(self.base_rgb), u.shape + (3,)).copy()
        if self.stripe_period > 0.0:
            s = u * np.cos(self.stripe_angle) + v * np.sin(self.stripe_angle)
            phase = np.mod(s / self.stripe_period, 1.0)
            out[phase < self.stripe_width] = self.stripe_rgb
        for logo in self.logos:
            inside = (
                (u >= logo.u0) & (u < logo.u1) & (v >= logo.v0) & (v < logo.v1)
            )
            out[inside] = logo.rgb
        return out

    def to_dict(self) -> dict:
        return {
            "procedure": "tailored",
            "base_rgb": list(self.base_rgb),
            "stripe_rgb": list(self.stripe_rgb),
            "stripe_period": self.stripe_period,
            "stripe_width": self.stripe_width,
            "stripe_angle": self.stripe_angle,
            "logos": [
                {"u0": l.u0, "v0": l.v0, "u1": l.u1, "v1": l.v1,
                 "rgb": list(l.rgb)}
                for l in self.logos
            ],
        }


@dataclass(frozen=True)
class RandomTextureMaterial:
    """Per-channel fractal value noise mixed with a flat color.

    The noise stands in for photographic textures; mixing with `mix_rgb` by
    `mix_weight` tints it the way a random base color would.
    """
    seed: int
    octaves: int = 4
    scale: float = 6.0
    mix_rgb: tuple[float, float, float] = (0.5, 0.5, 0.5)
    mix_weight: float = 0.4
    contrast: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mix_rgb", _color(self.mix_rgb))
        if self.octaves < 1 or self.scale <= 0:
            raise ValueError("octaves must be >= 1 and scale positive")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ValueError("mix_weight must be in [0, 1]")

    def albedo(self, u, v) -> np.ndarray:
        u, v = _as_uv(u, v)
        out = np.empty(u.shape + (3,))
        for channel in range(3):
            n = _fbm(u, v, self.octaves, self.scale,
                     self.seed + 7919 * channel)
            n = np.clip(0.5 + self.contrast * (n - 0.5), 0.0, 1.0)
            out[..., channel] = ((1.0 - self.mix_weight) * n
                                 + self.mix_weight * self.mix_rgb[channel])
        return out

    def to_dict(self) -> dict:
        return {
            "procedure": "random_texture",
            "seed": int(self.seed),
            "octaves": self.octaves,
            "scale": self.scale,
            "mix_rgb": list(self.mix_rgb),
            "mix_weight": self.mix_weight,
            "contrast": self.contrast,
        }


Material = UniformColor | TailoredMaterial | RandomTextureMaterial

PROCEDURES = ("uniform", "tailored", "random_texture")


def material_from_dict(data: dict) -> Material:
    kind = data.get("procedure")
    if kind == "uniform":
        return UniformColor(tuple(data["rgb"]))
    if kind == "tailored":
        return TailoredMaterial(
            base_rgb=tuple(data["base_rgb"]),
            stripe_rgb=tuple(data["stripe_rgb"]),
            stripe_period=float(data["stripe_period"]),
            stripe_width=float(data["stripe_width"]),
            stripe_angle=float(data["stripe_angle"]),
            logos=tuple(
                LogoPatch(l["u0"], l["v0"], l["u1"], l["v1"], tuple(l["rgb"]))
                for l in data.get("logos", ())
            ),
        )
    if kind == "random_texture":
        return RandomTextureMaterial(
            seed=int(data["seed"]),
            octaves=int(data["octaves"]),
            scale=float(data["scale"]),
            mix_rgb=tuple(data["mix_rgb"]),
            mix_weight=float(data["mix_weight"]),
            contrast=float(data["contrast"]),
        )
    raise ValueError(f"unknown material procedure: {kind!r}")


def sample_material(procedure: str, rng: np.random.Generator) -> Material:
    """Draw a material of the given procedure; the rng fully determines it.

    Ranges: colors uniform in [0.05, 0.95] per channel; stripe period in
    [0.05, 0.3] UV with width fraction [0.2, 0.6] and any angle; 0 to 3
    logo rectangles; noise with 3 to 5 octaves, scale [2, 12], color mix
    weight [0.2, 0.6].
    """
    if procedure == "uniform":
        return UniformColor(tuple(rng.uniform(0.05, 0.95, 3)))
    if procedure == "tailored":
        base = tuple(rng.uniform(0.05, 0.95, 3))
        stripe = tuple(rng.uniform(0.05, 0.95, 3))
        striped = rng.uniform() < 0.7
        period = float(rng.uniform(0.05, 0.3)) if striped else 0.0
        width = float(rng.uniform(0.2, 0.6))
        angle = float(rng.uniform(0.0, np.pi))
        logos = []
        for _ in range(int(rng.integers(0, 4))):
            u0 = float(rng.uniform(0.05, 0.75))
            v0 = float(rng.uniform(0.05, 0.75))
            du = float(rng.uniform(0.05, 0.2))
            dv = float(rng.uniform(0.05, 0.2))
            logos.append(LogoPatch(u0, v0, min(u0 + du, 1.0),
                                   min(v0 + dv, 1.0),
                                   tuple(rng.uniform(0.05, 0.95, 3))))
        return TailoredMaterial(base, stripe, period, width, angle,
                                tuple(logos))
    if procedure == "random_texture":
        return RandomTextureMaterial(
            seed=int(rng.integers(0, 2 ** 63)),
            octaves=int(rng.integers(3, 6)),
            scale=float(rng.uniform(2.0, 12.0)),
            mix_rgb=tuple(rng.uniform(0.05, 0.95, 3)),
            mix_weight=float(rng.uniform(0.2, 0.6)),
            contrast=float(rng.uniform(0.8, 1.6)),
        )
    raise ValueError(f"unknown material procedure: {procedure!r}")
