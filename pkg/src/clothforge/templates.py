"""Parametric 2D garment templates and their conversion to flat meshes.

Each category has a skeleton polygon whose vertices are exactly its named
keypoints, traversed counter-clockwise.  Edges may bulge outward as quadratic
beziers (the bulge value is the control-point offset along the outward edge
normal, so the curve apex moves by half of it); corners may be rounded by
tangent circular arcs whose apex becomes the keypoint anchor vertex.  The
T-shirt neckline reuses the bulge machinery with a forced inward bulge of
twice the neck depth, which places the curve's lowest point at neck depth.

Templates are sampled from per-parameter uniform ranges with rejection:
candidates failing the per-category sanity predicates or producing a
non-simple outline are discarded and redrawn, up to a fixed attempt budget.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError
from .geometry import polygon_is_simple, round_corner, sample_bezier
from .triangulate import triangulate

DEFAULT_SPACING = 0.01
DEFAULT_MAX_EDGE = 0.01
_MAX_ATTEMPTS = 100
# fraction of the shorter adjacent skeleton edge a corner arc may consume
_MAX_TANGENT_FRACTION = 0.35


class ClothCategory(str, enum.Enum):
    TOWEL = "towel"
    TSHIRT = "tshirt"
    SHORTS = "shorts"


CANONICAL_KEYPOINTS: dict[ClothCategory, tuple[str, ...]] = {
    ClothCategory.TOWEL: ("corner0", "corner1", "corner2", "corner3"),
    ClothCategory.TSHIRT: (
        "neck_left", "neck_right", "shoulder_left", "shoulder_right",
        "sleeve_left_top", "sleeve_left_bottom", "sleeve_right_top",
        "sleeve_right_bottom", "armpit_left", "armpit_right",
        "waist_left", "waist_right",
    ),
    ClothCategory.SHORTS: (
        "waist_left", "waist_right", "crotch", "hem_left_outer",
        "hem_left_inner", "hem_right_outer", "hem_right_inner",
    ),
}

# left/right keypoint names related by the garment's bilateral symmetry
MIRROR_PAIRS: dict[ClothCategory, tuple[tuple[str, str], ...]] = {
    ClothCategory.TSHIRT: (
        ("neck_left", "neck_right"),
        ("shoulder_left", "shoulder_right"),
        ("sleeve_left_top", "sleeve_right_top"),
        ("sleeve_left_bottom", "sleeve_right_bottom"),
        ("armpit_left", "armpit_right"),
        ("waist_left", "waist_right"),
    ),
    ClothCategory.SHORTS: (
        ("waist_left", "waist_right"),
        ("hem_left_outer", "hem_right_outer"),
        ("hem_left_inner", "hem_right_inner"),
    ),
}

# towel corners in boundary-connectivity order (a 4-cycle)
TOWEL_CORNER_CYCLE = ("corner0", "corner1", "corner2", "corner3")

# every keypoint sits on the garment outline; these are the outline traversal
# orders (closed cycles, counter-clockwise in template space)
BOUNDARY_NAME_CYCLE: dict[ClothCategory, tuple[str, ...]] = {
    ClothCategory.TOWEL: TOWEL_CORNER_CYCLE,
    ClothCategory.TSHIRT: (
        "waist_left", "waist_right", "armpit_right", "sleeve_right_bottom",
        "sleeve_right_top", "shoulder_right", "neck_right", "neck_left",
        "shoulder_left", "sleeve_left_top", "sleeve_left_bottom",
        "armpit_left",
    ),
    ClothCategory.SHORTS: (
        "waist_left", "hem_left_outer", "hem_left_inner", "crotch",
        "hem_right_inner", "hem_right_outer", "waist_right",
    ),
}


# ---------------------------------------------------------------------------
# parameters and ranges


@dataclass
class TowelParams:
    width: float
    height: float
    edge_bulges: np.ndarray  # (4,)
    corner_radii: np.ndarray  # (4,)


@dataclass
class TshirtParams:
    waist_width: float
    torso_height: float
    shoulder_width: float
    neck_width: float
    neck_depth: float
    sleeve_length_left: float
    sleeve_length_right: float
    sleeve_width_left: float
    sleeve_width_right: float
    sleeve_angle_left: float  # radians, downward from horizontal
    sleeve_angle_right: float
    edge_bulges: np.ndarray  # (12,)
    corner_radii: np.ndarray  # (12,)


@dataclass
class ShortsParams:
    waist_width: float
    leg_length_left: float
    leg_length_right: float
    hem_width_left: float
    hem_width_right: float
    spread_left: float  # radians, leg axis tilt outward from vertical
    spread_right: float
    crotch_depth: float
    edge_bulges: np.ndarray  # (7,)
    corner_radii: np.ndarray  # (7,)


TemplateParams = TowelParams | TshirtParams | ShortsParams

Range = tuple[float, float]


@dataclass
class TowelRanges:
    width: Range = (0.3, 0.9)
    aspect: Range = (1.0, 2.0)
    edge_bulge: Range = (0.0, 0.02)
    corner_radius: Range = (0.0, 0.02)


@dataclass
class TshirtRanges:
    waist_width: Range = (0.4, 0.6)
    torso_height: Range = (0.5, 0.8)
    shoulder_width: Range = (0.42, 0.58)
    neck_width: Range = (0.12, 0.2)
    neck_depth: Range = (0.04, 0.1)
    sleeve_length: Range = (0.18, 0.32)
    sleeve_width: Range = (0.12, 0.18)
    sleeve_angle_deg: Range = (0.0, 45.0)
    edge_bulge: Range = (0.0, 0.02)
    corner_radius: Range = (0.0, 0.02)


@dataclass
class ShortsRanges:
    waist_width: Range = (0.3, 0.5)
    leg_length: Range = (0.2, 0.45)
    hem_width: Range = (0.11, 0.17)
    spread_deg: Range = (2.0, 18.0)
    crotch_depth: Range = (0.1, 0.2)
    edge_bulge: Range = (0.0, 0.02)
    corner_radius: Range = (0.0, 0.02)


@dataclass
class ParamRanges:
    towel: TowelRanges = field(default_factory=TowelRanges)
    tshirt: TshirtRanges = field(default_factory=TshirtRanges)
    shorts: ShortsRanges = field(default_factory=ShortsRanges)


@dataclass
class ClothTemplate:
    """A sampled garment outline.

    ``boundary`` is the fully expanded CCW polygon (arc and bezier samples
    included); ``keypoint_anchors`` maps each keypoint name to its boundary
    vertex index (the corner apex).
    """

    category: ClothCategory
    boundary: np.ndarray
    keypoint_anchors: dict[str, int]
    params: TemplateParams


# ---------------------------------------------------------------------------
# skeletons


def _towel_skeleton(p: TowelParams):
    pts = np.array([
        [0.0, 0.0],
        [p.width, 0.0],
        [p.width, p.height],
        [0.0, p.height],
    ])
    return pts, list(CANONICAL_KEYPOINTS[ClothCategory.TOWEL])


def _tshirt_skeleton(p: TshirtParams):
    w2 = 0.5 * p.waist_width
    s2 = 0.5 * p.shoulder_width
    n2 = 0.5 * p.neck_width
    h = p.torso_height
    ar, al = p.sleeve_angle_right, p.sleeve_angle_left
    tip_r = np.array([s2 + p.sleeve_length_right * np.cos(ar),
                      h - p.sleeve_length_right * np.sin(ar)])
    bot_r = tip_r + p.sleeve_width_right * np.array([-np.sin(ar), -np.cos(ar)])
    tip_l = np.array([-s2 - p.sleeve_length_left * np.cos(al),
                      h - p.sleeve_length_left * np.sin(al)])
    bot_l = tip_l + p.sleeve_width_left * np.array([np.sin(al), -np.cos(al)])
    pts = np.array([
        [-w2, 0.0],                       # waist_left
        [w2, 0.0],                        # waist_right
        [w2, h - p.sleeve_width_right],   # armpit_right
        bot_r,                            # sleeve_right_bottom
        tip_r,                            # sleeve_right_top
        [s2, h],                          # shoulder_right
        [n2, h],                          # neck_right
        [-n2, h],                         # neck_left
        [-s2, h],                         # shoulder_left
        tip_l,                            # sleeve_left_top
        bot_l,                            # sleeve_left_bottom
        [-w2, h - p.sleeve_width_left],   # armpit_left
    ])
    return pts, list(BOUNDARY_NAME_CYCLE[ClothCategory.TSHIRT])


def _shorts_skeleton(p: ShortsParams):
    w2 = 0.5 * p.waist_width
    hl_out = np.array([-w2 - p.leg_length_left * np.sin(p.spread_left),
                       -p.leg_length_left * np.cos(p.spread_left)])
    hl_in = hl_out + np.array([p.hem_width_left, 0.0])
    hr_out = np.array([w2 + p.leg_length_right * np.sin(p.spread_right),
                       -p.leg_length_right * np.cos(p.spread_right)])
    hr_in = hr_out - np.array([p.hem_width_right, 0.0])
    pts = np.array([
        [-w2, 0.0],          # waist_left
        hl_out,              # hem_left_outer
        hl_in,               # hem_left_inner
        [0.0, -p.crotch_depth],  # crotch
        hr_in,               # hem_right_inner
        hr_out,              # hem_right_outer
        [w2, 0.0],           # waist_right
    ])
    return pts, list(BOUNDARY_NAME_CYCLE[ClothCategory.SHORTS])


def _tshirt_sane(p: TshirtParams) -> bool:
    h = p.torso_height
    for sw in (p.sleeve_width_left, p.sleeve_width_right):
        if h - sw < 0.3 * h:
            return False
    if p.neck_width > 0.7 * p.shoulder_width:
        return False
    if 0.5 * (p.shoulder_width - p.neck_width) < 0.03:
        return False
    w2 = 0.5 * p.waist_width
    for sl, sw, a in (
        (p.sleeve_length_left, p.sleeve_width_left, p.sleeve_angle_left),
        (p.sleeve_length_right, p.sleeve_width_right, p.sleeve_angle_right),
    ):
        tip_x = 0.5 * p.shoulder_width + sl * np.cos(a)
        bot_x = tip_x - sw * np.sin(a)
        if tip_x < w2 + 0.02 or bot_x < w2 + 0.01:
            return False
        if h - sl * np.sin(a) - sw * np.cos(a) < 0.05:
            return False
    return True


def _shorts_sane(p: ShortsParams) -> bool:
    for ll, sp in ((p.leg_length_left, p.spread_left),
                   (p.leg_length_right, p.spread_right)):
        if p.crotch_depth > ll * np.cos(sp) - 0.03:
            return False
    w2 = 0.5 * p.waist_width
    in_l = -w2 - p.leg_length_left * np.sin(p.spread_left) + p.hem_width_left
    in_r = w2 + p.leg_length_right * np.sin(p.spread_right) - p.hem_width_right
    return in_l < -0.015 and in_r > 0.015


# ---------------------------------------------------------------------------
# boundary expansion


def _expand_boundary(skeleton: np.ndarray, bulges: np.ndarray,
                     radii: np.ndarray, spacing: float):
    """Expand a skeleton into the full outline: per-corner arcs (apex kept as
    the anchor) joined by per-edge beziers.  Oversized radii are clamped so
    the tangent points stay well within both adjacent edges."""
    n = skeleton.shape[0]
    corner_pts: list[np.ndarray] = []
    apex_local: list[int] = []
    for i in range(n):
        prv = skeleton[(i - 1) % n]
        cur = skeleton[i]
        nxt = skeleton[(i + 1) % n]
        r = float(radii[i])
        if r > 0.0:
            v1 = prv - cur
            v2 = nxt - cur
            l1 = np.linalg.norm(v1)
            l2 = np.linalg.norm(v2)
            cos_phi = float(np.clip(np.dot(v1, v2) / (l1 * l2), -1.0, 1.0))
            phi = float(np.arccos(cos_phi))
            if phi < 1e-6 or np.pi - phi < 1e-6:
                r = 0.0
            else:
                t_allow = _MAX_TANGENT_FRACTION * min(l1, l2)
                r = min(r, t_allow * np.tan(0.5 * phi))
        if r > 0.0:
            arc_len = r * (np.pi - phi)
            count = max(3, int(np.ceil(arc_len / spacing)) + 1)
            if count % 2 == 0:
                count += 1  # odd count puts a sample exactly on the apex
            pts = round_corner(prv, cur, nxt, r, count)
        else:
            pts = cur[None, :].copy()
        corner_pts.append(pts)
        apex_local.append((pts.shape[0] - 1) // 2)

    chunks: list[np.ndarray] = []
    anchors: list[int] = []
    total = 0
    for i in range(n):
        anchors.append(total + apex_local[i])
        chunks.append(corner_pts[i])
        total += corner_pts[i].shape[0]
        a = corner_pts[i][-1]
        b = corner_pts[(i + 1) % n][0]
        bulge = float(bulges[i])
        if bulge != 0.0:
            edge = skeleton[(i + 1) % n] - skeleton[i]
            length = np.linalg.norm(edge)
            outward = np.array([edge[1], -edge[0]]) / length
            ctrl = 0.5 * (skeleton[i] + skeleton[(i + 1) % n]) + bulge * outward
            nseg = max(2, int(np.ceil(np.linalg.norm(b - a) / spacing)))
            inner = sample_bezier(a, ctrl, b, nseg + 1)[1:-1]
            if inner.shape[0]:
                chunks.append(inner)
                total += inner.shape[0]
    return np.vstack(chunks), anchors


# ---------------------------------------------------------------------------
# sampling


def _u(rng: np.random.Generator, r: Range) -> float:
    return float(rng.uniform(r[0], r[1]))


def _draw_params(category: ClothCategory, ranges: ParamRanges,
                 rng: np.random.Generator) -> TemplateParams:
    if category == ClothCategory.TOWEL:
        r = ranges.towel
        width = _u(rng, r.width)
        height = width * _u(rng, r.aspect)
        return TowelParams(
            width=width,
            height=height,
            edge_bulges=rng.uniform(r.edge_bulge[0], r.edge_bulge[1], 4),
            corner_radii=rng.uniform(r.corner_radius[0], r.corner_radius[1], 4),
        )
    if category == ClothCategory.TSHIRT:
        r = ranges.tshirt
        deg = np.pi / 180.0
        return TshirtParams(
            waist_width=_u(rng, r.waist_width),
            torso_height=_u(rng, r.torso_height),
            shoulder_width=_u(rng, r.shoulder_width),
            neck_width=_u(rng, r.neck_width),
            neck_depth=_u(rng, r.neck_depth),
            sleeve_length_left=_u(rng, r.sleeve_length),
            sleeve_length_right=_u(rng, r.sleeve_length),
            sleeve_width_left=_u(rng, r.sleeve_width),
            sleeve_width_right=_u(rng, r.sleeve_width),
            sleeve_angle_left=_u(rng, r.sleeve_angle_deg) * deg,
            sleeve_angle_right=_u(rng, r.sleeve_angle_deg) * deg,
            edge_bulges=rng.uniform(r.edge_bulge[0], r.edge_bulge[1], 12),
            corner_radii=rng.uniform(r.corner_radius[0], r.corner_radius[1], 12),
        )
    if category == ClothCategory.SHORTS:
        r = ranges.shorts
        deg = np.pi / 180.0
        return ShortsParams(
            waist_width=_u(rng, r.waist_width),
            leg_length_left=_u(rng, r.leg_length),
            leg_length_right=_u(rng, r.leg_length),
            hem_width_left=_u(rng, r.hem_width),
            hem_width_right=_u(rng, r.hem_width),
            spread_left=_u(rng, r.spread_deg) * deg,
            spread_right=_u(rng, r.spread_deg) * deg,
            crotch_depth=_u(rng, r.crotch_depth),
            edge_bulges=rng.uniform(r.edge_bulge[0], r.edge_bulge[1], 7),
            corner_radii=rng.uniform(r.corner_radius[0], r.corner_radius[1], 7),
        )
    raise ValueError(f"unknown category {category!r}")


def build_template(category: ClothCategory, params: TemplateParams,
                   spacing: float = DEFAULT_SPACING) -> ClothTemplate:
    """Deterministically expand explicit parameters into a template.

    Raises GenerationError when the resulting outline is not a simple
    polygon (callers doing random sampling catch this and redraw)."""
    bulges = np.asarray(params.edge_bulges, dtype=float)
    if category == ClothCategory.TOWEL:
        skeleton, names = _towel_skeleton(params)
    elif category == ClothCategory.TSHIRT:
        skeleton, names = _tshirt_skeleton(params)
        # the neckline is edge 6 (neck_right -> neck_left); an inward bulge of
        # twice the neck depth puts the curve apex at neck depth below the
        # shoulder line
        bulges = bulges.copy()
        bulges[6] = -2.0 * params.neck_depth
    elif category == ClothCategory.SHORTS:
        skeleton, names = _shorts_skeleton(params)
    else:
        raise ValueError(f"unknown category {category!r}")

    boundary, anchor_idx = _expand_boundary(
        skeleton, bulges, params.corner_radii, spacing
    )
    if not polygon_is_simple(boundary):
        raise GenerationError(f"{category.value} outline is self-intersecting")
    anchors = {name: anchor_idx[i] for i, name in enumerate(names)}
    return ClothTemplate(category, boundary, anchors, params)


def sample_template(category: ClothCategory,
                    rng: np.random.Generator,
                    ranges: ParamRanges | None = None,
                    spacing: float = DEFAULT_SPACING) -> ClothTemplate:
    """Draw template parameters until they pass the category's sanity checks
    and produce a simple outline.  Deterministic for a given rng state."""
    if ranges is None:
        ranges = ParamRanges()
    for _ in range(_MAX_ATTEMPTS):
        params = _draw_params(category, ranges, rng)
        if isinstance(params, TshirtParams) and not _tshirt_sane(params):
            continue
        if isinstance(params, ShortsParams) and not _shorts_sane(params):
            continue
        try:
            return build_template(category, params, spacing)
        except GenerationError:
            continue
    raise GenerationError(
        f"could not sample a valid {category.value} template in "
        f"{_MAX_ATTEMPTS} attempts; check the configured ranges"
    )


def template_to_mesh(template: ClothTemplate,
                     max_edge: float = DEFAULT_MAX_EDGE):
    """Triangulate a template at the given resolution.  Keypoint anchors map
    to mesh vertices unchanged because triangulation preserves the leading
    boundary vertices."""
    mesh = triangulate(template.boundary, max_edge)
    mesh.keypoint_vertices = dict(template.keypoint_anchors)
    mesh.category = template.category.value
    return mesh
