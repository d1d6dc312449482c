"""Keypoint ordering, mask run-length coding and COCO keypoint export.

Everything here works in continuous pixel coordinates: pixel (row i, col j)
covers [j, j+1] x [i, i+1] and a projected point at the centre of that pixel
has coordinates (j + 0.5, i + 0.5).  Bounding boxes are integer (x, y, w, h)
tuples in the same frame, so the box of a single pixel at (i, j) is
(j, i, 1, 1).

Because the garments are symmetric, the template's keypoint names are only
defined up to a symmetry of the outline: a towel rotated by 90 degrees is the
same towel.  ``order_keypoints`` canonicalises the labelling from the image
alone so that training targets are well defined.  The rules are anchored to
bounding-box corners:

* towel: the corner nearest the box's top-left becomes ``corner0``; of its
  two boundary-adjacent corners the one nearest the top-right becomes
  ``corner1``; the rest follow the outline.
* tshirt: whichever waist keypoint is nearer the box's bottom-left is
  ``waist_left``, and that side choice renames every left/right pair.
* shorts: as tshirt, but anchored at the box's top-left.

Distance ties are broken by smaller x, then smaller y.  Ordering uses the
true projected positions of all keypoints, occluded ones included; occlusion
only affects the exported visibility flag.
"""

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import WriteError
from .render import keypoint_visibility, mask_bbox, visible_mask
from .scene import Scene
from .templates import (
    BOUNDARY_NAME_CYCLE,
    CANONICAL_KEYPOINTS,
    MIRROR_PAIRS,
    ClothCategory,
)

COCO_CATEGORY_IDS: dict[ClothCategory, int] = {
    ClothCategory.TOWEL: 1,
    ClothCategory.TSHIRT: 2,
    ClothCategory.SHORTS: 3,
}

# COCO visibility flags; v=1 (labeled but occluded) is never produced because
# occluded keypoints are exported unlabeled
V_OCCLUDED = 0
V_VISIBLE = 2


@dataclass(frozen=True)
class Keypoint2D:
    """A named keypoint in continuous pixel coordinates."""

    name: str
    x: float
    y: float
    visible: bool


def _rank(kp: Keypoint2D, corner: tuple[float, float]):
    """Sort key for 'nearest to corner, ties by smaller x then smaller y'."""
    dx = kp.x - corner[0]
    dy = kp.y - corner[1]
    return (dx * dx + dy * dy, kp.x, kp.y)


def _check_complete(category: ClothCategory,
                    keypoints) -> dict[str, Keypoint2D]:
    expected = CANONICAL_KEYPOINTS[category]
    by_name: dict[str, Keypoint2D] = {}
    for kp in keypoints:
        if kp.name in by_name:
            raise ValueError(f"duplicate keypoint {kp.name!r}")
        by_name[kp.name] = kp
    missing = set(expected) - set(by_name)
    extra = set(by_name) - set(expected)
    if missing or extra:
        raise ValueError(
            f"keypoint set for {category.value!r} is wrong: "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    return by_name


def order_keypoints(category: ClothCategory | str, keypoints,
                    bbox: tuple[float, float, float, float]
                    ) -> list[Keypoint2D]:
    """Canonicalise keypoint labels from image-space positions.

    ``keypoints`` must be the complete set for the category, carrying the
    template's (arbitrary-side) names.  Returns a new list in canonical
    order, renamed so that entry i is CANONICAL_KEYPOINTS[category][i].
    Raises ValueError when the set is incomplete or has stray names.
    """
    category = ClothCategory(category)
    by_name = _check_complete(category, keypoints)
    x, y, w, h = bbox

    if category is ClothCategory.TOWEL:
        cycle = [by_name[n] for n in BOUNDARY_NAME_CYCLE[category]]
        top_left = (x, y)
        top_right = (x + w, y)
        start = min(range(4), key=lambda i: _rank(cycle[i], top_left))
        # walk the 4-cycle in whichever direction puts the better
        # second corner next
        fwd = cycle[(start + 1) % 4]
        back = cycle[(start - 1) % 4]
        step = 1 if _rank(fwd, top_right) <= _rank(back, top_right) else -1
        ordered = [cycle[(start + step * k) % 4] for k in range(4)]
    else:
        anchor = (x, y + h) if category is ClothCategory.TSHIRT else (x, y)
        swap = (_rank(by_name["waist_right"], anchor)
                < _rank(by_name["waist_left"], anchor))
        rename = {}
        if swap:
            for left, right in MIRROR_PAIRS[category]:
                rename[left], rename[right] = right, left
        ordered = [by_name[rename.get(n, n)]
                   for n in CANONICAL_KEYPOINTS[category]]

    return [dataclasses.replace(kp, name=canonical)
            for kp, canonical in zip(ordered, CANONICAL_KEYPOINTS[category])]


# ---------------------------------------------------------------------------
# run-length encoding (COCO uncompressed, column-major)


def rle_encode(mask: np.ndarray) -> dict:
    """Encode a binary mask as COCO uncompressed RLE.

    The mask is flattened in column-major order and stored as alternating
    run lengths starting with a (possibly zero) run of unset pixels:
    ``{"size": [height, width], "counts": [...]}``.
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    flat = mask.astype(bool).flatten(order="F")
    if flat.size == 0:
        counts: list[int] = []
    else:
        change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        counts = np.diff(bounds).tolist()
        if flat[0]:
            counts.insert(0, 0)
    return {"size": [int(mask.shape[0]), int(mask.shape[1])],
            "counts": counts}


def rle_decode(rle: dict) -> np.ndarray:
    """Inverse of rle_encode; raises ValueError on malformed input."""
    height, width = (int(v) for v in rle["size"])
    counts = np.asarray(rle["counts"], dtype=np.int64)
    if counts.size and counts.min() < 0:
        raise ValueError("negative run length")
    if counts.sum() != height * width:
        raise ValueError(
            f"run lengths sum to {counts.sum()}, expected {height * width}"
        )
    values = (np.arange(counts.size) % 2).astype(bool)
    flat = np.repeat(values, counts)
    return flat.reshape((height, width), order="F")


# ---------------------------------------------------------------------------
# annotation records


@dataclass(frozen=True)
class AnnotationRecord:
    """One image's label set, ready for COCO export.

    ``keypoints`` are in canonical order; occluded entries are already
    zeroed.  ``bbox`` is the tight integer box of the mask, (0, 0, 0, 0)
    when the cloth is entirely hidden.
    """

    image_id: int
    file_name: str
    width: int
    height: int
    category: ClothCategory
    bbox: tuple[int, int, int, int]
    area: int
    segmentation: dict
    keypoints: tuple[Keypoint2D, ...]

    def validate(self) -> None:
        if list(self.segmentation["size"]) != [self.height, self.width]:
            raise ValueError("segmentation size does not match image size")
        mask = rle_decode(self.segmentation)
        if int(mask.sum()) != self.area:
            raise ValueError("area does not match mask pixel count")
        tight = mask_bbox(mask)
        if (tight if tight is not None else (0, 0, 0, 0)) != self.bbox:
            raise ValueError("bbox is not the tight box of the mask")
        names = tuple(kp.name for kp in self.keypoints)
        if names != CANONICAL_KEYPOINTS[self.category]:
            raise ValueError("keypoints are not in canonical order")
        bx, by, bw, bh = self.bbox
        for kp in self.keypoints:
            if kp.visible:
                if not (0.0 <= kp.x < self.width
                        and 0.0 <= kp.y < self.height):
                    raise ValueError(f"visible keypoint {kp.name} off-image")
                if not (bx - 1.0 <= kp.x <= bx + bw + 1.0
                        and by - 1.0 <= kp.y <= by + bh + 1.0):
                    raise ValueError(
                        f"visible keypoint {kp.name} outside dilated bbox"
                    )
            elif (kp.x, kp.y) != (0.0, 0.0):
                raise ValueError(f"occluded keypoint {kp.name} not zeroed")


def make_annotation(image_id: int, file_name: str,
                    category: ClothCategory | str, mask: np.ndarray,
                    keypoints) -> AnnotationRecord:
    """Assemble an AnnotationRecord from a visibility mask and raw keypoints.

    Keypoints arrive with template names and true projected positions; this
    orders them canonically, then downgrades to occluded any that fall
    outside the image or outside the mask bbox dilated by one pixel (a
    visible keypoint must sit on or next to visible cloth).  Downgraded and
    occluded keypoints are stored as (0, 0, not visible).
    """
    category = ClothCategory(category)
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    tight = mask_bbox(mask)
    bbox = tight if tight is not None else (0, 0, 0, 0)
    # an empty mask leaves no anchor corners; order against the full image
    # (everything is exported occluded anyway, so only determinism matters)
    order_box = bbox if tight is not None else (0, 0, width, height)
    ordered = order_keypoints(category, keypoints, order_box)

    bx, by, bw, bh = bbox
    final = []
    for kp in ordered:
        keep = (tight is not None and kp.visible
                and 0.0 <= kp.x < width and 0.0 <= kp.y < height
                and bx - 1.0 <= kp.x <= bx + bw + 1.0
                and by - 1.0 <= kp.y <= by + bh + 1.0)
        if keep:
            final.append(kp)
        else:
            final.append(Keypoint2D(kp.name, 0.0, 0.0, False))

    return AnnotationRecord(
        image_id=int(image_id),
        file_name=str(file_name),
        width=int(width),
        height=int(height),
        category=category,
        bbox=tuple(int(v) for v in bbox),
        area=int(mask.sum()),
        segmentation=rle_encode(mask),
        keypoints=tuple(final),
    )


def annotate_scene(scene: Scene, geometry, image_id: int,
                   file_name: str) -> AnnotationRecord:
    """Project, test visibility and assemble the record for one scene.

    ``geometry`` is the SceneGeometry built for rendering; reusing it keeps
    the mask, the visibility rays and the image consistent by construction.
    """
    mesh = scene.cloth_mesh
    category = ClothCategory(mesh.category)
    mask, _ = visible_mask(scene, geometry)

    names = CANONICAL_KEYPOINTS[category]
    points = np.array([mesh.vertices[mesh.keypoint_vertices[n]]
                       for n in names])
    pixels, depth = scene.camera.project(points)
    raw = []
    for i, name in enumerate(names):
        vis = bool(depth[i] > 0.0) and keypoint_visibility(
            geometry, scene.camera, mesh, name)
        raw.append(Keypoint2D(name, float(pixels[i, 0]),
                              float(pixels[i, 1]), vis))
    return make_annotation(image_id, file_name, category, mask, raw)


# ---------------------------------------------------------------------------
# COCO document assembly


def _skeleton(category: ClothCategory) -> list[list[int]]:
    """Outline cycle as 1-indexed canonical keypoint index pairs."""
    canonical = CANONICAL_KEYPOINTS[category]
    cycle = BOUNDARY_NAME_CYCLE[category]
    idx = {name: i + 1 for i, name in enumerate(canonical)}
    return [[idx[cycle[i]], idx[cycle[(i + 1) % len(cycle)]]]
            for i in range(len(cycle))]


def coco_categories() -> list[dict]:
    return [
        {
            "id": COCO_CATEGORY_IDS[cat],
            "name": cat.value,
            "supercategory": "cloth",
            "keypoints": list(CANONICAL_KEYPOINTS[cat]),
            "skeleton": _skeleton(cat),
        }
        for cat in ClothCategory
    ]


def coco_document(records) -> dict:
    """Build the COCO keypoint dataset dict (images/annotations/categories).

    Records are sorted by image id; each image carries exactly one
    annotation whose id equals the image id.
    """
    records = sorted(records, key=lambda r: r.image_id)
    ids = [r.image_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate image ids in records")

    images = []
    annotations = []
    for rec in records:
        images.append({
            "id": rec.image_id,
            "file_name": rec.file_name,
            "width": rec.width,
            "height": rec.height,
        })
        flat: list[float | int] = []
        for kp in rec.keypoints:
            flat.extend([kp.x, kp.y, V_VISIBLE if kp.visible else V_OCCLUDED])
        annotations.append({
            "id": rec.image_id,
            "image_id": rec.image_id,
            "category_id": COCO_CATEGORY_IDS[rec.category],
            "bbox": list(rec.bbox),
            "area": rec.area,
            "iscrowd": 0,
            "segmentation": {
                "size": list(rec.segmentation["size"]),
                "counts": list(rec.segmentation["counts"]),
            },
            "keypoints": flat,
            "num_keypoints": sum(kp.visible for kp in rec.keypoints),
        })
    return {
        "images": images,
        "annotations": annotations,
        "categories": coco_categories(),
    }


def dumps_coco(records) -> str:
    """Serialise records deterministically (sorted keys, fixed indent)."""
    return json.dumps(coco_document(records), sort_keys=True, indent=2) + "\n"


def export_coco(records, path) -> None:
    """Write the COCO JSON file; I/O failures raise WriteError."""
    text = dumps_coco(records)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise WriteError(f"cannot write annotations to {path}: {exc}") from exc


def load_coco(path) -> list[AnnotationRecord]:
    """Parse a COCO keypoint file back into AnnotationRecords.

    Round trip: for files produced by export_coco, re-exporting the result
    reproduces the file byte for byte.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise WriteError(f"cannot read annotations from {path}: {exc}"
                         ) from exc

    images = {img["id"]: img for img in doc["images"]}
    id_to_category = {v: k for k, v in COCO_CATEGORY_IDS.items()}
    records = []
    for ann in doc["annotations"]:
        image = images[ann["image_id"]]
        category = id_to_category[ann["category_id"]]
        names = CANONICAL_KEYPOINTS[category]
        flat = ann["keypoints"]
        if len(flat) != 3 * len(names):
            raise ValueError(
                f"annotation {ann['id']}: expected {3 * len(names)} keypoint "
                f"values, got {len(flat)}"
            )
        kps = tuple(
            Keypoint2D(name, float(flat[3 * i]), float(flat[3 * i + 1]),
                       flat[3 * i + 2] == V_VISIBLE)
            for i, name in enumerate(names)
        )
        records.append(AnnotationRecord(
            image_id=int(ann["image_id"]),
            file_name=image["file_name"],
            width=int(image["width"]),
            height=int(image["height"]),
            category=category,
            bbox=tuple(int(v) for v in ann["bbox"]),
            area=int(ann["area"]),
            segmentation={
                "size": [int(v) for v in ann["segmentation"]["size"]],
                "counts": [int(v) for v in ann["segmentation"]["counts"]],
            },
            keypoints=kps,
        ))
    return records


__all__ = [
    "AnnotationRecord",
    "COCO_CATEGORY_IDS",
    "Keypoint2D",
    "annotate_scene",
    "coco_categories",
    "coco_document",
    "dumps_coco",
    "export_coco",
    "load_coco",
    "make_annotation",
    "order_keypoints",
    "rle_decode",
    "rle_encode",
]
