"""clothforge: procedural synthetic-data pipeline for almost-flattened cloth.

Generates images with pixel-accurate keypoint, mask and bounding-box
annotations of towels, T-shirts and shorts dropped onto a plane, plus the
evaluation metrics used to score keypoint detectors on such data.
"""

from .annotate import (
    AnnotationRecord,
    Keypoint2D,
    annotate_scene,
    export_coco,
    load_coco,
    make_annotation,
    order_keypoints,
)
from .config import PipelineConfig, default_config, derive_seed
from .errors import (
    ClothforgeError,
    ConfigError,
    GenerationError,
    SimulationDiverged,
    StageOrderError,
    WriteError,
)
from .geometry import ClothMesh
from .metrics import (
    Detection,
    EvalReport,
    EvalSample,
    akd,
    average_precision,
    decode_heatmap,
    encode_heatmap,
    evaluate,
    evaluate_files,
    mean_ap,
)
from .pipeline import bench, generate
from .scene import Scene, SceneConfig, compose_scene
from .simulator import DeformConfig, SimParams, deform_procedure
from .templates import (
    CANONICAL_KEYPOINTS,
    ClothCategory,
    ParamRanges,
    sample_template,
    template_to_mesh,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "CANONICAL_KEYPOINTS",
    "ClothCategory",
    "ClothMesh",
    "ClothforgeError",
    "ConfigError",
    "DeformConfig",
    "Detection",
    "EvalReport",
    "EvalSample",
    "GenerationError",
    "Keypoint2D",
    "ParamRanges",
    "PipelineConfig",
    "Scene",
    "SceneConfig",
    "SimParams",
    "SimulationDiverged",
    "StageOrderError",
    "WriteError",
    "akd",
    "annotate_scene",
    "average_precision",
    "bench",
    "compose_scene",
    "decode_heatmap",
    "default_config",
    "deform_procedure",
    "derive_seed",
    "encode_heatmap",
    "evaluate",
    "evaluate_files",
    "export_coco",
    "generate",
    "load_coco",
    "make_annotation",
    "mean_ap",
    "order_keypoints",
    "sample_template",
    "template_to_mesh",
]
