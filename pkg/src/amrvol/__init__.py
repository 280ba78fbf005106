"""CPU direct volume rendering for cell-centered AMR data.

Pipeline: greedy same-level brick meshing, decomposition of the
overlapping tent-basis domains into disjoint active brick regions,
smooth tent-basis reconstruction, and adaptive front-to-back ray
marching driven by off-axis-capable cameras.
"""

from .amr import AMRField, Cell, ValidationReport, oracle_sample, oracle_sample_many, validate
from .bricks import (
    ActiveBrickRegion,
    Box,
    Brick,
    BrickStructure,
    abr_value_range,
    active_set,
    build_abrs,
    build_bricks,
    extended_domain,
    traverse,
)
from .camera import (
    Channel,
    Ray,
    SingularMatrixError,
    frustum,
    look_at,
    perspective,
    ray_for_ndc,
    ray_for_pixel,
    translate,
)
from .render import (
    FrameStats,
    RenderSettings,
    Scene,
    compute_active_mask,
    frame_time_ms,
    march,
    render_frame,
    sample_positions,
)
from .sampling import basis_weight, sample, sample_at
from .transfer import TransferFunction, grayscale_ramp

__version__ = "0.1.0"

__all__ = [
    "AMRField", "Cell", "ValidationReport", "oracle_sample", "oracle_sample_many",
    "validate", "ActiveBrickRegion", "Box", "Brick", "BrickStructure",
    "abr_value_range", "active_set", "build_abrs", "build_bricks",
    "extended_domain", "traverse", "Channel", "Ray", "SingularMatrixError",
    "frustum", "look_at", "perspective", "ray_for_ndc", "ray_for_pixel",
    "translate", "FrameStats", "RenderSettings", "Scene", "compute_active_mask",
    "frame_time_ms", "march", "render_frame", "sample_positions",
    "basis_weight", "sample", "sample_at", "TransferFunction", "grayscale_ramp",
]
