from .dataset import MATERIALS, SynthConfig, generate_dataset, synth_image, synthetic_topup
from .labels import (
    EDGE_BAND,
    MIN_REGION_PIXELS,
    min_region_pixels,
    SHAPE_KINDS,
    LabelImage,
    ShapeParams,
    centroid,
    generate_label,
    in_edge_band,
)
from .render import DEFAULT_STYLE, STYLES, feather_weights, render_defect
from .texture import TextureParams, render_texture
