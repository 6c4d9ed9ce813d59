from .images import read_image, to_uint8, to_unit, write_image
from .loader import ImageStore, batch_iterator
from .manifest import (
    BINARY_CLASSES,
    DatasetManifest,
    ManifestError,
    SampleRecord,
    merge,
)
from .neu import NEU_CLASSES, NEU_SIDE, neu_manifest
from .prep import (
    CleanseThresholds,
    Rejection,
    Source,
    aggregate,
    assign_split,
    balance,
    cleanse,
    format_rejections,
    image_stats,
    offline_rotations,
)
from .transforms import (
    center_crop,
    mirror,
    resize_shorter,
    test_preprocess,
    train_preprocess,
)
