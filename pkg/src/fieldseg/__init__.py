"""Field boundary delineation toolkit."""

from .errors import (
    BadMagicError,
    DataError,
    FieldsegError,
    HeaderOverflowError,
    InvariantError,
    MissingPredictionsError,
    TruncatedFileError,
)
from .geometry import FieldPolygon
from .raster import (
    BinaryMask,
    GeoTransform,
    InstanceMap,
    NoLabelMask,
    Raster,
    TileTensor,
    threshold,
)
from .tileio import read_tile, write_tile

__version__ = "0.1.0"

__all__ = [
    "BadMagicError", "BinaryMask", "DataError", "FieldPolygon",
    "FieldsegError", "GeoTransform", "HeaderOverflowError", "InstanceMap",
    "InvariantError", "MissingPredictionsError", "NoLabelMask", "Raster",
    "TileTensor", "TruncatedFileError", "read_tile", "threshold",
    "write_tile",
]
