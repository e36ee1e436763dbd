"""Scattering, non-reciprocity and optimization for the four-mode diamond network."""
from .errors import (
    DegenerateTransmission,
    DimensionMismatch,
    InvalidGraph,
    InvalidParams,
    ParseError,
    SingularMatrix,
    UnknownFigure,
    UnstableIntegration,
    ValidationError,
)
from .model import (
    CouplingGraph,
    DiamondParams,
    ModeSpec,
    PumpConfig,
    ScatteringResult,
    build_diamond_matrix,
    build_graph_matrix,
    contractivity_check,
    diamond_scattering,
    directional_gains,
    extrinsic_nonreciprocity,
    extrinsic_W,
    intrinsic_nonreciprocity,
    scattering,
    to_db,
)

__version__ = "0.1.0"
