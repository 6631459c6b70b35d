from .grid import Grid, GridError
from .field import (SCALAR, VECTOR, SYM_TENSOR, SpectralField, RankError, ShapeError,
                    TENSOR_PAIRS, TENSOR_INDEX, to_physical, to_spectral,
                    tensor_full, tensor_pack, tensor_trace, remove_trace,
                    frobenius_magnitude, place_mode, hermitian_symmetrize,
                    hermitian_defect)
from .calculus import (gradient, curl, divergence, time_derivative, project_band,
                       mode_support, biot_savart, leray_split, inverse_divergence)
from .mollifier import bump, bump_transform, mollify, spatial_multiplier, time_kernel
from .norms import norm, lp_norm_series, l2_norm_parseval, sobolev_norm_series
from .io import write_field, read_field

__all__ = [
    "Grid", "GridError", "SpectralField", "RankError", "ShapeError",
    "SCALAR", "VECTOR", "SYM_TENSOR", "TENSOR_PAIRS", "TENSOR_INDEX",
    "to_physical", "to_spectral", "tensor_full", "tensor_pack", "tensor_trace",
    "remove_trace", "frobenius_magnitude", "place_mode", "hermitian_symmetrize",
    "hermitian_defect", "gradient", "curl", "divergence", "time_derivative",
    "project_band", "mode_support", "biot_savart", "leray_split",
    "inverse_divergence", "bump", "bump_transform", "mollify",
    "spatial_multiplier", "time_kernel", "norm", "lp_norm_series",
    "l2_norm_parseval", "sobolev_norm_series", "write_field", "read_field",
]
