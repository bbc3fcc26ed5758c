# Quantile Spectral Analysis
# Laplace and copula periodograms, smoothed estimators and simulated model spectra

__version__ = "0.1.0"

from .models import (
    QSpecError,
    InvalidTimeSeries,
    NonFourierFrequency,
    UnknownFrequency,
    UnknownLevel,
    GridMismatch,
    TimeSeries,
    FourierGrid,
    LevelGrid,
    QSpecQuantity,
    fold_frequency,
    get_values,
)
from .bootstrap import BootSpec, InvalidBlockLength, mbb_positions
from .quantreg import DegenerateDesign, SolverNotConverged, rq_fit
from .freqrep import (
    FreqRep,
    LevelOutOfRange,
    clipped_ft,
    empirical_ranks,
    qreg_estimator,
    qreg_fit,
)
from .periodogram import QuantilePG, quantile_pg, quantile_pg_from_series
from .smoothing import (
    InvalidBandwidth,
    KernelWeight,
    SmoothedPG,
    SpecDistrWeight,
    UnknownKernel,
    kernel_weights,
    smooth_pg,
    smoothed_pg_from_series,
)
from .inference import (
    ConfidenceBand,
    InsufficientReplicates,
    WeightKindMismatch,
    ci,
    sd_naive,
)
from .simulation import (
    CorruptState,
    ModelSpec,
    QuantileSDState,
    StateMismatch,
    UnknownModel,
    get_model,
    increase_precision,
    integr_quantile_sd,
    load_state,
    qar1_generate,
    quantile_sd,
    save_state,
)
from .evaluation import RIMSEStudy, StudyConfig, rimse
from .documents import DocumentError, ResultDocument, read_document, write_document

__all__ = [
    # Core
    "QSpecError",
    "InvalidTimeSeries",
    "NonFourierFrequency",
    "UnknownFrequency",
    "UnknownLevel",
    "GridMismatch",
    "TimeSeries",
    "FourierGrid",
    "LevelGrid",
    "QSpecQuantity",
    "fold_frequency",
    "get_values",
    # Frequency representations
    "BootSpec",
    "InvalidBlockLength",
    "mbb_positions",
    "DegenerateDesign",
    "SolverNotConverged",
    "rq_fit",
    "FreqRep",
    "LevelOutOfRange",
    "clipped_ft",
    "empirical_ranks",
    "qreg_estimator",
    "qreg_fit",
    # Periodograms and smoothing
    "QuantilePG",
    "quantile_pg",
    "quantile_pg_from_series",
    "InvalidBandwidth",
    "KernelWeight",
    "SmoothedPG",
    "SpecDistrWeight",
    "UnknownKernel",
    "kernel_weights",
    "smooth_pg",
    "smoothed_pg_from_series",
    # Inference
    "ConfidenceBand",
    "InsufficientReplicates",
    "WeightKindMismatch",
    "ci",
    "sd_naive",
    # Model spectra
    "CorruptState",
    "ModelSpec",
    "QuantileSDState",
    "StateMismatch",
    "UnknownModel",
    "get_model",
    "increase_precision",
    "integr_quantile_sd",
    "load_state",
    "qar1_generate",
    "quantile_sd",
    "save_state",
    "RIMSEStudy",
    "StudyConfig",
    "rimse",
    # Documents
    "DocumentError",
    "ResultDocument",
    "read_document",
    "write_document",
]
