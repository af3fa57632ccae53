"""Wavelet scalogram imaging and CNN classification for signal windows."""

from .signal_io import (
    Dataset,
    DatasetSchema,
    MultiAxisSample,
    Signal,
    SplitSpec,
    energy,
    energy_entropy,
    load_dataset,
    magnitude,
    save_dataset,
    split_train_test,
)
from .transform import (
    ScaleGrid,
    Scalogram,
    Spectrogram,
    build_scale_grid,
    cwt,
    default_scale_grid,
    dft_magnitude,
    fourier_series_coeffs,
    generalized_fourier_coeffs,
    read_cwts,
    stft,
    write_cwts,
)
from .wavelets import DOG, EvalGrid, Morlet, MotherWavelet, Paul, admissibility_report, parse_wavelet, vanishing_moments
from .imaging import (
    CropSpec,
    ImagePlane,
    ImageTensor,
    Provenance,
    export_png,
    export_raw,
    import_png,
    import_raw,
    resize,
    sliding_crops,
    split_bands,
    stack_channels,
    to_grayscale,
)
from .metrics import Metrics, confusion_matrix
from .pipeline import PipelineConfig, dataset_to_tensors, sample_to_tensor, tensors_to_arrays

__version__ = "0.1.0"
