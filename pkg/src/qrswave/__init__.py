"""QRS detection with a single-scale continuous wavelet transform.

Pipeline: sampled wavelet -> CWT -> squared coefficients y[n] -> 120 ms
trailing maximum z[n] -> fixed-threshold segmentation -> R peak per segment,
scored with RMM/MATE/FOM on short segments and SEN/PPR/DER on whole records.
"""

from .cwt import CwtOutput, DenoisedSignal, EcgSignal, cwt_transform, square_signal
from .detector import Detection, DetectorConfig, EnvelopeSignal, detect_beats, max_filter
from .metrics import (
    BeatAnnotation,
    MatchResult,
    PerfectTimingError,
    RecordMetrics,
    SegmentMetrics,
    fom,
    mate,
    match_beats,
    record_metrics,
    rmm,
)
from .wavelets import SampledWavelet, WaveletKind, cascade_wavelet, mexican_hat_eval, sample_wavelet
from .wfdb_io import EcgRecord, extract_segment, read_annotations, read_dat_212, read_header, read_record

__version__ = "0.1.0"
