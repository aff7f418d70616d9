"""forgerykit: image forgery detection via compression-difference features.

The pipeline: build a hybrid RGB + compression-residual input, train a small
convolutional binary classifier (or import externally produced scores),
calibrate a model-specific decision threshold by maximizing the Youden Index
on the ROC curve, and report balanced metrics (MCC, AUC, weighted
precision/recall/F1) with bit-exact file formats.
"""

from .calibration import (
    ScoredSample,
    ThresholdCalibration,
    apply_threshold,
    export_scores,
    fixed_threshold_calibration,
    import_scores,
    load_calibration,
    save_calibration,
    youden_optimal_threshold,
)
from .codec import (
    DiffTensor,
    ImageTensor,
    InputMode,
    PreprocessConfig,
    TensorForm,
    build_input,
    compute_fdiff,
    decode_image,
    encode_jpeg,
    encode_png,
    jpeg_roundtrip,
    preprocess_image,
    resize_bilinear,
)
from .dataset import (
    DatasetLayout,
    Label,
    Manifest,
    SampleRecord,
    Split,
    generate_synthetic_dataset,
    scan_dataset,
    stratified_split,
    stratified_split_three,
)
from .metrics import (
    Averaging,
    ConfusionMatrix,
    MetricsRow,
    RocCurve,
    auc,
    basic_metrics,
    confusion_matrix,
    mcc,
    roc_curve,
    roc_to_csv,
)
from .report import (
    ComparisonTable,
    EvaluationReport,
    compare_models,
    evaluate,
    export_confusion,
    load_report,
    report_from_json,
    report_to_json,
    save_report,
)

__version__ = "0.1.0"
