"""Two-modality feature fusion with CCA, from volumes to cross-validated SVM reports."""

from .cca_fusion import CcaModel, CovarianceSet, FusedFeatures, compute_covariances, fit_cca, transform_fuse
from .classifier import SvmModel, predict, train_binary, train_multiclass
from .evaluation import ExperimentConfig, evaluate, stratified_kfold
from .features import FeatureMatrix, load_feature_matrix, write_feature_matrix
from .projection import Image2D, max_projection, min_projection, resize_image, toy_descriptor
from .sampling import LabeledSet, adasyn
from .volume_io import SliceSelection, Volume, load_volume, save_volume, slice_window

__version__ = "0.1.0"

__all__ = [
    "CcaModel",
    "CovarianceSet",
    "ExperimentConfig",
    "FeatureMatrix",
    "FusedFeatures",
    "Image2D",
    "LabeledSet",
    "SliceSelection",
    "SvmModel",
    "Volume",
    "adasyn",
    "compute_covariances",
    "evaluate",
    "fit_cca",
    "load_feature_matrix",
    "load_volume",
    "max_projection",
    "min_projection",
    "predict",
    "resize_image",
    "save_volume",
    "slice_window",
    "stratified_kfold",
    "toy_descriptor",
    "train_binary",
    "train_multiclass",
    "transform_fuse",
    "write_feature_matrix",
]
