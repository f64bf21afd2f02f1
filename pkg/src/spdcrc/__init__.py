"""Collaborative representation classification of SPD covariance descriptors."""
__version__ = "0.1.0"

from .classify import (
    METHODS,
    ClassificationResult,
    CrcConfig,
    Gallery,
    KernelEmbedding,
    classwise_residuals,
    embed_query,
    euclidean_crc_classify,
    kernel_embed,
    log_crc_classify,
    logek_crc_classify,
    ridge_solve,
    spd_crc_classify,
)
from .descriptors import DescriptorConfig, SampleSet, covariance_descriptor, preprocess_image
from .spd import (
    cross_kernel,
    gram_matrix,
    le_kernel,
    lem_distance,
    make_spd,
    matrix_exp,
    matrix_log,
    vectorize_log,
)
