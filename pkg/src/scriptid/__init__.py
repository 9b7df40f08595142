"""Block-level script identification with Gabor wavelet texture features.

Pipeline: decode a page, binarize and denoise it, decompose it into 4^l
quad-tree blocks, filter every block through a 5-scale x 6-orientation
Gabor bank, extract 60 energy/entropy features, and classify the blocks
with a small MLP (k-NN baseline included).
"""

from .classify import (
    EvalReport,
    MlpModel,
    TrainConfig,
    cross_validate,
    evaluate,
    kfold_split,
    knn_predict,
    predict,
    train_mlp,
)
from .features import (
    Dataset,
    FeatureVector,
    LabeledSample,
    energy,
    entropy,
    extract_dataset,
    extract_features,
)
from .gabor import (
    FilterBank,
    GaborKernel,
    SubbandResponse,
    convolve,
    filter_block,
    make_filter_bank,
    make_kernel,
    wave_vector,
)
from .preprocess import (
    BinaryImage,
    PreprocessConfig,
    binarize,
    gaussian_smooth,
    otsu_threshold,
    prepare_page,
)
from .quadtree import Block, PageDecomposition, decompose, foreground_ratio, pad_to_level
from .raster import GrayImage, RgbImage, load_image, to_grayscale
from .synth import SynthClass, SynthSpec, default_spec, gen_corpus, gen_page, write_corpus

__version__ = "0.1.0"

__all__ = [
    "BinaryImage",
    "Block",
    "Dataset",
    "EvalReport",
    "FeatureVector",
    "FilterBank",
    "GaborKernel",
    "GrayImage",
    "LabeledSample",
    "MlpModel",
    "PageDecomposition",
    "PreprocessConfig",
    "RgbImage",
    "SubbandResponse",
    "SynthClass",
    "SynthSpec",
    "TrainConfig",
    "binarize",
    "convolve",
    "cross_validate",
    "decompose",
    "default_spec",
    "energy",
    "entropy",
    "evaluate",
    "extract_dataset",
    "extract_features",
    "filter_block",
    "foreground_ratio",
    "gaussian_smooth",
    "gen_corpus",
    "gen_page",
    "kfold_split",
    "knn_predict",
    "load_image",
    "make_filter_bank",
    "make_kernel",
    "otsu_threshold",
    "pad_to_level",
    "predict",
    "prepare_page",
    "to_grayscale",
    "train_mlp",
    "wave_vector",
    "write_corpus",
]
