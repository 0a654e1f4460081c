"""Forest package: native random forest, cross-validation and model files"""

from .config import ForestConfig, ForestError
from .encoding import FeatureEncoding, fit_encodings, encode_frame, encode_row
from .tree import (
    Side,
    Split,
    Leaf,
    Internal,
    TreeNode,
    SplitCandidate,
    NumericHistogram,
    gini,
    histogram_numeric,
    order_categories,
    best_split,
    build_tree,
    draw_sample_weights,
    predict_tree,
    iter_internal,
    iter_leaves,
    tree_depth
)
from .model import (
    Forest,
    VariableImportance,
    FoldResult,
    CVReport,
    SchemaMismatchError,
    tree_rng,
    train,
    predict,
    predict_dataset,
    hard_labels,
    cross_validate,
    variable_importance
)
from .serialization import (
    MODEL_FORMAT,
    ModelFormatError,
    dumps_model,
    loads_model,
    save_model,
    load_model
)

__all__ = [
    'ForestConfig',
    'ForestError',
    'FeatureEncoding',
    'fit_encodings',
    'encode_frame',
    'encode_row',
    'Side',
    'Split',
    'Leaf',
    'Internal',
    'TreeNode',
    'SplitCandidate',
    'NumericHistogram',
    'gini',
    'histogram_numeric',
    'order_categories',
    'best_split',
    'build_tree',
    'draw_sample_weights',
    'predict_tree',
    'iter_internal',
    'iter_leaves',
    'tree_depth',
    'Forest',
    'VariableImportance',
    'FoldResult',
    'CVReport',
    'SchemaMismatchError',
    'tree_rng',
    'train',
    'predict',
    'predict_dataset',
    'hard_labels',
    'cross_validate',
    'variable_importance',
    'MODEL_FORMAT',
    'ModelFormatError',
    'dumps_model',
    'loads_model',
    'save_model',
    'load_model'
]
