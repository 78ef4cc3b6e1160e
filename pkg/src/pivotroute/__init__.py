"""Multi-hop pivot translation routing: learned LSTM router, rule baselines,
metrics, and deterministic synthetic benchmark worlds."""

from .langdb import (
    Language,
    LanguageRegistry,
    QualityMatrix,
    is_distant,
    lang_avg_bleu,
    load_quality_matrix,
    load_registry,
)
from .pathspace import Path, PathSet, count_paths, enumerate_paths, estimate_eval_cost, rank_paths
from .featurizer import FeatureSequence, Token, featurize, normalize_bleu, tokenize_path
from .neuralnet import LtrModel, TrainConfig, TrainReport, forward, grad_check, init_model, train
from .routers import (
    METHODS,
    RoutingResult,
    build_pivot_map,
    route_direct,
    route_ground_truth,
    route_hop_average,
    route_ltr,
    route_prior_pivot,
    route_random,
)
from .evaluator import CdfCurve, MethodReport, avg_selected_bleu, cdf, path_length_distribution, topk_accuracy
from .synthworld import PathOracle, RoutingDataset, World, WorldConfig, apply_supervised_overlay, build_dataset, gen_world

__version__ = "0.1.0"
