from camarl.acd.dataset import (
    SeriesSample, collect_dataset, episode_to_sample, load_dataset,
    preprocess, save_dataset, split_dataset)
from camarl.acd.inference import (
    adjacency, evaluate_accuracy, make_bits_fn, predict_c)
from camarl.acd.loss import ElboTerms, elbo_loss
from camarl.acd.model import AcdModel, ordered_pairs
from camarl.acd.preprocess import (
    POLY_ORDER, minmax_normalize, preprocess_series, savgol_smooth, sg_window)
from camarl.acd.training import (
    AcdResult, load_acd, save_acd, sigma_for, train_acd)

__all__ = [
    "AcdModel", "AcdResult", "ElboTerms", "POLY_ORDER", "SeriesSample",
    "adjacency", "collect_dataset", "elbo_loss", "episode_to_sample",
    "evaluate_accuracy", "load_acd", "load_dataset", "make_bits_fn",
    "minmax_normalize", "save_dataset",
    "ordered_pairs", "predict_c", "preprocess", "preprocess_series",
    "save_acd", "savgol_smooth", "sg_window", "sigma_for", "split_dataset",
    "train_acd",
]
