"""Simulated exciton-polariton lattice reservoir computer for MNIST."""

from .config import ExperimentConfig
from .encoder import build_projection, encode, make_mask_family, to_pump
from .lattice import LatticeParams, evolve_to_steady, render_camera, transmission
from .readout import predict, train_logreg

__all__ = [
    "ExperimentConfig",
    "LatticeParams",
    "build_projection",
    "encode",
    "evolve_to_steady",
    "make_mask_family",
    "predict",
    "render_camera",
    "to_pump",
    "train_logreg",
    "transmission",
]
