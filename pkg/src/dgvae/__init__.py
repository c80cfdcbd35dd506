"""Dirichlet graph variational autoencoder with a Heatts encoder."""

from .decoder import DecoderConfig
from .graph import Graph, Laplacian, build_laplacian, generate_graph, generate_sbm
from .heatts import EncoderParams, HeattsLayer, encode, init_encoder, propagate
from .latent import PriorMoments, kl_divergence, prior_moments, sample_z
from .spectral import FilterSpec, Spectrum, eigendecompose, filter_distance
from .train import TrainConfig, TrainState, train_generation, train_step

__version__ = "0.1.0"
