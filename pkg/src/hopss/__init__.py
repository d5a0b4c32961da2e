"""Training-data generation for nonlinear temporal PDEs.

A few high-accuracy trajectories from a semi-implicit pseudo-spectral solver
are downsampled to training resolution and then recombined by homologous
perturbation, ``u_new = u_i + mu * u_j + xi``, with the forcing recomputed
from the discrete residual so every new pair satisfies the coarse equation.
"""

from .grf import GrfParams, sample_grf
from .hopss import (
    HopssConfig,
    SolutionPair,
    discrete_residual,
    generate_hopss_dataset,
    generate_mixup_dataset,
    homologous_perturb,
    mixup_sample,
    rhs_variation,
)
from .noise import NoiseSpec, noise_amplitude, synthesize_noise
from .pde import NS2D, BlowUpError, Burgers, KdV, Trajectory, cn_step, solve_trajectory
from .pipeline import BaseConfig, recipe, verify_dataset
from .resample import downsample_space, downsample_time
from .spectral import SpatialGrid, dealias, make_grid, spectral_derivative, velocity_from_vorticity
from .store import DatasetManifest, read_dataset, write_dataset

__version__ = "0.1.0"

__all__ = [
    "BaseConfig",
    "BlowUpError",
    "Burgers",
    "DatasetManifest",
    "GrfParams",
    "HopssConfig",
    "KdV",
    "NS2D",
    "NoiseSpec",
    "SolutionPair",
    "SpatialGrid",
    "Trajectory",
    "cn_step",
    "dealias",
    "discrete_residual",
    "downsample_space",
    "downsample_time",
    "generate_hopss_dataset",
    "generate_mixup_dataset",
    "homologous_perturb",
    "make_grid",
    "mixup_sample",
    "noise_amplitude",
    "read_dataset",
    "recipe",
    "rhs_variation",
    "sample_grf",
    "solve_trajectory",
    "spectral_derivative",
    "synthesize_noise",
    "velocity_from_vorticity",
    "verify_dataset",
    "write_dataset",
]
