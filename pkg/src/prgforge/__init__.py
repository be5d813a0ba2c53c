"""prgforge: provably hard generators from local PRGs, with receipts.

The package builds generators whose outputs are pseudorandom under standard
local-PRG assumptions, compiles them (and their threshold-circuit
discriminators) to exact fixed-point ReLU networks with audited complexity
profiles, certifies output diversity and Wasserstein gaps, and runs the
distinguisher attacks that fail to tell the outputs from noise.
"""

from .attack import (AttackReport, MlpNet, TrainConfig, dcgan_test_loss,
                     init_mlp, ipm_report, subgaussian_scale, threshold_scan,
                     train_discriminator)
from .circuits import (Gate, LtfCircuit, layer_circuit, ltf_to_relu,
                       random_layered_circuit)
from .compiler import (FourierExpansion, Predicate, affine_net, clamp_net,
                       compile_parity, compile_predicate, compose,
                       embed_inputs, fourier_transform, leaky_to_relu,
                       linear_combine, pad_depth, pad_size, rescale_layers,
                       stack_outputs)
from .diversity import (DiversityCertificate, LevyBound, certify_leaky_target,
                        diversity_from_separation, levy_box,
                        levy_to_diversity, mc_small_ball_mass,
                        min_pairwise_distance, support_gap_lower_bound,
                        tensorize_w1, w1_atoms_vs_uniform01, w1_empirical)
from .errors import (CertificateRefused, ForgeError, GridError,
                     HeadroomExceeded, UserInputError)
from .experiment import (CONFIG_SCHEMA, config_digest, load_config,
                         run_experiment, validate_config)
from .fixedpoint import FixedScalar
from .hardness import (HardFunction, MixtureDist, agreement_probability,
                       build_hard_function, check_hardness_bound,
                       fooling_advantage, hardness_report)
from .pipeline import (GeneratorSpec, TargetModel, assemble,
                       bits_per_coordinate, build_bit_decoder, build_frontend,
                       load_generator, sample_generator, sample_target,
                       save_generator)
from .prg import (Hypergraph, LocalPrg, PrgImage, enumerate_image,
                  enumerate_seeds, prg_eval, sample_hypergraph, tsa_predicate)
from .relunet import (ComplexityProfile, Layer, ReluNet, empirical_lipschitz,
                      power_iteration_norm)
from .samples import SampleSet, make_rng, sample_seeds

__version__ = "0.1.0"

__all__ = [
    "AttackReport", "CertificateRefused", "ComplexityProfile",
    "CONFIG_SCHEMA", "DiversityCertificate", "FixedScalar", "ForgeError",
    "FourierExpansion", "Gate", "GeneratorSpec", "GridError", "HardFunction",
    "HeadroomExceeded", "Hypergraph", "Layer", "LevyBound", "LocalPrg",
    "LtfCircuit", "MixtureDist", "MlpNet", "Predicate", "PrgImage", "ReluNet",
    "SampleSet", "TargetModel", "TrainConfig", "UserInputError",
    "affine_net", "agreement_probability", "assemble", "bits_per_coordinate",
    "build_bit_decoder", "build_frontend", "build_hard_function",
    "certify_leaky_target", "check_hardness_bound", "clamp_net",
    "compile_parity", "compile_predicate", "compose", "config_digest",
    "dcgan_test_loss", "diversity_from_separation", "embed_inputs",
    "empirical_lipschitz", "enumerate_image", "enumerate_seeds",
    "fooling_advantage", "fourier_transform", "hardness_report", "init_mlp",
    "ipm_report", "layer_circuit", "leaky_to_relu", "levy_box",
    "levy_to_diversity", "linear_combine", "load_config", "load_generator",
    "ltf_to_relu", "make_rng", "mc_small_ball_mass", "min_pairwise_distance",
    "pad_depth", "pad_size", "power_iteration_norm", "prg_eval",
    "random_layered_circuit", "rescale_layers", "run_experiment",
    "sample_generator", "sample_hypergraph", "sample_seeds", "sample_target",
    "save_generator", "stack_outputs", "subgaussian_scale",
    "support_gap_lower_bound", "tensorize_w1", "threshold_scan",
    "train_discriminator", "tsa_predicate", "validate_config",
    "w1_atoms_vs_uniform01", "w1_empirical",
]
