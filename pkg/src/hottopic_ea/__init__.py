"""Simulator and analysis toolkit for the (mu+1)-EA on HotTopic functions."""

__version__ = "0.1.0"

from .core import BitString, Density, density, onemax, random_bitstring, standard_mutation
from .engine import EAConfig, RunRecord, run_ea
from .fastengine import run_ea_fast
from .hottopic import (
    CachedIndividual,
    FitnessValue,
    HotTopicInstance,
    HotTopicParams,
    apply_flips,
    evaluate_aux,
    evaluate_ht,
    generate_instance,
    level_of,
    make_cached,
    theorem_regime,
)
from .rng import RngStream, mix64, splitmix64

__all__ = [
    "BitString", "Density", "density", "onemax", "random_bitstring",
    "standard_mutation", "EAConfig", "RunRecord", "run_ea", "run_ea_fast",
    "CachedIndividual", "FitnessValue", "HotTopicInstance", "HotTopicParams",
    "apply_flips", "evaluate_aux", "evaluate_ht", "generate_instance",
    "level_of", "make_cached", "theorem_regime", "RngStream", "mix64",
    "splitmix64", "__version__",
]
