"""Neuroevolution of spiking robot controllers with memristive synapses."""

from .config import DEFAULT_SETTINGS, Settings
from .neuro import Action, NetworkInstance, NeuronParams, decode_action, neuron_step
from .synapse import (Coincidence, SynapseKind, SynapseParams, SynapseState,
                      bipolar_update, constant_update, detect_coincidence,
                      unipolar_update)
from .evolve import Genome, MutationRates, Population, init_genome, mutate_genome
from .tasks import TrialConfig, TrialResult, run_phototaxis_trial, run_tmaze_trial
from .lab import ExperimentConfig, run_experiment, welch_t_test

__version__ = "0.1.0"

__all__ = [
    "Action", "Coincidence", "DEFAULT_SETTINGS", "ExperimentConfig",
    "Genome", "MutationRates", "NetworkInstance", "NeuronParams",
    "Population", "Settings", "SynapseKind", "SynapseParams", "SynapseState",
    "TrialConfig", "TrialResult", "bipolar_update", "constant_update",
    "decode_action", "detect_coincidence", "init_genome", "mutate_genome",
    "neuron_step", "run_experiment", "run_phototaxis_trial",
    "run_tmaze_trial", "unipolar_update", "welch_t_test",
]
