"""Minimum-energy steering of truncated damped flexible-structure models."""

from .errors import (DegenerateSpectrumError, GramianSingularError, ModelError,
                     NumericalError, TruncationError)
from .modal_model import (FrequencyPreset, GapSum, ModalSystem, StateVector, build_system,
                          complement, gap_series_checkpoints, gap_series_partial_sum,
                          project, tail_input_norm)
from .propagator import (PropagationConfig, apply_blocks, block_expm, propagate,
                         sample_trajectory, transition)
from .synthesis import (ControlLaw, Gramian, ReducedSystem, WeightMatrix, control_cost,
                        eval_control, gramian, integrated_cost, l2_norm, load_law,
                        reduced_matrices, save_law, synthesize)
from .verifier import (ConvergenceReport, SteeringReport, convergence_sweep,
                       steer_and_verify, tail_bound)

__version__ = "0.1.0"
