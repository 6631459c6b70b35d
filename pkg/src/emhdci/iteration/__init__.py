from .schedule import Schedule, StepParams, generated_schedule, default_desk_schedule
from .state import (IterationState, MollifiedTriple, StateError, initial_state,
                    mollify_state, mollified_residual, system_residual_field,
                    sym_outer_full, sym_outer_traceless)
from .stress import (Amplitudes, AmplitudeError, Perturbation, StepRecord,
                     amplitude_fields, build_perturbations, chi, new_stress,
                     pair_wave_samples, rho_field, rho_samples, step,
                     stress_decomposition)

__all__ = [
    "Schedule", "StepParams", "generated_schedule", "default_desk_schedule",
    "IterationState", "MollifiedTriple", "StateError", "initial_state",
    "mollify_state", "mollified_residual", "system_residual_field",
    "sym_outer_full", "sym_outer_traceless", "Amplitudes", "AmplitudeError",
    "Perturbation", "StepRecord", "amplitude_fields", "build_perturbations",
    "chi", "new_stress", "pair_wave_samples", "rho_field", "rho_samples",
    "step", "stress_decomposition",
]
