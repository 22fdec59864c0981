"""Experiment drivers built on the model, solver and observables."""

from .noise import (NoiseSpec, dephasing_master_equation, field_operator, random_fields,
                    run_dephasing, run_random_field)
from .quench import (MIN_PEAK_HEIGHT, OptimizationResult, QuenchTrace, chain_ground_state,
                     default_jm_grid, extract_peak, initial_state, optimize_jm,
                     optimize_jm_refined, run_quench, time_grid)
from .router import RouterPlan, route
from .scaling import (AsymmetricRow, PhiFit, RegimeRow, ScalingReport, alpha_from_table,
                      asymmetric_sweep, default_t_max, fit_phi_scaling, linear_fit,
                      phi_reference, regime_comparison, scaling_study)

__all__ = [
    "AsymmetricRow", "MIN_PEAK_HEIGHT", "NoiseSpec", "OptimizationResult", "PhiFit",
    "QuenchTrace", "RegimeRow", "RouterPlan", "alpha_from_table", "asymmetric_sweep",
    "chain_ground_state", "default_jm_grid", "default_t_max", "dephasing_master_equation",
    "extract_peak", "field_operator", "fit_phi_scaling", "initial_state", "linear_fit",
    "optimize_jm", "optimize_jm_refined", "phi_reference", "random_fields", "regime_comparison",
    "route", "run_dephasing", "run_quench", "run_random_field", "ScalingReport",
    "scaling_study", "time_grid",
]
