"""Phase-field fatigue model: material data, pointwise relations and the FE solver."""

from .constitutive import (
    DegenerateElementError,
    at1_w,
    degradation_g,
    energy_split,
    fatigue_degradation_f2,
    fatigue_increment,
    principal_strains,
    strain,
    tensile_energy,
    update_history,
)
from .material import (
    LoadSpec,
    MaterialError,
    MaterialParams,
    alpha_T_estimate,
    basquin_slope,
    exponent_n,
    irwin_length,
    length_scale,
)
from .solver import (
    ConvergenceError,
    CycleOutcome,
    Discretization,
    SimState,
    SolverError,
    Status,
    detect_failure,
    load_checkpoint,
    run_cycles,
    save_checkpoint,
    simulate,
    solve_damage,
    solve_displacement,
    staggered_step,
    static_strength,
)
