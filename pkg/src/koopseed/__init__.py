"""Koopman operators for coupled systems: ODE-derived seeds, online refinement.

Pipeline: derive a Koopman matrix for each subsystem from its governing
polynomial ODE (generator module), embed them into the full-system
dictionary (assembly), refine the result from trajectory data with online
EDMD (edmd), and predict through the eigen-decomposition (spectral). The
dynamics module simulates the coupled benchmark systems, and the CLI runs
the bundled experiments end to end.
"""

from .assembly import GlobalSeed, assemble_global
from .dictionary import Dictionary, VariableLayout, build_dictionary, embed_indices
from .dynamics import (
    BlowUpError,
    CoupledSystem,
    Coupling,
    Trajectory,
    coupled_duffing,
    coupled_vanderpol,
    diffusive_coupling,
    perturb_initial,
    rk4_step,
    sample_initial,
    simulate,
    simulate_batch,
)
from .edmd import (
    OnlineState,
    SnapshotPair,
    batch_edmd,
    online_init,
    online_update,
    pairs_from_states,
)
from .experiments import (
    ExperimentConfig,
    derive_seed,
    derive_seed_model,
    load_config,
    run_nstep_experiment,
    run_onestep_experiment,
    run_spectrum_export,
)
from .generator import (
    GeneratorMatrix,
    PolynomialVectorField,
    build_generator,
    local_koopman,
)
from .model import KoopmanModel, load_matrix_csv, save_matrix_csv
from .spectral import (
    DefectiveDecompositionError,
    SpectralDecomposition,
    decompose,
    matrix_power_predict,
    predict_n,
    predict_one,
    relative_l2,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "CoupledSystem",
    "Coupling",
    "DefectiveDecompositionError",
    "Dictionary",
    "ExperimentConfig",
    "GeneratorMatrix",
    "GlobalSeed",
    "KoopmanModel",
    "OnlineState",
    "PolynomialVectorField",
    "SnapshotPair",
    "SpectralDecomposition",
    "Trajectory",
    "VariableLayout",
    "assemble_global",
    "batch_edmd",
    "build_dictionary",
    "build_generator",
    "coupled_duffing",
    "coupled_vanderpol",
    "decompose",
    "derive_seed",
    "derive_seed_model",
    "diffusive_coupling",
    "embed_indices",
    "load_config",
    "load_matrix_csv",
    "local_koopman",
    "matrix_power_predict",
    "online_init",
    "online_update",
    "pairs_from_states",
    "perturb_initial",
    "predict_n",
    "predict_one",
    "relative_l2",
    "rk4_step",
    "run_nstep_experiment",
    "run_onestep_experiment",
    "run_spectrum_export",
    "sample_initial",
    "save_matrix_csv",
    "simulate",
    "simulate_batch",
]
