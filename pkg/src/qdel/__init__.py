"""Universal quantum deletion machines: construction, simulation and fidelity analysis."""

from .analysis import (
    FidelityReport,
    MachineClass,
    average_fidelity,
    classify_machine,
    fidelity_report,
)
from .deletion_engine import (
    DeleterMap,
    TransformerGate,
    apply_deleter,
    apply_transformer,
    build_deleter,
    build_transformer,
    run_pipeline,
    verify_isometry,
)
from .machine_space import (
    MachineParams,
    build_gram,
    check_feasible,
    realize_vectors,
    standard_state,
)
from .tensor_core import (
    DensityOp,
    QubitState,
    StateVector,
    density_of,
    expectation,
    partial_trace,
    tensor_product,
    validate_density,
)

__version__ = "0.1.0"
