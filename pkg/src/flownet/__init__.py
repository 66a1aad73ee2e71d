"""Dynamical flow networks with phase-constrained service allocation."""
from .controllers import Controller, ControllerConfig, gpa, gpa_general, gpa_orthogonal, max_pressure, service_rate
from .dynamics import FlowResolution, Trajectory, resolve_flows, simulate, step
from .errors import (
    FlowNetError,
    InputError,
    LPUnbounded,
    NodeInfeasible,
    NotInterior,
    ParseError,
    SingularSubsystem,
    SingularSystem,
    SolverError,
    SolverStall,
    Unstable,
    ValidationError,
)
from .graph import aggregate_demand, is_in_connected, is_out_connected, reachable
from .lyapunov import (
    LyapunovContext,
    V_value,
    build_context,
    drift_W,
    equilibrium_single_cell_phases,
    gradient_w,
    oracle_F,
    webster_check,
)
from .network import (
    Cell,
    DemandPiece,
    DemandProfile,
    NetworkSpec,
    RoutingMatrix,
    build_network,
    load_demand,
    load_network,
    phase_matrix,
    validate,
)
from .stability import StabilityCertificate, Verdict, check_necessary_condition, membership_margin, node_slack

__version__ = "0.1.0"
