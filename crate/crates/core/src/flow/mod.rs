//! Element laws and the steady lumped network of the device's flow paths.

mod laws;
mod network;

pub use laws::{
    bifurcation_pressure, bifurcation_pressure_dq, input_pressure, orifice_conductance,
    orifice_flow, orifice_pressure_drop,
};
pub use network::{
    assemble_network, solve_steady, solve_steady_from, DeviceNodes, ElementKind, FlowElement,
    FlowNode, Network, NetworkSolution, NodeId, SolverOptions,
};
