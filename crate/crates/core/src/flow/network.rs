use serde::Serialize;

use super::laws::{orifice_conductance, orifice_flow};
use crate::coeffs::ModelCoefficients;
use crate::device::{DeviceGeometry, FluidProperties};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::Scalar;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct FlowNode<T: Scalar> {
    pub id: String,
    /// Gauge pressure, Pa. Boundary (atmosphere) nodes hold exactly 0.
    pub pressure: T,
    pub is_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    Orifice,
    Nozzle,
    Channel,
    BifurcationBranch,
    Gate,
}

/// Restriction between two nodes. Positive flow runs upstream → downstream.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct FlowElement<T: Scalar> {
    pub kind: ElementKind,
    pub upstream: NodeId,
    pub downstream: NodeId,
    /// m²
    pub area: T,
    pub discharge_coeff: T,
}

/// Lumped network: nodes, orifice-law elements and one injection node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Network<T: Scalar> {
    pub nodes: Vec<FlowNode<T>>,
    pub elements: Vec<FlowElement<T>>,
    /// Node receiving the supply flow.
    pub input: NodeId,
    /// Density used by every element law, kg/m³.
    pub rho: T,
}

impl<T: Scalar> Network<T> {
    /// Empty network; the first interior node added becomes the input.
    pub fn new(rho: T) -> Self {
        Self {
            nodes: Vec::new(),
            elements: Vec::new(),
            input: usize::MAX,
            rho,
        }
    }

    pub fn add_node(&mut self, id: impl Into<String>) -> NodeId {
        self.nodes.push(FlowNode {
            id: id.into(),
            pressure: T::zero(),
            is_boundary: false,
        });
        let idx = self.nodes.len() - 1;
        if self.input == usize::MAX {
            self.input = idx;
        }
        idx
    }

    /// Adds an atmosphere node, fixed at 0 Pa gauge.
    pub fn add_atmosphere(&mut self, id: impl Into<String>) -> NodeId {
        self.nodes.push(FlowNode {
            id: id.into(),
            pressure: T::zero(),
            is_boundary: true,
        });
        self.nodes.len() - 1
    }

    pub fn set_input(&mut self, node: NodeId) {
        self.input = node;
    }

    pub fn add_element(
        &mut self,
        kind: ElementKind,
        upstream: NodeId,
        downstream: NodeId,
        area: T,
        discharge_coeff: T,
    ) -> usize {
        self.elements.push(FlowElement {
            kind,
            upstream,
            downstream,
            area,
            discharge_coeff,
        });
        self.elements.len() - 1
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    fn check(&self) -> Result<()> {
        if self.input >= self.nodes.len() || self.nodes[self.input].is_boundary {
            return Err(Error::domain("network input must be an interior node"));
        }
        if !(self.rho > T::zero()) {
            return Err(Error::domain("network density must be positive"));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if e.upstream >= self.nodes.len() || e.downstream >= self.nodes.len() {
                return Err(Error::domain(format!(
                    "element {i} references a missing node"
                )));
            }
            if e.upstream == e.downstream {
                return Err(Error::domain(format!(
                    "element {i} connects a node to itself"
                )));
            }
            if !(e.area > T::zero() && e.area.is_finite()) {
                return Err(Error::domain(format!("element {i} has non-positive area")));
            }
            if !(e.discharge_coeff > T::zero() && e.discharge_coeff <= T::one()) {
                return Err(Error::domain(format!(
                    "element {i} discharge coefficient outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Flow through every element for the given node pressures, m³/s.
    pub fn element_flows(&self, pressures: &[T]) -> Vec<T> {
        self.elements
            .iter()
            .map(|e| {
                orifice_flow(
                    pressures[e.upstream] - pressures[e.downstream],
                    e.area,
                    e.discharge_coeff,
                    self.rho,
                )
            })
            .collect()
    }

    /// Net inflow at every node (including injection), m³/s. Boundary
    /// entries are the flow leaving the network there, with opposite sign.
    pub fn node_balance(&self, pressures: &[T], q_in: T) -> Vec<T> {
        let flows = self.element_flows(pressures);
        let mut balance = vec![T::zero(); self.nodes.len()];
        balance[self.input] = q_in;
        for (e, q) in self.elements.iter().zip(&flows) {
            balance[e.upstream] = balance[e.upstream] - *q;
            balance[e.downstream] = balance[e.downstream] + *q;
        }
        balance
    }
}

/// Converged steady state of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct NetworkSolution<T: Scalar> {
    /// Gauge pressure per node, Pa, in network node order.
    pub pressures: Vec<T>,
    /// Flow per element, m³/s.
    pub flows: Vec<T>,
    /// Largest interior mass imbalance relative to the throughput.
    pub residual_norm: T,
    pub iterations: usize,
}

impl<T: Scalar> NetworkSolution<T> {
    /// Relative net flow at every interior node.
    pub fn interior_imbalance(&self, network: &Network<T>, q_in: T) -> Vec<T> {
        let scale = throughput_scale(q_in);
        network
            .node_balance(&self.pressures, q_in)
            .into_iter()
            .zip(&network.nodes)
            .filter(|(_, n)| !n.is_boundary)
            .map(|(b, _)| b.abs() / scale)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    pub tolerance: T,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::solver_tolerance(),
            max_iterations: 200,
            max_halvings: 8,
        }
    }
}

fn throughput_scale<T: Scalar>(q_in: T) -> T {
    if q_in > T::zero() {
        q_in
    } else {
        T::one()
    }
}

/// Node indices of the network built by [`assemble_network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceNodes {
    pub input: NodeId,
    pub bifurcation: NodeId,
    pub chamber: NodeId,
    pub manifold: NodeId,
    pub mixing: NodeId,
    pub exhaust: NodeId,
}

/// Builds the device's internal flow network for a given gate opening.
///
/// input → bifurcation → { chamber (dead end), nozzle manifold → n nozzles →
/// mixing } → flap gate → exhaust. The gate never closes below the leak gap
/// `leak_fraction · a_ex`. The output port is not part of the network; its
/// pressure comes from the ejector closure.
pub fn assemble_network<T: Scalar>(
    g: &DeviceGeometry<T>,
    fluid: &FluidProperties<T>,
    a_fg: T,
    coeffs: &ModelCoefficients<T>,
) -> Result<(Network<T>, DeviceNodes)> {
    if !(a_fg >= T::zero()) {
        return Err(Error::domain(format!(
            "gate opening must be ≥ 0, got {a_fg}"
        )));
    }
    let gate_area = a_fg.max(coeffs.leak_fraction * g.a_ex);
    if !(gate_area > T::zero()) {
        return Err(Error::domain(
            "closed gate with zero leak leaves no exhaust path",
        ));
    }
    let cd = coeffs.cd_internal;
    let mut net = Network::new(fluid.rho);
    let nodes = DeviceNodes {
        input: net.add_node("input"),
        bifurcation: net.add_node("bifurcation"),
        chamber: net.add_node("chamber"),
        manifold: net.add_node("nozzle_manifold"),
        mixing: net.add_node("mixing"),
        exhaust: net.add_atmosphere("exhaust"),
    };
    net.add_element(
        ElementKind::Channel,
        nodes.input,
        nodes.bifurcation,
        g.a_in,
        cd,
    );
    net.add_element(
        ElementKind::BifurcationBranch,
        nodes.bifurcation,
        nodes.chamber,
        g.a_branch,
        cd,
    );
    net.add_element(
        ElementKind::BifurcationBranch,
        nodes.bifurcation,
        nodes.manifold,
        g.a_branch,
        cd,
    );
    for _ in 0..g.n_nozzles {
        net.add_element(
            ElementKind::Nozzle,
            nodes.manifold,
            nodes.mixing,
            g.a_ne,
            cd,
        );
    }
    net.add_element(
        ElementKind::Gate,
        nodes.mixing,
        nodes.exhaust,
        gate_area,
        coeffs.cd_gate,
    );
    Ok((net, nodes))
}

/// Steady state for supply flow `q_in` with default options.
///
/// The initial guess places every interior node at half the pressure needed
/// to push `q_in` through the tightest element on its own.
pub fn solve_steady<T: Scalar>(network: &Network<T>, q_in: T) -> Result<NetworkSolution<T>> {
    let tightest = network
        .elements
        .iter()
        .map(|e| e.area * e.discharge_coeff)
        .fold(T::infinity(), T::min);
    let guess = if tightest.is_finite() {
        super::laws::orifice_pressure_drop(q_in, tightest, T::one(), network.rho) / T::lit(2.0)
    } else {
        T::zero()
    };
    solve_steady_from(network, q_in, guess, &SolverOptions::default())
}

/// Damped Newton iteration on interior pressures, starting every interior
/// node at `initial_pressure`.
///
/// Interior nodes that lead nowhere (dead ends, such as the inflatable
/// chamber) carry no steady flow; they are removed before the iteration and
/// take the pressure of the node they hang from.
pub fn solve_steady_from<T: Scalar>(
    network: &Network<T>,
    q_in: T,
    initial_pressure: T,
    options: &SolverOptions<T>,
) -> Result<NetworkSolution<T>> {
    network.check()?;
    if !(q_in >= T::zero()) {
        return Err(Error::domain(format!(
            "supply flow must be ≥ 0, got {q_in}"
        )));
    }
    let n = network.nodes.len();
    let (active_elements, slaved) = prune_dead_ends(network);

    let unknowns: Vec<NodeId> = (0..n)
        .filter(|&i| !network.nodes[i].is_boundary && slaved[i].is_none())
        .collect();
    let mut column = vec![usize::MAX; n];
    for (k, &node) in unknowns.iter().enumerate() {
        column[node] = k;
    }

    let mut pressures: Vec<T> = network
        .nodes
        .iter()
        .map(|node| {
            if node.is_boundary {
                T::zero()
            } else {
                initial_pressure
            }
        })
        .collect();

    let scale = throughput_scale(q_in);
    let balance = |p: &[T]| -> Vec<T> {
        let mut b = vec![T::zero(); unknowns.len()];
        if column[network.input] != usize::MAX {
            b[column[network.input]] = q_in;
        }
        for &ei in &active_elements {
            let e = &network.elements[ei];
            let q = orifice_flow(
                p[e.upstream] - p[e.downstream],
                e.area,
                e.discharge_coeff,
                network.rho,
            );
            if column[e.upstream] != usize::MAX {
                b[column[e.upstream]] = b[column[e.upstream]] - q;
            }
            if column[e.downstream] != usize::MAX {
                b[column[e.downstream]] = b[column[e.downstream]] + q;
            }
        }
        b
    };
    let norm = |b: &[T]| b.iter().fold(T::zero(), |m, x| m.max(x.abs())) / scale;

    let mut residual = balance(&pressures);
    let mut residual_norm = norm(&residual);
    let mut iterations = 0;

    while residual_norm > options.tolerance {
        if iterations >= options.max_iterations {
            return Err(Error::NetworkDivergence {
                iterations,
                residual: residual_norm.to_f64_lossy(),
            });
        }
        iterations += 1;

        let p_scale = pressures
            .iter()
            .fold(T::zero(), |m, p| m.max(p.abs()))
            .max(T::one());
        let dp_floor = p_scale * T::lit(1e-10);
        let m = unknowns.len();
        let mut jac = vec![vec![T::zero(); m]; m];
        for &ei in &active_elements {
            let e = &network.elements[ei];
            let g = orifice_conductance(
                pressures[e.upstream] - pressures[e.downstream],
                e.area,
                e.discharge_coeff,
                network.rho,
                dp_floor,
            );
            let (u, d) = (column[e.upstream], column[e.downstream]);
            // balance_u -= q, balance_d += q, with dq/dp_u = g and dq/dp_d = -g.
            if u != usize::MAX {
                jac[u][u] = jac[u][u] - g;
                if d != usize::MAX {
                    jac[u][d] = jac[u][d] + g;
                }
            }
            if d != usize::MAX {
                jac[d][d] = jac[d][d] - g;
                if u != usize::MAX {
                    jac[d][u] = jac[d][u] + g;
                }
            }
        }
        let mut rhs: Vec<T> = residual.iter().map(|r| -*r).collect();
        let step = solve_dense(&mut jac, &mut rhs).ok_or_else(|| {
            Error::domain("singular network Jacobian: an interior node has no path to atmosphere")
        })?;

        let mut lambda = T::one();
        let mut halvings = 0;
        loop {
            let trial: Vec<T> = pressures
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if column[i] == usize::MAX {
                        *p
                    } else {
                        *p + lambda * step[column[i]]
                    }
                })
                .collect();
            let trial_residual = balance(&trial);
            let trial_norm = norm(&trial_residual);
            if trial_norm < residual_norm || halvings >= options.max_halvings {
                pressures = trial;
                residual = trial_residual;
                residual_norm = trial_norm;
                break;
            }
            lambda = lambda / T::lit(2.0);
            halvings += 1;
        }
    }

    // Dead ends take their anchor's pressure; anchors are resolved before
    // the nodes that hang from them because pruning peeled leaves first.
    let mut order: Vec<(NodeId, NodeId, usize)> = slaved
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|(anchor, round)| (i, anchor, round)))
        .collect();
    order.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    for (node, anchor, _) in order {
        pressures[node] = match anchor {
            usize::MAX => T::zero(),
            a => pressures[a],
        };
    }

    let flows = network.element_flows(&pressures);
    let residual_norm = network
        .node_balance(&pressures, q_in)
        .into_iter()
        .zip(&network.nodes)
        .filter(|(_, node)| !node.is_boundary)
        .fold(T::zero(), |m, (b, _)| m.max(b.abs()))
        / scale;
    Ok(NetworkSolution {
        pressures,
        flows,
        residual_norm,
        iterations,
    })
}

/// Repeatedly strips interior non-input leaves. Returns the elements left in
/// the active graph and, for each stripped node, the node it hangs from
/// (`usize::MAX` if isolated) and the pruning round.
#[allow(clippy::type_complexity)]
fn prune_dead_ends<T: Scalar>(network: &Network<T>) -> (Vec<usize>, Vec<Option<(NodeId, usize)>>) {
    let n = network.nodes.len();
    let mut alive_element = vec![true; network.elements.len()];
    let mut slaved: Vec<Option<(NodeId, usize)>> = vec![None; n];
    let mut round = 0;
    loop {
        let mut degree = vec![0usize; n];
        for (e, alive) in network.elements.iter().zip(&alive_element) {
            if *alive {
                degree[e.upstream] += 1;
                degree[e.downstream] += 1;
            }
        }
        let leaves: Vec<NodeId> = (0..n)
            .filter(|&i| {
                !network.nodes[i].is_boundary
                    && i != network.input
                    && slaved[i].is_none()
                    && degree[i] <= 1
            })
            .collect();
        if leaves.is_empty() {
            break;
        }
        for leaf in leaves {
            let mut anchor = usize::MAX;
            for (e, alive) in network.elements.iter().zip(alive_element.iter_mut()) {
                if *alive && (e.upstream == leaf || e.downstream == leaf) {
                    anchor = if e.upstream == leaf {
                        e.downstream
                    } else {
                        e.upstream
                    };
                    *alive = false;
                }
            }
            slaved[leaf] = Some((anchor, round));
        }
        round += 1;
    }
    let active = alive_element
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.then_some(i))
        .collect();
    (active, slaved)
}
