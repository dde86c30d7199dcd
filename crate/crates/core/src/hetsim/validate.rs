use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{SimScenario, SimTrace};
use crate::error::{Error, Result};
use crate::perfmodel::{predict_step_time, Device, Kernel};

/// Relative agreement required between simulation and model.
pub const MODEL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub node: usize,
    pub simulated: f64,
    pub predicted: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDiff {
    pub node: usize,
    pub device: Device,
    pub kernel: Kernel,
    pub simulated: f64,
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelValidation {
    pub nodes: Vec<NodeCheck>,
    pub max_rel_error: f64,
    /// Kernels whose simulated and predicted times disagree.
    pub kernel_diffs: Vec<KernelDiff>,
}

impl ModelValidation {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= MODEL_TOLERANCE && self.kernel_diffs.is_empty()
    }

    pub fn itemized(&self) -> String {
        let mut out = format!("max relative step-time error {:e}", self.max_rel_error);
        for d in &self.kernel_diffs {
            let _ = write!(
                out,
                "\n  node {} {} {}: simulated {:e} s, predicted {:e} s",
                d.node, d.device, d.kernel, d.simulated, d.predicted
            );
        }
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compare every node's simulated compute phase and per-kernel times with
/// the load-balance model's prediction for the scenario. A node without
/// device work is predicted as its host kernels alone, since it never
/// synchronizes with its device.
pub fn compare_with_model(trace: &SimTrace, scenario: &SimScenario) -> Result<ModelValidation> {
    let p = &scenario.partition;
    if trace.nodes.len() != p.node_count() {
        return Err(Error::ModelMismatch(format!(
            "trace has {} nodes, scenario {}",
            trace.nodes.len(),
            p.node_count()
        )));
    }
    let mut nodes = Vec::new();
    let mut kernel_diffs = Vec::new();
    for (n, step) in trace.nodes.iter().enumerate() {
        let model = &scenario.nodes[n];
        let k_dev = p.device_sets[n].len();
        let surface = p.shared_faces[n].len() as f64;
        let pred =
            predict_step_time(scenario.order, k_dev, p.host_sets[n].len(), &model.table, &model.transfer, Some(surface))?;
        let predicted = if k_dev == 0 { pred.host_kernels.total() } else { pred.step_time() };
        let simulated = step.compute_phase();
        nodes.push(NodeCheck { node: n, simulated, predicted, rel_error: rel(simulated, predicted) });
        let mut sides = vec![(Device::Host, &step.host_kernels, &pred.host_kernels)];
        if k_dev > 0 {
            sides.push((Device::Device, &step.dev_kernels, &pred.dev_kernels));
        }
        for (device, sim, want) in sides {
            for kernel in Kernel::ALL {
                if rel(sim[kernel], want[kernel]) > MODEL_TOLERANCE {
                    kernel_diffs.push(KernelDiff {
                        node: n,
                        device,
                        kernel,
                        simulated: sim[kernel],
                        predicted: want[kernel],
                    });
                }
            }
        }
    }
    let max_rel_error = nodes.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    Ok(ModelValidation { nodes, max_rel_error, kernel_diffs })
}

/// [`compare_with_model`], failing with the itemized differences on any
/// disagreement beyond 1e-9 relative.
pub fn validate_model(trace: &SimTrace, scenario: &SimScenario) -> Result<ModelValidation> {
    let v = compare_with_model(trace, scenario)?;
    if v.passed() {
        Ok(v)
    } else {
        Err(Error::ModelMismatch(v.itemized()))
    }
}
