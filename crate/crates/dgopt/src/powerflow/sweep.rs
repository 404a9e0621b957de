//! Backward/forward sweep solver for radial feeders.
//!
//! Each iteration accumulates branch currents from the leaves toward the
//! slack bus using the latest voltages (backward pass), then re-derives bus
//! voltages from the slack outward across each series impedance (forward
//! pass). Convergence is judged on the true power mismatch at every bus, so
//! a `converged` result always means the balance equations are satisfied to
//! the requested tolerance.

use super::{power_mismatch, PowerFlowError, Prepared, SolverOptions};
use num_complex::Complex64;
use std::collections::VecDeque;

/// Tree structure of a radial feeder rooted at the slack bus.
struct Tree {
    /// Buses in breadth-first order starting at the slack.
    order: Vec<usize>,
    /// Parent bus of each bus (the slack points at itself).
    parent: Vec<usize>,
    /// Series impedance of the branch from `parent[i]` to bus `i`.
    parent_z: Vec<Complex64>,
}

fn build_tree(prep: &Prepared, n: usize) -> Result<Tree, PowerFlowError> {
    let mut adjacency: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    for &(f, t, z) in &prep.branches {
        adjacency[f].push((t, z));
        adjacency[t].push((f, z));
    }
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut parent_z = vec![Complex64::ZERO; n];
    let mut queue = VecDeque::from([prep.slack]);
    parent[prep.slack] = prep.slack;
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &(j, z) in &adjacency[i] {
            if parent[j] == usize::MAX {
                parent[j] = i;
                parent_z[j] = z;
                queue.push_back(j);
            }
        }
    }
    if order.len() != n {
        return Err(PowerFlowError::BadNetwork(
            "some buses are unreachable from the slack bus".into(),
        ));
    }
    Ok(Tree {
        order,
        parent,
        parent_z,
    })
}

/// Run the sweep. Returns `(voltages, iterations, converged, mismatch)`.
pub(crate) fn solve_sweep(
    prep: &Prepared,
    opts: &SolverOptions,
) -> Result<(Vec<Complex64>, usize, bool, f64), PowerFlowError> {
    let n = prep.s_inj.len();
    let tree = build_tree(prep, n)?;
    let mut v = vec![Complex64::new(opts.slack_voltage, 0.0); n];
    let mut mismatch = power_mismatch(prep, &v);
    if mismatch < opts.tolerance {
        return Ok((v, 0, true, mismatch));
    }

    for iteration in 1..=opts.max_iterations {
        // Backward pass. `i_down[i]` is the current the subtree rooted at
        // bus i draws through its parent branch: the bus's own load current
        // plus everything already accumulated from its children. Reverse
        // breadth-first order visits children before their parents.
        let mut i_down = vec![Complex64::ZERO; n];
        for &i in tree.order.iter().rev() {
            if i == prep.slack {
                continue;
            }
            if v[i].norm_sqr() < 1.0e-18 {
                // Voltage collapsed to (numerically) zero; the constant-power
                // load model has no solution along this trajectory.
                return Ok((v, iteration, false, f64::INFINITY));
            }
            let local = -(prep.s_inj[i] / v[i]).conj();
            i_down[i] += local;
            let subtree = i_down[i];
            i_down[tree.parent[i]] += subtree;
        }

        // Forward pass: the slack voltage is fixed; every other voltage is
        // its parent's voltage minus the series drop of the parent branch.
        for &i in &tree.order {
            if i != prep.slack {
                v[i] = v[tree.parent[i]] - tree.parent_z[i] * i_down[i];
            }
        }
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Ok((v, iteration, false, f64::INFINITY));
        }

        mismatch = power_mismatch(prep, &v);
        if mismatch < opts.tolerance {
            return Ok((v, iteration, true, mismatch));
        }
    }
    Ok((v, opts.max_iterations, false, mismatch))
}
