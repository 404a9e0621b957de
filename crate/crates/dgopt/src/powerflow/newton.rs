//! Newton-Raphson power flow on the bus admittance matrix.
//!
//! Handles feeders with closed tie loops (and radial ones). Every non-slack
//! bus is a constant-power bus, so the unknowns are the voltage angle and
//! magnitude at each of those buses. The polar-form Jacobian is rebuilt and
//! factorised with a dense LU decomposition each iteration; distribution
//! feeders are small enough that sparsity is not worth the complexity.

use super::{power_mismatch, PowerFlowError, Prepared, SolverOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense bus admittance matrix built from the branch list.
fn build_ybus(prep: &Prepared, n: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::ZERO; n * n];
    for &(f, t, z) in &prep.branches {
        let ys = z.inv();
        y[f * n + f] += ys;
        y[t * n + t] += ys;
        y[f * n + t] -= ys;
        y[t * n + f] -= ys;
    }
    y
}

/// Run Newton-Raphson. Returns `(voltages, iterations, converged, mismatch)`.
pub(crate) fn solve_newton(
    prep: &Prepared,
    opts: &SolverOptions,
) -> Result<(Vec<Complex64>, usize, bool, f64), PowerFlowError> {
    let n = prep.s_inj.len();
    let ybus = build_ybus(prep, n);

    // Variable layout: one (angle, magnitude) pair per non-slack bus.
    let vars: Vec<usize> = (0..n).filter(|&i| i != prep.slack).collect();
    let m = vars.len();
    let mut var_of = vec![usize::MAX; n];
    for (k, &i) in vars.iter().enumerate() {
        var_of[i] = k;
    }

    let mut theta = vec![0.0_f64; n];
    let mut vm = vec![opts.slack_voltage; n];
    let to_complex = |vm: &[f64], theta: &[f64]| -> Vec<Complex64> {
        vm.iter()
            .zip(theta)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    };

    let mut v = to_complex(&vm, &theta);
    let mut mismatch = power_mismatch(prep, &v);
    if mismatch < opts.tolerance {
        return Ok((v, 0, true, mismatch));
    }

    for iteration in 1..=opts.max_iterations {
        // Calculated injections at the current state.
        let mut p_calc = vec![0.0_f64; n];
        let mut q_calc = vec![0.0_f64; n];
        for i in 0..n {
            let mut p = 0.0;
            let mut q = 0.0;
            for k in 0..n {
                let y = ybus[i * n + k];
                if y == Complex64::ZERO {
                    continue;
                }
                let t_ik = theta[i] - theta[k];
                let (sin, cos) = t_ik.sin_cos();
                p += vm[i] * vm[k] * (y.re * cos + y.im * sin);
                q += vm[i] * vm[k] * (y.re * sin - y.im * cos);
            }
            p_calc[i] = p;
            q_calc[i] = q;
        }

        // Right-hand side: scheduled minus calculated power at each PQ bus.
        let mut rhs = DVector::zeros(2 * m);
        for (k, &i) in vars.iter().enumerate() {
            rhs[k] = prep.s_inj[i].re - p_calc[i];
            rhs[m + k] = prep.s_inj[i].im - q_calc[i];
        }

        // Polar Jacobian, ordered [dP/dtheta dP/dV; dQ/dtheta dQ/dV].
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for (r, &i) in vars.iter().enumerate() {
            for (c, &k) in vars.iter().enumerate() {
                let y = ybus[i * n + k];
                if i == k {
                    let g_ii = y.re;
                    let b_ii = y.im;
                    jac[(r, c)] = -q_calc[i] - b_ii * vm[i] * vm[i];
                    jac[(r, m + c)] = p_calc[i] / vm[i] + g_ii * vm[i];
                    jac[(m + r, c)] = p_calc[i] - g_ii * vm[i] * vm[i];
                    jac[(m + r, m + c)] = q_calc[i] / vm[i] - b_ii * vm[i];
                } else {
                    if y == Complex64::ZERO {
                        continue;
                    }
                    let t_ik = theta[i] - theta[k];
                    let (sin, cos) = t_ik.sin_cos();
                    let a = vm[i] * vm[k] * (y.re * sin - y.im * cos);
                    let b = vm[i] * (y.re * cos + y.im * sin);
                    jac[(r, c)] = a;
                    jac[(r, m + c)] = b;
                    jac[(m + r, c)] = -vm[i] * vm[k] * (y.re * cos + y.im * sin);
                    jac[(m + r, m + c)] = vm[i] * (y.re * sin - y.im * cos);
                }
            }
        }

        let delta = jac.lu().solve(&rhs).ok_or_else(|| {
            PowerFlowError::Degenerate("singular Jacobian in Newton-Raphson step".into())
        })?;
        for (k, &i) in vars.iter().enumerate() {
            theta[i] += delta[k];
            vm[i] += delta[m + k];
        }
        if vm.iter().any(|x| !x.is_finite() || *x <= 0.0) || theta.iter().any(|x| !x.is_finite()) {
            v = to_complex(&vm, &theta);
            return Ok((v, iteration, false, f64::INFINITY));
        }

        v = to_complex(&vm, &theta);
        mismatch = power_mismatch(prep, &v);
        if mismatch < opts.tolerance {
            return Ok((v, iteration, true, mismatch));
        }
    }
    Ok((v, opts.max_iterations, false, mismatch))
}
