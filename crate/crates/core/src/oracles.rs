//! Ground-truth computations used to validate the certificates: exhaustive
//! best-subset search for the cardinality-constrained optimum and a
//! projected-gradient solver for the continuous relaxation
//!
//! ```text
//! g(z) = ½ yᵀ(ρ⁻¹X D(z) Xᵀ + I)⁻¹y,   z ∈ [0,1]ᵖ, Σz ≤ k.
//! ```

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, ProblemInstance, SupportSet};

pub const DEFAULT_MAX_COMBINATIONS: u128 = 1_000_000;
/// Relative tolerance for collecting tied minimizers.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub value: f64,
    /// Every size-`k` support attaining `value` within [`TIE_RTOL`], in
    /// lexicographic order.
    pub argmin_supports: Vec<SupportSet>,
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances `idx` to the next `r`-combination of `0..n` in lexicographic
/// order. Returns false after the last one.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let r = idx.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if idx[i] < n - r + i {
            idx[i] += 1;
            for j in (i + 1)..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive minimum over all supports of size exactly `k`.
///
/// Smaller supports never need enumerating: the restricted ridge value can
/// only drop when the support grows.
pub fn brute_force_l0(inst: &ProblemInstance, max_combinations: u128) -> Result<BruteForceResult> {
    let (p, k) = (inst.p(), inst.k());
    let count = binomial(p, k);
    if count > max_combinations {
        return Err(Error::BudgetExceeded {
            count,
            budget: max_combinations,
        });
    }
    let mut best = f64::INFINITY;
    let mut ties: Vec<(f64, SupportSet)> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let support = SupportSet::new(idx.clone())?;
        let value = linalg::ridge_value_via_identity(inst, &support)?;
        if value < best {
            best = value;
            ties.retain(|(v, _)| *v - best <= TIE_RTOL * best.abs());
        }
        if value - best <= TIE_RTOL * best.abs() {
            ties.push((value, support));
        }
        if !next_combination(&mut idx, p) {
            break;
        }
    }
    Ok(BruteForceResult {
        value: best,
        argmin_supports: ties.into_iter().map(|(_, s)| s).collect(),
    })
}

/// Euclidean projection onto `{z ∈ [0,1]ᵖ : Σz ≤ k}`.
///
/// If clipping to the box already satisfies the sum constraint that is the
/// answer; otherwise the shift `θ > 0` with `Σ clip(v_i − θ, 0, 1) = k` is
/// found by bisection and then refined in closed form on the free
/// coordinates.
pub fn project_capped_simplex(v: &DVector<f64>, k: usize) -> DVector<f64> {
    let clipped = v.map(|x| x.clamp(0.0, 1.0));
    if clipped.sum() <= k as f64 {
        return clipped;
    }
    let kf = k as f64;
    let mass = |theta: f64| v.iter().map(|x| (x - theta).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = 0.0;
    let mut hi = v.max();
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mass(mid) > kf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // closed form on the free set identified at θ = hi
    let mut theta = hi;
    let (mut free_sum, mut free_count, mut capped) = (0.0, 0usize, 0usize);
    for &x in v.iter() {
        let shifted = x - hi;
        if shifted >= 1.0 {
            capped += 1;
        } else if shifted > 0.0 {
            free_sum += x;
            free_count += 1;
        }
    }
    if free_count > 0 {
        let exact = (free_sum + capped as f64 - kf) / free_count as f64;
        if exact.is_finite() && exact >= 0.0 && (mass(exact) - kf).abs() <= (mass(hi) - kf).abs() {
            theta = exact;
        }
    }
    let z = v.map(|x| (x - theta).clamp(0.0, 1.0));
    if z.sum() > kf {
        // rounding pushed the sum over; fall back to the bracket end
        v.map(|x| (x - hi).clamp(0.0, 1.0))
    } else {
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwgValueResult {
    /// `g(z)` at the returned point.
    pub value: f64,
    pub z: DVector<f64>,
    pub iterations: usize,
    /// `‖z − P(z − ∇g(z))‖₂` at termination.
    pub grad_norm_kkt: f64,
    /// Frank–Wolfe gap `max_{s feasible} ∇g(z)ᵀ(z − s)`; bounds
    /// `value − min g` from above.
    pub fw_gap: f64,
    /// Objective after every accepted step, starting at `z₀`.
    pub trace: Vec<f64>,
}

/// `g(z)` and `K(z)y` with `K(z) = (ρ⁻¹X D(z) Xᵀ + I)⁻¹`.
struct Kernel<'a> {
    inst: &'a ProblemInstance,
}

impl Kernel<'_> {
    fn factor(&self, z: &DVector<f64>) -> Result<Cholesky<f64, Dyn>> {
        let x = self.inst.x();
        let mut scaled = x.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= z[j] / self.inst.rho();
        }
        let mut kernel = &scaled * x.transpose();
        for i in 0..self.inst.n() {
            kernel[(i, i)] += 1.0;
        }
        kernel = 0.5 * (&kernel + kernel.transpose());
        Cholesky::new(kernel)
            .ok_or_else(|| Error::Inconsistent("ρ⁻¹XD(z)Xᵀ + I is not positive definite".into()))
    }

    fn value_and_ky(&self, z: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let ky = self.factor(z)?.solve(self.inst.y());
        Ok((0.5 * self.inst.y().dot(&ky), ky))
    }

    fn value(&self, z: &DVector<f64>) -> Result<f64> {
        Ok(self.value_and_ky(z)?.0)
    }

    /// `∂g/∂z_j = −(2ρ)⁻¹ (X_jᵀK(z)y)²`
    fn gradient(&self, ky: &DVector<f64>) -> DVector<f64> {
        let scale = -0.5 / self.inst.rho();
        self.inst.x().tr_mul(ky).map(|v| scale * v * v)
    }
}

/// `g(z) = ½yᵀ(ρ⁻¹XD(z)Xᵀ + I)⁻¹y` for any `z ≥ 0`.
pub fn pwg_objective(inst: &ProblemInstance, z: &DVector<f64>) -> Result<f64> {
    check_z(inst, z)?;
    Kernel { inst }.value(z)
}

/// Analytic gradient of [`pwg_objective`].
pub fn pwg_gradient(inst: &ProblemInstance, z: &DVector<f64>) -> Result<DVector<f64>> {
    check_z(inst, z)?;
    let kernel = Kernel { inst };
    let (_, ky) = kernel.value_and_ky(z)?;
    Ok(kernel.gradient(&ky))
}

fn check_z(inst: &ProblemInstance, z: &DVector<f64>) -> Result<()> {
    if z.len() != inst.p() {
        return Err(Error::invalid(format!("z has length {}, expected p = {}", z.len(), inst.p())));
    }
    if z.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("z must be finite and nonnegative"));
    }
    Ok(())
}

/// Linear minimization over the capped simplex for a nonpositive gradient:
/// set the `k` most negative coordinates to one.
fn frank_wolfe_gap(grad: &DVector<f64>, z: &DVector<f64>, k: usize) -> f64 {
    let mut order: Vec<usize> = (0..grad.len()).collect();
    order.sort_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(a.cmp(&b)));
    let best: f64 = order
        .iter()
        .take(k)
        .map(|&j| grad[j].min(0.0))
        .sum();
    (grad.dot(z) - best).max(0.0)
}

/// Minimizes `g` over the capped simplex by projected gradient descent with
/// Armijo backtracking, starting from `z₀ = (k/p)·e`.
///
/// Stops when an accepted step moves `z` by at most `tol` (Euclidean) or
/// after `max_iter` steps. The returned value is `g` at a feasible point, so
/// it never undercuts the relaxation's optimum; `fw_gap` bounds how far above
/// it sits. If rounding `z` to its `k` largest entries gives a lower value
/// the rounded point is returned instead.
pub fn pwg_value(inst: &ProblemInstance, tol: f64, max_iter: usize) -> Result<PwgValueResult> {
    const ARMIJO: f64 = 1e-4;
    let (p, k) = (inst.p(), inst.k());
    let kernel = Kernel { inst };
    let mut z = project_capped_simplex(&DVector::from_element(p, k as f64 / p as f64), k);
    let (mut value, mut ky) = kernel.value_and_ky(&z)?;
    let mut grad = kernel.gradient(&ky);
    let mut trace = vec![value];
    let mut step = 1.0;
    let mut iterations = 0;

    while iterations < max_iter {
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = project_capped_simplex(&(&z - step * &grad), k);
            let delta = &candidate - &z;
            let (cand_value, cand_ky) = kernel.value_and_ky(&candidate)?;
            if cand_value <= value + ARMIJO * grad.dot(&delta) {
                accepted = Some((candidate, cand_value, cand_ky, delta.norm()));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, cand_value, cand_ky, moved)) = accepted else {
            break;
        };
        iterations += 1;
        z = candidate;
        value = cand_value;
        ky = cand_ky;
        grad = kernel.gradient(&ky);
        trace.push(value);
        step *= 2.0;
        if moved <= tol {
            break;
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut rounded = DVector::zeros(p);
    for &j in order.iter().take(k) {
        rounded[j] = 1.0;
    }
    let rounded_value = kernel.value(&rounded)?;
    if rounded_value < value {
        z = rounded;
        let (v, fresh_ky) = kernel.value_and_ky(&z)?;
        value = v;
        grad = kernel.gradient(&fresh_ky);
    }

    let grad_norm_kkt = (&z - project_capped_simplex(&(&z - &grad), k)).norm();
    let fw_gap = frank_wolfe_gap(&grad, &z, k);
    Ok(PwgValueResult {
        value,
        z,
        iterations,
        grad_norm_kkt,
        fw_gap,
        trace,
    })
}
