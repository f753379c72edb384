//! Exactness certificates for a candidate support `S`.
//!
//! * [`check_pwg`]: threshold separation of the correlation scores
//!   `c_j = X_jᵀMy` (continuous boolean relaxation).
//! * [`check_dcl`]: existence of `(λ̃, d̃)` with
//!   `ρ⁻¹XᵀX + I − D(d̃) ⪰ 0`, `λ̃ = d̃_i c_i²` on `S` and `λ̃ d̃_i ≥ c_i²` off
//!   `S` (lifted relaxation). With `d̃` parameterized by `λ̃` this reduces to
//!   finding `λ̃ > 0` where the largest-eigenvalue function
//!   `f(λ̃) = λ_max{D(λ̃) − ρ⁻¹XᵀX − I}` is nonpositive; `f` is convex and
//!   is searched by bisection with subgradient cuts.
//!
//! [`verify_kkt`] re-derives the primal–dual optimality residuals in the
//! unscaled dual variables as an independent consistency check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, MOperator, ProblemInstance, SupportSet};

/// Default relative bracket width at which the bisection gives up.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for the bisection.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Tolerance on the smallest eigenvalue of `ρ⁻¹XᵀX + I − D(d̃)`.
pub const PSD_TOL: f64 = 1e-8;
/// Tolerance on the equality and inequality parts of a dual certificate.
pub const CERT_TOL: f64 = 1e-8;
/// Scores below this fraction of `‖y‖·max_j‖X_j‖` count as zero.
const ZERO_SCORE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotCertifiedReason {
    SeparationFailed,
    ZeroScoreInSupport,
    BisectionExhausted,
    IntervalEmpty,
}

impl NotCertifiedReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SeparationFailed => "separation-failed",
            Self::ZeroScoreInSupport => "zero-score-in-support",
            Self::BisectionExhausted => "bisection-exhausted",
            Self::IntervalEmpty => "interval-empty",
        }
    }
}

impl std::fmt::Display for NotCertifiedReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of a certificate check: either a witness or the reason none was
/// found.
#[derive(Debug, Clone, PartialEq)]
pub enum CertOutcome<C> {
    Exact(C),
    NotCertified(NotCertifiedReason),
}

impl<C> CertOutcome<C> {
    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    pub fn certificate(&self) -> Option<&C> {
        match self {
            Self::Exact(c) => Some(c),
            Self::NotCertified(_) => None,
        }
    }

    pub fn reason(&self) -> Option<NotCertifiedReason> {
        match self {
            Self::Exact(_) => None,
            Self::NotCertified(r) => Some(*r),
        }
    }
}

/// Threshold witness: every `λ ∈ [max_out, min_in)` separates the scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PwgCertificate {
    pub support: SupportSet,
    /// `min_{j∈S} |c_j|`
    pub min_in: f64,
    /// `max_{j∉S} |c_j|`, zero when `S` is every column.
    pub max_out: f64,
}

/// Dual witness `(λ̃, d̃)` for the lifted relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct DclCertificate {
    pub support: SupportSet,
    pub lambda_tilde: f64,
    pub d_tilde: DVector<f64>,
    /// `λ_max{D(d̃) − ρ⁻¹XᵀX − I}`; nonpositive for a valid witness.
    pub f_value: f64,
    /// Function evaluations spent by the search (zero for constructed
    /// witnesses).
    pub iterations: usize,
}

impl DclCertificate {
    /// Converts to the unscaled dual variables `(d, λ) = (ρd̃, λ̃/ρ)` used by
    /// [`verify_kkt`].
    pub fn kkt_variables(&self, rho: f64) -> (DVector<f64>, f64) {
        (&self.d_tilde * rho, self.lambda_tilde / rho)
    }
}

/// Worst violations of the three dual-certificate conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DclConditionReport {
    /// Smallest eigenvalue of `ρ⁻¹XᵀX + I − D(d̃)`.
    pub min_eig: f64,
    /// `max_{i∈S} |λ̃ − d̃_i c_i²| / max(λ̃, d̃_i c_i²)`.
    pub equality_rel_err: f64,
    /// `max_{i∉S} (c_i² − λ̃ d̃_i) / max(1, c_i²)`, clipped at zero.
    pub inequality_violation: f64,
    /// Largest negative entry of `d̃` or `λ̃`, as a positive number.
    pub sign_violation: f64,
}

impl DclConditionReport {
    pub fn holds(&self) -> bool {
        self.min_eig >= -PSD_TOL
            && self.equality_rel_err <= CERT_TOL
            && self.inequality_violation <= CERT_TOL
            && self.sign_violation == 0.0
    }
}

/// Residuals of the primal–dual optimality system in unscaled variables.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `t = (XᵀX + ρI − D(d))b* − Xᵀy`
    pub t: DVector<f64>,
    /// `τ = b*ᵀ(XᵀX + ρI − D(d))b*`
    pub tau: f64,
    /// Negative part of the smallest eigenvalue of the `(p+1)×(p+1)` block.
    pub psd_residual_big: f64,
    /// Largest negative part of the smallest eigenvalue of
    /// `[[λ, t_i], [t_i, d_i]]`.
    pub psd_residual_small: f64,
    /// Largest complementarity violation.
    pub comp_residual: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.psd_residual_big
            .max(self.psd_residual_small)
            .max(self.comp_residual)
    }
}

fn check_candidate(inst: &ProblemInstance, s: &SupportSet) -> Result<()> {
    s.check_within(inst.p())?;
    if s.is_empty() {
        return Err(Error::invalid("certificate checks need a non-empty support"));
    }
    if s.len() > inst.k() {
        return Err(Error::invalid(format!(
            "support size {} exceeds budget k = {}",
            s.len(),
            inst.k()
        )));
    }
    Ok(())
}

/// Threshold test on `|c_j|`: exact iff `max_{j∉S}|c_j| < min_{j∈S}|c_j|`.
/// Ties are not certified.
pub fn check_pwg(inst: &ProblemInstance, s: &SupportSet) -> Result<CertOutcome<PwgCertificate>> {
    check_candidate(inst, s)?;
    let c = linalg::correlation_scores(inst, s)?;
    let mask = s.mask(inst.p());
    let mut min_in = f64::INFINITY;
    let mut max_out = 0.0_f64;
    for (j, cj) in c.iter().enumerate() {
        if mask[j] {
            min_in = min_in.min(cj.abs());
        } else {
            max_out = max_out.max(cj.abs());
        }
    }
    if max_out < min_in {
        Ok(CertOutcome::Exact(PwgCertificate {
            support: s.clone(),
            min_in,
            max_out,
        }))
    } else {
        Ok(CertOutcome::NotCertified(NotCertifiedReason::SeparationFailed))
    }
}

/// Precomputed pieces of `f(λ̃)` for one instance and support.
pub struct DclProblem<'a> {
    inst: &'a ProblemInstance,
    support: SupportSet,
    in_support: Vec<bool>,
    scores: DVector<f64>,
    /// `−ρ⁻¹XᵀX − I`
    base: DMatrix<f64>,
    /// `ρ⁻¹‖X_i‖² + 1`
    diag_scale: Vec<f64>,
    zero_threshold: f64,
}

impl<'a> DclProblem<'a> {
    pub fn new(inst: &'a ProblemInstance, s: &SupportSet) -> Result<Self> {
        s.check_within(inst.p())?;
        if s.is_empty() {
            return Err(Error::invalid("certificate checks need a non-empty support"));
        }
        let p = inst.p();
        let scores = inst.x().tr_mul(&MOperator::new(inst, s)?.apply(inst.y()));
        let mut base = inst.x().tr_mul(inst.x()) / (-inst.rho());
        for i in 0..p {
            base[(i, i)] -= 1.0;
        }
        let diag_scale = (0..p)
            .map(|i| inst.x().column(i).norm_squared() / inst.rho() + 1.0)
            .collect();
        let max_col = (0..p)
            .map(|i| inst.x().column(i).norm())
            .fold(0.0, f64::max);
        Ok(Self {
            inst,
            in_support: s.mask(p),
            support: s.clone(),
            scores,
            base,
            diag_scale,
            zero_threshold: ZERO_SCORE_RTOL * inst.y().norm() * max_col,
        })
    }

    /// `c = XᵀMy`
    pub fn scores(&self) -> &DVector<f64> {
        &self.scores
    }

    fn is_zero(&self, c: f64) -> bool {
        c.abs() <= self.zero_threshold
    }

    /// All scores vanish (the trivial case).
    pub fn all_scores_zero(&self) -> bool {
        self.scores.iter().all(|&c| self.is_zero(c))
    }

    /// First support index with a vanishing score.
    pub fn zero_score_in_support(&self) -> Option<usize> {
        self.support
            .indices()
            .iter()
            .copied()
            .find(|&i| self.is_zero(self.scores[i]))
    }

    fn require_scores(&self) -> Result<()> {
        match self.zero_score_in_support() {
            Some(i) => Err(Error::ZeroScoreInSupport(i)),
            None => Ok(()),
        }
    }

    /// `d̃_i = λ̃c_i⁻²` on `S`, `λ̃⁻¹c_i²` off `S`.
    pub fn dual_from_lambda(&self, lambda_tilde: f64) -> Result<DVector<f64>> {
        if !(lambda_tilde > 0.0 && lambda_tilde.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda_tilde must be positive, got {lambda_tilde}"
            )));
        }
        self.require_scores()?;
        Ok(DVector::from_fn(self.scores.len(), |i, _| {
            let c2 = self.scores[i] * self.scores[i];
            if self.in_support[i] {
                lambda_tilde / c2
            } else {
                c2 / lambda_tilde
            }
        }))
    }

    /// `f(λ̃)` and a unit top eigenvector.
    pub fn f_eval(&self, lambda_tilde: f64) -> Result<(f64, DVector<f64>)> {
        let d = self.dual_from_lambda(lambda_tilde)?;
        let mut a = self.base.clone();
        a.set_diagonal(&(a.diagonal() + d));
        linalg::max_eig_sym(&a)
    }

    /// `h = Σ_{i∈S} c_i⁻²u_i² − λ̃⁻² Σ_{i∉S} c_i²u_i²`, a subgradient of `f` at
    /// `λ̃` when `u` is a top eigenvector there.
    pub fn subgradient(&self, lambda_tilde: f64, u: &DVector<f64>) -> f64 {
        let mut on = 0.0;
        let mut off = 0.0;
        for (i, ui) in u.iter().enumerate() {
            let c2 = self.scores[i] * self.scores[i];
            let w = ui * ui;
            if self.in_support[i] {
                on += w / c2;
            } else {
                off += c2 * w;
            }
        }
        on - off / (lambda_tilde * lambda_tilde)
    }

    /// Bracket `[ℓ, u]` outside of which some diagonal entry of the matrix
    /// in `f` is nonnegative. `ℓ` is zero when `S` covers every column.
    pub fn initial_interval(&self) -> (f64, f64) {
        let mut lo = 0.0_f64;
        let mut hi = f64::INFINITY;
        for (i, c) in self.scores.iter().enumerate() {
            let c2 = c * c;
            if self.in_support[i] {
                hi = hi.min(c2 * self.diag_scale[i]);
            } else {
                lo = lo.max(c2 / self.diag_scale[i]);
            }
        }
        (lo, hi)
    }

    fn certificate(&self, lambda_tilde: f64, f_value: f64, iterations: usize) -> Result<DclCertificate> {
        let cert = DclCertificate {
            support: self.support.clone(),
            lambda_tilde,
            d_tilde: self.dual_from_lambda(lambda_tilde)?,
            f_value,
            iterations,
        };
        let report = verify_dcl_certificate(self.inst, &cert)?;
        if !report.holds() {
            return Err(Error::Inconsistent(format!(
                "bisection point λ̃ = {lambda_tilde} fails verification: {report:?}"
            )));
        }
        Ok(cert)
    }
}

/// `f(λ̃)` with its top eigenvector.
pub fn f_eval(
    inst: &ProblemInstance,
    s: &SupportSet,
    lambda_tilde: f64,
) -> Result<(f64, DVector<f64>)> {
    DclProblem::new(inst, s)?.f_eval(lambda_tilde)
}

/// Subgradient of `f` at `λ̃` from a top eigenvector `u`.
pub fn subgradient_h(
    inst: &ProblemInstance,
    s: &SupportSet,
    lambda_tilde: f64,
    u: &DVector<f64>,
) -> Result<f64> {
    if u.len() != inst.p() {
        return Err(Error::invalid("eigenvector length must equal p"));
    }
    Ok(DclProblem::new(inst, s)?.subgradient(lambda_tilde, u))
}

pub fn initial_interval(inst: &ProblemInstance, s: &SupportSet) -> Result<(f64, f64)> {
    Ok(DclProblem::new(inst, s)?.initial_interval())
}

pub fn dual_from_lambda(
    inst: &ProblemInstance,
    s: &SupportSet,
    lambda_tilde: f64,
) -> Result<DVector<f64>> {
    DclProblem::new(inst, s)?.dual_from_lambda(lambda_tilde)
}

/// Searches for a dual certificate of the lifted relaxation at `S`.
///
/// Starts from the bracket of [`DclProblem::initial_interval`] and evaluates
/// `f` at the midpoint. A nonpositive value is a certificate. Otherwise the
/// subgradient `h` gives the cut `λ̂ − f(λ̂)/h`, which becomes the new upper
/// end when `h > 0` and the new lower end when `h < 0`; no `λ` with
/// `f(λ) < 0` is cut away. A cut landing outside the bracket closes it, and a
/// non-finite cut falls back to halving. The search stops once the bracket
/// width is at most `tol·max(1, u)` or `max_iter` evaluations were spent.
///
/// When every score vanishes, `(λ̃, d̃) = (0, 0)` is returned as the trivial
/// certificate.
pub fn check_dcl(
    inst: &ProblemInstance,
    s: &SupportSet,
    tol: f64,
    max_iter: usize,
) -> Result<CertOutcome<DclCertificate>> {
    check_candidate(inst, s)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let problem = DclProblem::new(inst, s)?;
    if problem.all_scores_zero() {
        let (f_value, _) = linalg::max_eig_sym(&problem.base)?;
        return Ok(CertOutcome::Exact(DclCertificate {
            support: s.clone(),
            lambda_tilde: 0.0,
            d_tilde: DVector::zeros(inst.p()),
            f_value,
            iterations: 0,
        }));
    }
    if problem.zero_score_in_support().is_some() {
        return Ok(CertOutcome::NotCertified(NotCertifiedReason::ZeroScoreInSupport));
    }

    let (mut lo, mut hi) = problem.initial_interval();
    if lo >= hi {
        return Ok(CertOutcome::NotCertified(NotCertifiedReason::IntervalEmpty));
    }
    for iter in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let (f, u) = problem.f_eval(mid)?;
        if f <= 0.0 {
            return problem.certificate(mid, f, iter).map(CertOutcome::Exact);
        }
        let h = problem.subgradient(mid, &u);
        if h == 0.0 {
            // mid minimizes f and f(mid) > 0
            break;
        }
        let cut = mid - f / h;
        if !cut.is_finite() {
            if h > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        } else if h > 0.0 {
            hi = cut.max(lo);
        } else {
            lo = cut.min(hi);
        }
        if hi - lo <= tol * hi.max(1.0) {
            break;
        }
    }
    Ok(CertOutcome::NotCertified(NotCertifiedReason::BisectionExhausted))
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Re-checks the three dual-certificate conditions from scratch, with `My`
/// taken from the `n × n` factorization.
pub fn verify_dcl_certificate(
    inst: &ProblemInstance,
    cert: &DclCertificate,
) -> Result<DclConditionReport> {
    let p = inst.p();
    if cert.d_tilde.len() != p {
        return Err(Error::invalid("d_tilde length must equal p"));
    }
    cert.support.check_within(p)?;
    let c = inst
        .x()
        .tr_mul(&linalg::apply_m_direct(inst, &cert.support, inst.y())?);
    let mut a = inst.x().tr_mul(inst.x()) / inst.rho();
    for i in 0..p {
        a[(i, i)] += 1.0 - cert.d_tilde[i];
    }
    let min_eig = linalg::min_eig_sym(&a)?;
    let mask = cert.support.mask(p);
    let mut equality_rel_err = 0.0_f64;
    let mut inequality_violation = 0.0_f64;
    for i in 0..p {
        let c2 = c[i] * c[i];
        if mask[i] {
            equality_rel_err = equality_rel_err.max(rel_err(cert.lambda_tilde, cert.d_tilde[i] * c2));
        } else {
            let gap = (c2 - cert.lambda_tilde * cert.d_tilde[i]) / c2.max(1.0);
            inequality_violation = inequality_violation.max(gap);
        }
    }
    let sign_violation = cert
        .d_tilde
        .iter()
        .chain(std::iter::once(&cert.lambda_tilde))
        .map(|&v| (-v).max(0.0))
        .fold(0.0, f64::max);
    Ok(DclConditionReport {
        min_eig,
        equality_rel_err,
        inequality_violation,
        sign_violation,
    })
}

/// Lifts a threshold witness to a dual witness:
/// `λ̃ = min_{j∈S} c_j²`, `d̃_i = λ̃c_i⁻²` on `S`, `d̃_i = 1` off `S`.
///
/// The witness is verified before it is returned; `d̃ ∈ [0, 1]ᵖ` makes the
/// semidefinite condition automatic, so a failure is an internal error.
pub fn pwg_witness_to_dcl(
    inst: &ProblemInstance,
    s: &SupportSet,
    pwg: &PwgCertificate,
) -> Result<DclCertificate> {
    check_candidate(inst, s)?;
    if &pwg.support != s {
        return Err(Error::invalid("threshold witness belongs to another support"));
    }
    let c = linalg::correlation_scores(inst, s)?;
    let mask = s.mask(inst.p());
    let lambda_tilde = s
        .indices()
        .iter()
        .map(|&j| c[j] * c[j])
        .fold(f64::INFINITY, f64::min);
    if lambda_tilde.is_nan() || lambda_tilde <= 0.0 {
        return Err(Error::Inconsistent(
            "threshold witness with a zero score in the support".into(),
        ));
    }
    let d_tilde = DVector::from_fn(inst.p(), |i, _| {
        if mask[i] {
            lambda_tilde / (c[i] * c[i])
        } else {
            1.0
        }
    });
    let mut a = inst.x().tr_mul(inst.x()) / (-inst.rho());
    for i in 0..inst.p() {
        a[(i, i)] += d_tilde[i] - 1.0;
    }
    let (f_value, _) = linalg::max_eig_sym(&a)?;
    let cert = DclCertificate {
        support: s.clone(),
        lambda_tilde,
        d_tilde,
        f_value,
        iterations: 0,
    };
    let report = verify_dcl_certificate(inst, &cert)?;
    if !report.holds() {
        return Err(Error::Inconsistent(format!(
            "lifted threshold witness fails verification: {report:?}"
        )));
    }
    Ok(cert)
}

fn min_eig_2x2(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    mean - (half * half + b * b).sqrt()
}

/// Residuals of the optimality system at `(b*, b*b*ᵀ, z*)` for dual
/// variables `(d, λ)`, with `t` and `τ` eliminated through
/// `t = (XᵀX + ρI − D(d))b* − Xᵀy` and `τ = b*ᵀ(XᵀX + ρI − D(d))b*`.
pub fn verify_kkt(
    inst: &ProblemInstance,
    s: &SupportSet,
    d: &DVector<f64>,
    lambda: f64,
) -> Result<KktReport> {
    let p = inst.p();
    if d.len() != p {
        return Err(Error::invalid(format!("d has length {}, expected p = {p}", d.len())));
    }
    let b = linalg::ridge_restricted_solve(inst, s)?.beta;
    let xty = inst.x().tr_mul(inst.y());
    let mut a = inst.x().tr_mul(inst.x());
    for i in 0..p {
        a[(i, i)] += inst.rho() - d[i];
    }
    let ab = &a * &b;
    let t = &ab - &xty;
    let tau = b.dot(&ab);

    let mut block = DMatrix::zeros(p + 1, p + 1);
    block[(0, 0)] = tau;
    for i in 0..p {
        let off = -xty[i] - t[i];
        block[(0, i + 1)] = off;
        block[(i + 1, 0)] = off;
    }
    block.view_mut((1, 1), (p, p)).copy_from(&a);
    let psd_residual_big = (-linalg::min_eig_sym(&block)?).max(0.0);

    let psd_residual_small = (0..p)
        .map(|i| (-min_eig_2x2(lambda, t[i], d[i])).max(0.0))
        .fold(0.0, f64::max);

    let mut lifted = DVector::zeros(p + 1);
    lifted[0] = 1.0;
    lifted.rows_mut(1, p).copy_from(&b);
    let mut comp_residual = (&block * &lifted).amax();
    for &i in s.indices() {
        comp_residual = comp_residual
            .max((lambda + t[i] * b[i]).abs())
            .max((t[i] + d[i] * b[i]).abs());
    }
    Ok(KktReport {
        t,
        tau,
        psd_residual_big,
        psd_residual_small,
        comp_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SplitMix64;
    use crate::linalg::testutil::*;
    use proptest::prelude::*;

    fn ident(y: [f64; 2]) -> ProblemInstance {
        ProblemInstance::new(DMatrix::identity(2, 2), DVector::from_row_slice(&y), 1.0, 1).unwrap()
    }

    fn s(ix: &[usize]) -> SupportSet {
        SupportSet::new(ix.to_vec()).unwrap()
    }

    #[test]
    fn pwg_examples() {
        match check_pwg(&ident([1.0, 0.0]), &s(&[0])).unwrap() {
            CertOutcome::Exact(c) => {
                assert!((c.min_in - 0.5).abs() < 1e-15);
                assert_eq!(c.max_out, 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            check_pwg(&ident([0.0, 0.0]), &s(&[0])).unwrap().reason(),
            Some(NotCertifiedReason::SeparationFailed)
        );
        assert_eq!(
            check_pwg(&ident([1.0, 1.0]), &s(&[0])).unwrap().reason(),
            Some(NotCertifiedReason::SeparationFailed)
        );
        assert!(check_pwg(&ident([1.0, 0.0]), &SupportSet::empty()).is_err());
        assert!(check_pwg(&ident([1.0, 0.0]), &s(&[0, 1])).is_err());
    }

    #[test]
    fn f_examples() {
        let inst = ident([1.0, 0.0]);
        // c = (0.5, 0): matrix diag(4λ − 2, −2)
        let (f, u) = f_eval(&inst, &s(&[0]), 0.25).unwrap();
        assert!((f + 1.0).abs() < 1e-14);
        assert!((u[0] - 1.0).abs() < 1e-14);
        let (f, u) = f_eval(&inst, &s(&[0]), 0.75).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
        assert!((u[0] - 1.0).abs() < 1e-14);
        assert!(f_eval(&inst, &s(&[0]), 0.0).is_err());
        assert!(matches!(
            f_eval(&ident([0.0, 1.0]), &s(&[0]), 1.0),
            Err(Error::ZeroScoreInSupport(0))
        ));
    }

    #[test]
    fn f_closed_form_for_orthonormal_design() {
        let y = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let inst = ProblemInstance::new(DMatrix::identity(3, 3), y.clone(), 1.0, 3).unwrap();
        let sup = s(&[0, 1, 2]);
        // M = I/2 so c = y/2
        let worst = y.iter().map(|v| 4.0 / (v * v)).fold(0.0, f64::max);
        for lam in [0.01, 0.1, 0.3, 1.0] {
            let (f, _) = f_eval(&inst, &sup, lam).unwrap();
            assert!((f - (lam * worst - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn subgradient_examples() {
        let inst = ident([1.0, 0.0]);
        let e1 = DVector::from_row_slice(&[1.0, 0.0]);
        let e2 = DVector::from_row_slice(&[0.0, 1.0]);
        assert!((subgradient_h(&inst, &s(&[0]), 0.75, &e1).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(subgradient_h(&inst, &s(&[0]), 0.75, &e2).unwrap(), 0.0);

        let inst = ident([1.0, 1.0]);
        // c = (0.5, 1); diag(4λ − 2, 1/λ − 2) has top index 1 for small λ
        let lam = 0.1;
        let (_, u) = f_eval(&inst, &s(&[0]), lam).unwrap();
        assert!((u[1] - 1.0).abs() < 1e-14);
        let h = subgradient_h(&inst, &s(&[0]), lam, &u).unwrap();
        assert!((h + 1.0 / (lam * lam)).abs() < 1e-10);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(initial_interval(&ident([1.0, 0.0]), &s(&[0])).unwrap(), (0.0, 0.5));
        let scalar = ProblemInstance::from_row_major(1, 1, &[1.0], &[2.0], 1.0, 1).unwrap();
        let (lo, hi) = initial_interval(&scalar, &s(&[0])).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 2.0).abs() < 1e-14);
        let (lo, hi) = initial_interval(&ident([1.0, 1.0]), &s(&[0])).unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dcl_examples() {
        let cert = match check_dcl(&ident([1.0, 0.0]), &s(&[0]), 1e-10, 200).unwrap() {
            CertOutcome::Exact(c) => c,
            other => panic!("{other:?}"),
        };
        assert_eq!(cert.iterations, 1);
        assert!((cert.lambda_tilde - 0.25).abs() < 1e-15);
        assert!((cert.f_value + 1.0).abs() < 1e-14);
        assert!((cert.d_tilde[0] - 1.0).abs() < 1e-14 && cert.d_tilde[1] == 0.0);

        assert_eq!(
            check_dcl(&ident([1.0, 1.0]), &s(&[0]), 1e-10, 200).unwrap().reason(),
            Some(NotCertifiedReason::IntervalEmpty)
        );

        let trivial = check_dcl(&ident([0.0, 0.0]), &s(&[0]), 1e-10, 200).unwrap();
        let cert = trivial.certificate().unwrap();
        assert_eq!(cert.d_tilde.as_slice(), &[0.0, 0.0]);
        assert!(verify_dcl_certificate(&ident([0.0, 0.0]), cert).unwrap().holds());

        assert_eq!(
            check_dcl(&ident([0.0, 1.0]), &s(&[0]), 1e-10, 200).unwrap().reason(),
            Some(NotCertifiedReason::ZeroScoreInSupport)
        );
        assert!(check_dcl(&ident([1.0, 0.0]), &s(&[0]), 0.0, 200).is_err());
    }

    #[test]
    fn dual_examples() {
        let d = dual_from_lambda(&ident([1.0, 0.0]), &s(&[0]), 0.25).unwrap();
        assert_eq!(d.as_slice(), &[1.0, 0.0]);
        let scalar = ProblemInstance::from_row_major(1, 1, &[1.0], &[2.0], 1.0, 1).unwrap();
        let d = dual_from_lambda(&scalar, &s(&[0]), 1.0).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14);
        // unit columns, λ̃ = c_i² gives d̃_i = 1
        let inst = ident([3.0, 0.0]);
        let c = linalg::correlation_scores(&inst, &s(&[0])).unwrap();
        let d = dual_from_lambda(&inst, &s(&[0]), c[0] * c[0]).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15);
        assert!(dual_from_lambda(&ident([0.0, 1.0]), &s(&[0]), 1.0).is_err());
    }

    #[test]
    fn witness_transfer_examples() {
        let inst = ident([1.0, 0.0]);
        let pwg = check_pwg(&inst, &s(&[0])).unwrap().certificate().cloned().unwrap();
        let cert = pwg_witness_to_dcl(&inst, &s(&[0]), &pwg).unwrap();
        assert!((cert.lambda_tilde - 0.25).abs() < 1e-15);
        assert_eq!(cert.d_tilde.as_slice(), &[1.0, 1.0]);

        // orthogonal unit columns with equal in-support scores
        let y = DVector::from_row_slice(&[2.0, -2.0, 0.1]);
        let inst = ProblemInstance::new(DMatrix::identity(3, 3), y, 1.0, 2).unwrap();
        let pwg = check_pwg(&inst, &s(&[0, 1])).unwrap().certificate().cloned().unwrap();
        let cert = pwg_witness_to_dcl(&inst, &s(&[0, 1]), &pwg).unwrap();
        assert!((cert.d_tilde[0] - 1.0).abs() < 1e-15 && (cert.d_tilde[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kkt_examples() {
        let report = verify_kkt(
            &ident([1.0, 0.0]),
            &s(&[0]),
            &DVector::from_row_slice(&[1.0, 0.0]),
            0.25,
        )
        .unwrap();
        assert!((report.t[0] + 0.5).abs() < 1e-15);
        assert!((report.tau - 0.25).abs() < 1e-15);
        assert!(report.max_residual() < 1e-14, "{report:?}");

        let report = verify_kkt(&ident([0.0, 0.0]), &s(&[0]), &DVector::zeros(2), 0.0).unwrap();
        assert_eq!(report.max_residual(), 0.0);

        // a wrong multiplier shows up as a complementarity violation
        let report = verify_kkt(
            &ident([1.0, 0.0]),
            &s(&[0]),
            &DVector::from_row_slice(&[1.0, 0.0]),
            0.5,
        )
        .unwrap();
        assert!(report.comp_residual > 0.2);
    }

    #[test]
    fn zero_response_only_trivially_certified() {
        let inst = random_instance(11, 8, 10, 2, 1.0).with_response(DVector::zeros(8)).unwrap();
        let sup = s(&[1, 4]);
        assert!(!check_pwg(&inst, &sup).unwrap().is_exact());
        let cert = check_dcl(&inst, &sup, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(cert.certificate().unwrap().lambda_tilde, 0.0);
        assert!(dual_from_lambda(&inst, &sup, 1.0).is_err());
    }

    /// Instance built so the true support is well separated.
    fn planted(seed: u64, n: usize, p: usize, k: usize, rho: f64) -> (ProblemInstance, SupportSet) {
        let mut rng = SplitMix64::new(seed);
        let x = gaussian_matrix(&mut rng, n, p);
        let sup = random_support(&mut rng, p, k);
        let mut beta = DVector::zeros(p);
        for &j in sup.indices() {
            beta[j] = if rng.next_u64() >> 63 == 0 { 1.0 } else { -1.0 };
        }
        let y = &x * beta + DVector::from_fn(n, |_, _| 0.1 * rng.next_normal());
        (ProblemInstance::new(x, y, rho, k).unwrap(), sup)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn f_is_convex_with_valid_subgradients(seed in any::<u64>(), n in 3usize..12, p in 3usize..10) {
            let k = 1 + (seed % 3) as usize;
            let k = k.min(p - 1);
            let (inst, sup) = planted(seed, n, p, k, 1.0);
            let problem = DclProblem::new(&inst, &sup).unwrap();
            prop_assume!(problem.zero_score_in_support().is_none());
            let (lo, hi) = problem.initial_interval();
            let (a, b) = ((lo / 2.0).max(1e-6 * hi), 2.0 * hi);
            let mut rng = SplitMix64::new(seed ^ 0x5eed);
            for _ in 0..20 {
                let mut ls = [a + (b - a) * rng.next_f64(), a + (b - a) * rng.next_f64(), a + (b - a) * rng.next_f64()];
                ls.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let [l1, l2, l3] = ls;
                prop_assume!(l3 > l1);
                let t = (l3 - l2) / (l3 - l1);
                let f1 = problem.f_eval(l1).unwrap().0;
                let f2 = problem.f_eval(l2).unwrap().0;
                let f3 = problem.f_eval(l3).unwrap().0;
                let slack = 1e-9 * (1.0 + f1.abs().max(f3.abs()));
                prop_assert!(f2 <= t * f1 + (1.0 - t) * f3 + slack);

                let (fh, u) = problem.f_eval(l2).unwrap();
                let h = problem.subgradient(l2, &u);
                for lam in [l1, l3] {
                    let f = problem.f_eval(lam).unwrap().0;
                    prop_assert!(f >= fh + h * (lam - l2) - 1e-9 * (1.0 + f.abs()));
                }
            }
        }

        #[test]
        fn certificates_verify_and_satisfy_kkt(seed in any::<u64>(), n in 4usize..14, p in 4usize..12) {
            let k = 1 + (seed % 3) as usize;
            let (inst, sup) = planted(seed, n, p, k.min(p - 1), [0.1, 1.0, 10.0][(seed % 3) as usize]);
            let pwg = check_pwg(&inst, &sup).unwrap();
            let dcl = check_dcl(&inst, &sup, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            if let Some(w) = pwg.certificate() {
                prop_assert!(dcl.is_exact());
                let lifted = pwg_witness_to_dcl(&inst, &sup, w).unwrap();
                prop_assert!(verify_dcl_certificate(&inst, &lifted).unwrap().holds());
            }
            if let Some(cert) = dcl.certificate() {
                prop_assert!(cert.f_value <= 0.0);
                prop_assert!(verify_dcl_certificate(&inst, cert).unwrap().holds());
                let (d, lam) = cert.kkt_variables(inst.rho());
                let report = verify_kkt(&inst, &sup, &d, lam).unwrap();
                prop_assert!(report.max_residual() <= 1e-6, "{:?}", report);
            }
        }
    }
}
