//! Dense kernels shared by the certificate checks and the oracles: restricted
//! ridge solves, the action of `M = (I + ρ⁻¹X_S X_Sᵀ)⁻¹`, correlation scores
//! and symmetric eigen-extraction.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Design matrix, response, ridge weight and cardinality budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    x: DMatrix<f64>,
    y: DVector<f64>,
    rho: f64,
    k: usize,
}

impl ProblemInstance {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, rho: f64, k: usize) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!("X must be non-empty, got {n}x{p}")));
        }
        if y.len() != n {
            return Err(Error::invalid(format!(
                "y has length {} but X has {n} rows",
                y.len()
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive and finite, got {rho}")));
        }
        if k == 0 || k > p {
            return Err(Error::invalid(format!("k must lie in [1, {p}], got {k}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("X and y must be finite"));
        }
        Ok(Self { x, y, rho, k })
    }

    /// Builds an instance from a row-major `n × p` buffer.
    pub fn from_row_major(
        n: usize,
        p: usize,
        x: &[f64],
        y: &[f64],
        rho: f64,
        k: usize,
    ) -> Result<Self> {
        if x.len() != n * p {
            return Err(Error::invalid(format!(
                "X has {} entries, expected n*p = {}",
                x.len(),
                n * p
            )));
        }
        Self::new(
            DMatrix::from_row_slice(n, p, x),
            DVector::from_column_slice(y),
            rho,
            k,
        )
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Same design, ridge weight and budget with a different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y, self.rho, self.k)
    }

    pub(crate) fn columns(&self, s: &SupportSet) -> DMatrix<f64> {
        self.x.select_columns(s.indices())
    }
}

/// Strictly increasing set of column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    /// Sorts the indices; duplicates are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate support index {}", w[0])));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= p => Err(Error::invalid(format!(
                "support index {last} out of range for p = {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Membership mask of length `p`.
    pub fn mask(&self, p: usize) -> Vec<bool> {
        let mut mask = vec![false; p];
        for &j in &self.0 {
            mask[j] = true;
        }
        mask
    }

    pub fn complement(&self, p: usize) -> Vec<usize> {
        let mask = self.mask(p);
        (0..p).filter(|&j| !mask[j]).collect()
    }
}

impl TryFrom<Vec<usize>> for SupportSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SupportSet> for Vec<usize> {
    fn from(s: SupportSet) -> Self {
        s.0
    }
}

impl std::fmt::Display for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Minimizer of the ridge objective with coefficients restricted to `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedRidgeSolution {
    /// Length `p`, exactly zero off the support.
    pub beta: DVector<f64>,
    /// `½‖Xβ − y‖² + ½ρ‖β‖²` at `beta`.
    pub value: f64,
}

fn spd_factor(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a).ok_or_else(|| Error::Inconsistent(format!("{what} is not positive definite")))
}

fn check_support(inst: &ProblemInstance, s: &SupportSet) -> Result<()> {
    s.check_within(inst.p())
}

/// `b_S = (ρI + X_SᵀX_S)⁻¹X_Sᵀy`, zero elsewhere.
pub fn ridge_restricted_solve(
    inst: &ProblemInstance,
    s: &SupportSet,
) -> Result<RestrictedRidgeSolution> {
    check_support(inst, s)?;
    let p = inst.p();
    let mut beta = DVector::zeros(p);
    if !s.is_empty() {
        let xs = inst.columns(s);
        let mut gram = xs.tr_mul(&xs);
        for i in 0..s.len() {
            gram[(i, i)] += inst.rho();
        }
        let chol = spd_factor(gram, "ρI + X_SᵀX_S")?;
        let bs = chol.solve(&xs.tr_mul(inst.y()));
        for (slot, &j) in s.indices().iter().enumerate() {
            beta[j] = bs[slot];
        }
    }
    let resid = inst.x() * &beta - inst.y();
    let value = 0.5 * resid.norm_squared() + 0.5 * inst.rho() * beta.norm_squared();
    Ok(RestrictedRidgeSolution { beta, value })
}

/// `½ yᵀ(I + ρ⁻¹X_S X_Sᵀ)⁻¹y`, computed in the `n × n` kernel form.
///
/// Agrees with [`ridge_restricted_solve`]'s value; the two routes share no
/// factorization. Empty `S` gives `½‖y‖²`.
pub fn ridge_value_via_identity(inst: &ProblemInstance, s: &SupportSet) -> Result<f64> {
    let my = apply_m_direct(inst, s, inst.y())?;
    Ok(0.5 * inst.y().dot(&my))
}

/// Reusable action of `M = (I + ρ⁻¹X_S X_Sᵀ)⁻¹` for a fixed support.
pub struct MOperator {
    kind: MKind,
}

enum MKind {
    Identity,
    /// `w = v − X_S (ρI + X_SᵀX_S)⁻¹ X_Sᵀ v`
    Woodbury {
        xs: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    /// `(I + ρ⁻¹X_S X_Sᵀ) w = v`
    Direct { chol: Cholesky<f64, Dyn> },
}

impl MOperator {
    /// Picks the `|S|`-dimensional Woodbury form when `|S| < n`.
    pub fn new(inst: &ProblemInstance, s: &SupportSet) -> Result<Self> {
        check_support(inst, s)?;
        if s.is_empty() {
            return Ok(Self {
                kind: MKind::Identity,
            });
        }
        if s.len() < inst.n() {
            let xs = inst.columns(s);
            let mut gram = xs.tr_mul(&xs);
            for i in 0..s.len() {
                gram[(i, i)] += inst.rho();
            }
            let chol = spd_factor(gram, "ρI + X_SᵀX_S")?;
            Ok(Self {
                kind: MKind::Woodbury { xs, chol },
            })
        } else {
            Self::direct(inst, s)
        }
    }

    /// Always factors the `n × n` matrix.
    pub fn direct(inst: &ProblemInstance, s: &SupportSet) -> Result<Self> {
        check_support(inst, s)?;
        if s.is_empty() {
            return Ok(Self {
                kind: MKind::Identity,
            });
        }
        let xs = inst.columns(s);
        let mut kernel = &xs * xs.transpose() / inst.rho();
        for i in 0..inst.n() {
            kernel[(i, i)] += 1.0;
        }
        let chol = spd_factor(kernel, "I + ρ⁻¹X_S X_Sᵀ")?;
        Ok(Self {
            kind: MKind::Direct { chol },
        })
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            MKind::Identity => v.clone(),
            MKind::Woodbury { xs, chol } => v - xs * chol.solve(&xs.tr_mul(v)),
            MKind::Direct { chol } => chol.solve(v),
        }
    }
}

fn check_len(inst: &ProblemInstance, v: &DVector<f64>) -> Result<()> {
    if v.len() != inst.n() {
        return Err(Error::invalid(format!(
            "vector has length {}, expected n = {}",
            v.len(),
            inst.n()
        )));
    }
    Ok(())
}

/// `M v`, via Woodbury when `|S| < n` and the direct solve otherwise.
pub fn apply_m_operator(
    inst: &ProblemInstance,
    s: &SupportSet,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(inst, v)?;
    Ok(MOperator::new(inst, s)?.apply(v))
}

/// `M v` through the `n × n` factorization regardless of `|S|`.
pub fn apply_m_direct(
    inst: &ProblemInstance,
    s: &SupportSet,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(inst, v)?;
    Ok(MOperator::direct(inst, s)?.apply(v))
}

/// `c_j = X_jᵀ M y` for every column, including those in `S`.
pub fn correlation_scores(inst: &ProblemInstance, s: &SupportSet) -> Result<DVector<f64>> {
    let my = apply_m_operator(inst, s, inst.y())?;
    Ok(inst.x().tr_mul(&my))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let (r, c) = a.shape();
    if r != c || r == 0 {
        return Err(Error::invalid(format!("expected a non-empty square matrix, got {r}x{c}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = 1.0 + a.amax();
    for i in 0..r {
        for j in (i + 1)..r {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix.
///
/// The eigenvector's largest-magnitude entry is made positive so the output
/// is reproducible.
pub fn max_eig_sym(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    check_symmetric(a)?;
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.imax();
    let mut u: DVector<f64> = eig.eigenvectors.column(top).into_owned();
    u.normalize_mut();
    if u[u.iamax()] < 0.0 {
        u.neg_mut();
    }
    Ok((eig.eigenvalues[top], u))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym(a: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(a)?;
    Ok(SymmetricEigen::new(a.clone()).eigenvalues.min())
}

/// Residuals of the two Woodbury identities linking `b*` and `M`:
///
/// * `r1 = max_i |X_iᵀ(Xb* − y) + X_iᵀMy|` over all columns,
/// * `r2 = max_{i∈S} |b*_i − ρ⁻¹X_iᵀMy|`.
///
/// `My` comes from the `n × n` factorization so neither residual is zero by
/// construction.
pub fn smw_residuals(inst: &ProblemInstance, s: &SupportSet) -> Result<(f64, f64)> {
    let sol = ridge_restricted_solve(inst, s)?;
    let my = apply_m_direct(inst, s, inst.y())?;
    let c = inst.x().tr_mul(&my);
    let grad = inst.x().tr_mul(&(inst.x() * &sol.beta - inst.y()));
    let r1 = grad
        .iter()
        .zip(c.iter())
        .map(|(g, c)| (g + c).abs())
        .fold(0.0, f64::max);
    let r2 = s
        .indices()
        .iter()
        .map(|&i| (sol.beta[i] - c[i] / inst.rho()).abs())
        .fold(0.0, f64::max);
    Ok((r1, r2))
}
