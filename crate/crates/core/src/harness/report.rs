//! Text reports behind the `check`, `oracle` and `selftest` commands.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::certificates::{
    self, CertOutcome, DclCertificate, KktReport, PwgCertificate,
};
use crate::ensemble::seed_derive;
use crate::error::Result;
use crate::linalg::{self, ProblemInstance, SupportSet};
use crate::oracles::{self, BruteForceResult, PwgValueResult};

use super::files::format_real;

/// Exit code for a DCL-exact support.
pub const EXIT_EXACT: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_ORDERING_VIOLATED: i32 = 3;

/// Slack allowed when checking `pwg value ≤ ν_ℓ0`.
pub const ORDERING_SLACK: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub rho: f64,
    pub support: SupportSet,
    pub scores: DVector<f64>,
    pub pwg: CertOutcome<PwgCertificate>,
    pub dcl: CertOutcome<DclCertificate>,
    pub kkt: Option<KktReport>,
}

pub fn run_check(
    inst: &ProblemInstance,
    support: &SupportSet,
    tol: f64,
    max_iter: usize,
) -> Result<CheckReport> {
    let pwg = certificates::check_pwg(inst, support)?;
    let dcl = certificates::check_dcl(inst, support, tol, max_iter)?;
    let scores = linalg::correlation_scores(inst, support)?;
    let kkt = match dcl.certificate() {
        Some(cert) => {
            let (d, lambda) = cert.kkt_variables(inst.rho());
            Some(certificates::verify_kkt(inst, support, &d, lambda)?)
        }
        None => None,
    };
    Ok(CheckReport {
        n: inst.n(),
        p: inst.p(),
        k: inst.k(),
        rho: inst.rho(),
        support: support.clone(),
        scores,
        pwg,
        dcl,
        kkt,
    })
}

impl CheckReport {
    pub fn exit_code(&self) -> i32 {
        if self.dcl.is_exact() {
            EXIT_EXACT
        } else {
            EXIT_NOT_CERTIFIED
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "instance: n={} p={} k={} rho={}",
            self.n,
            self.p,
            self.k,
            format_real(self.rho)
        );
        let _ = writeln!(out, "support: {}", self.support);
        let _ = writeln!(out, "scores (c_j = X_j'My):");
        for (j, c) in self.scores.iter().enumerate() {
            let tag = if self.support.contains(j) { "  in S" } else { "" };
            let _ = writeln!(out, "  {j:>4}  {}{tag}", format_real(*c));
        }
        match &self.pwg {
            CertOutcome::Exact(c) => {
                let _ = writeln!(
                    out,
                    "PWG: Exact min_in={} max_out={}",
                    format_real(c.min_in),
                    format_real(c.max_out)
                );
            }
            CertOutcome::NotCertified(r) => {
                let _ = writeln!(out, "PWG: NotCertified ({r})");
            }
        }
        match &self.dcl {
            CertOutcome::Exact(c) => {
                let _ = writeln!(
                    out,
                    "DCL: Exact lambda_tilde={} f={} evaluations={}",
                    format_real(c.lambda_tilde),
                    format_real(c.f_value),
                    c.iterations
                );
            }
            CertOutcome::NotCertified(r) => {
                let _ = writeln!(out, "DCL: NotCertified ({r})");
            }
        }
        if let Some(k) = &self.kkt {
            let _ = writeln!(
                out,
                "KKT residuals: psd_big={} psd_small={} complementarity={}",
                format_real(k.psd_residual_big),
                format_real(k.psd_residual_small),
                format_real(k.comp_residual)
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub brute: BruteForceResult,
    pub relaxation: PwgValueResult,
}

pub fn run_oracle(inst: &ProblemInstance, max_combinations: u128) -> Result<OracleReport> {
    let brute = oracles::brute_force_l0(inst, max_combinations)?;
    let relaxation = oracles::pwg_value(inst, 1e-12, 10_000)?;
    Ok(OracleReport { brute, relaxation })
}

impl OracleReport {
    pub fn ordering_holds(&self) -> bool {
        self.relaxation.value <= self.brute.value + ORDERING_SLACK
    }

    pub fn exit_code(&self) -> i32 {
        if self.ordering_holds() {
            EXIT_EXACT
        } else {
            EXIT_ORDERING_VIOLATED
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nu_l0: {}", format_real(self.brute.value));
        let supports: Vec<String> = self.brute.argmin_supports.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "argmin supports: {}", supports.join(" "));
        let _ = writeln!(
            out,
            "pwg value: {} (frank-wolfe gap {}, projected-gradient norm {}, {} steps)",
            format_real(self.relaxation.value),
            format_real(self.relaxation.fw_gap),
            format_real(self.relaxation.grad_norm_kkt),
            self.relaxation.iterations
        );
        let _ = writeln!(
            out,
            "ordering pwg <= l0: {}",
            if self.ordering_holds() { "holds" } else { "VIOLATED" }
        );
        out
    }
}

/// `seed_derive(0, 0, 0, 0, 0)`.
pub const SEED_DERIVE_REFERENCE: u64 = 2_391_539_541_053_276_776;

/// Re-runs the two-column identity examples and prints the seed reference.
pub fn selftest() -> (String, bool) {
    let mut out = String::new();
    let mut ok = true;
    let mut record = |name: &str, pass: bool| {
        let _ = writeln!(out, "{} {name}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let seed = seed_derive(0, 0, 0, 0, 0);
    record(
        &format!("seed_derive(0,0,0,0,0) = {seed}"),
        seed == SEED_DERIVE_REFERENCE,
    );

    let example = |y: [f64; 2]| {
        ProblemInstance::new(DMatrix::identity(2, 2), DVector::from_row_slice(&y), 1.0, 1)
            .expect("valid example")
    };
    let s0 = SupportSet::new(vec![0]).expect("valid support");
    let inst = example([1.0, 0.0]);

    let ridge = linalg::ridge_restricted_solve(&inst, &s0).map(|r| r.value);
    record("ridge value 0.25", matches!(ridge, Ok(v) if (v - 0.25).abs() < 1e-12));

    let pwg = certificates::check_pwg(&inst, &s0);
    record(
        "threshold certificate (0.5, 0)",
        matches!(&pwg, Ok(CertOutcome::Exact(c)) if (c.min_in - 0.5).abs() < 1e-12 && c.max_out == 0.0),
    );

    let dcl = certificates::check_dcl(&inst, &s0, certificates::DEFAULT_TOL, certificates::DEFAULT_MAX_ITER);
    record(
        "dual certificate at 0.25",
        matches!(&dcl, Ok(CertOutcome::Exact(c)) if (c.lambda_tilde - 0.25).abs() < 1e-12),
    );

    let swapped = certificates::check_dcl(
        &example([1.0, 1.0]),
        &s0,
        certificates::DEFAULT_TOL,
        certificates::DEFAULT_MAX_ITER,
    );
    record(
        "interval-empty for y = (1, 1)",
        matches!(swapped, Ok(CertOutcome::NotCertified(certificates::NotCertifiedReason::IntervalEmpty))),
    );

    let brute = oracles::brute_force_l0(&inst, oracles::DEFAULT_MAX_COMBINATIONS);
    record(
        "brute force 0.25 at {0}",
        matches!(&brute, Ok(b) if (b.value - 0.25).abs() < 1e-12 && b.argmin_supports == vec![s0.clone()]),
    );

    let relax = oracles::pwg_value(&inst, 1e-12, 10_000);
    record(
        "continuous relaxation 0.25",
        matches!(&relax, Ok(r) if (r.value - 0.25).abs() < 1e-9),
    );
    (out, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident(y: [f64; 2]) -> ProblemInstance {
        ProblemInstance::new(DMatrix::identity(2, 2), DVector::from_row_slice(&y), 1.0, 1).unwrap()
    }

    #[test]
    fn check_report_exit_codes() {
        let s0 = SupportSet::new(vec![0]).unwrap();
        let s1 = SupportSet::new(vec![1]).unwrap();
        let r = run_check(&ident([1.0, 0.0]), &s0, 1e-10, 200).unwrap();
        assert_eq!(r.exit_code(), EXIT_EXACT);
        let text = r.render();
        assert!(text.contains("PWG: Exact min_in=0.5 max_out=0"), "{text}");
        assert!(text.contains("DCL: Exact lambda_tilde=0.25 f=-1"), "{text}");
        assert!(text.contains("KKT residuals"), "{text}");

        let r = run_check(&ident([1.0, 0.0]), &s1, 1e-10, 200).unwrap();
        assert_eq!(r.exit_code(), EXIT_NOT_CERTIFIED);
        assert!(!r.pwg.is_exact());
        assert!(r.kkt.is_none());
    }

    #[test]
    fn oracle_report() {
        let r = run_oracle(&ident([1.0, 0.0]), 1000).unwrap();
        assert!(r.ordering_holds());
        assert!((r.brute.value - 0.25).abs() < 1e-15);
        assert!((r.relaxation.value - 0.25).abs() < 1e-9);
        assert!(r.render().contains("argmin supports: {0}"));

        let r = run_oracle(&ident([0.0, 0.0]), 1000).unwrap();
        assert_eq!((r.brute.value, r.relaxation.value), (0.0, 0.0));
    }

    #[test]
    fn selftest_passes() {
        let (text, ok) = selftest();
        assert!(ok, "{text}");
    }
}
