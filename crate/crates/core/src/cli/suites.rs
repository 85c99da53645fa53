//! The verification suites behind `jtheta verify`.

use clap::ValueEnum;

use crate::applications_verify::{
    heat_bvp_fd_compare, heat_bvp_refinement, heat_equation_report, nls_convention_search, nls_dn_period,
    nls_plane_wave_report, GridSpec1D, ModulusArgument, NLSCandidate, PhaseGrouping,
};
use crate::complex_core::TruncationPolicy;
use crate::elliptic::{expansion_report, identity_suite_algebraic, identity_suite_derivative, limit_report, real_period_grid};
use crate::error::Result;
use crate::report_io::{aggregate_reports, Expectation, VerificationReport};
use crate::theta_classical::{LatticeParameter, ThetaKind};
use crate::theta_expansion::{expansion_accuracy_report, sample_strip_points, theta1_prime_identity};
use crate::trig_coefficients::{coefficient_report, coefficients_closed_form};
use crate::zeta::{zeta_consistency_report, zeta_grid};

use super::CliConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Theta,
    Coefficients,
    Elliptic,
    Zeta,
    Heat,
    Nls,
    All,
}

impl Suite {
    pub const INDIVIDUAL: [Suite; 6] = [Suite::Theta, Suite::Coefficients, Suite::Elliptic, Suite::Zeta, Suite::Heat, Suite::Nls];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theta => "theta",
            Suite::Coefficients => "coefficients",
            Suite::Elliptic => "elliptic",
            Suite::Zeta => "zeta",
            Suite::Heat => "heat",
            Suite::Nls => "nls",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub lat: LatticeParameter,
    pub policy: TruncationPolicy,
    pub max_order_p: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn from_cli(cfg: &CliConfig) -> Self {
        Self { lat: cfg.lat, policy: cfg.policy, max_order_p: cfg.max_order_p, seed: 1 }
    }

    pub fn for_nome(q: f64) -> Result<Self> {
        Ok(Self { lat: LatticeParameter::from_nome(q)?, policy: TruncationPolicy::default(), max_order_p: 64, seed: 1 })
    }
}

/// Aggregates the parts under `title`; a part that errored becomes a failing
/// measurement.
fn bundle(title: &str, parts: Vec<(&str, Result<VerificationReport>)>) -> VerificationReport {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (name, part) in parts {
        match part {
            Ok(r) => ok.push(r),
            Err(e) => errors.push((name, e)),
        }
    }
    let mut rep = aggregate_reports(&ok);
    rep.title = title.to_string();
    for (name, e) in errors {
        rep.push_error(name, &e);
    }
    rep
}

fn theta_suite(cfg: &SuiteConfig) -> VerificationReport {
    let table = coefficients_closed_form(&cfg.lat, cfg.max_order_p, &cfg.policy);
    let (a, b) = match &table {
        Ok(t) => (
            expansion_accuracy_report(&cfg.lat, t, 200, cfg.seed, Expectation::Discrepancy, &cfg.policy),
            theta1_prime_identity(&cfg.lat, t, &cfg.policy),
        ),
        Err(e) => (Err(e.clone()), Err(e.clone())),
    };
    bundle("theta", vec![("theta expansions", a), ("theta1 derivative identity", b)])
}

fn coefficients_suite(cfg: &SuiteConfig) -> VerificationReport {
    bundle("coefficients", vec![("coefficients", coefficient_report(&cfg.lat, 10, &cfg.policy))])
}

fn elliptic_suite(cfg: &SuiteConfig) -> VerificationReport {
    let grid = real_period_grid(&cfg.lat, 100, &cfg.policy);
    let (alg, der) = match &grid {
        Ok(g) => (
            identity_suite_algebraic(&cfg.lat, g, &cfg.policy),
            identity_suite_derivative(&cfg.lat, g, 1e-5, &cfg.policy),
        ),
        Err(e) => (Err(e.clone()), Err(e.clone())),
    };
    let expansions = coefficients_closed_form(&cfg.lat, cfg.max_order_p, &cfg.policy).and_then(|t| {
        let pts = sample_strip_points(ThetaKind::Theta4, &cfg.lat, 40, cfg.seed);
        expansion_report(&cfg.lat, &pts, &t, Expectation::Discrepancy, &cfg.policy)
    });
    bundle(
        "elliptic",
        vec![
            ("algebraic identities", alg),
            ("derivative identities", der),
            ("expansions", expansions),
            ("limits", limit_report(&cfg.policy)),
        ],
    )
}

fn zeta_suite(cfg: &SuiteConfig) -> VerificationReport {
    let rep = coefficients_closed_form(&cfg.lat, cfg.max_order_p, &cfg.policy).and_then(|t| {
        let grid = zeta_grid(&cfg.lat, 50, &cfg.policy)?;
        zeta_consistency_report(&cfg.lat, &grid, &t, &cfg.policy)
    });
    bundle("zeta", vec![("zeta routes", rep)])
}

fn heat_suite(cfg: &SuiteConfig) -> VerificationReport {
    let pde = heat_equation_report(&cfg.lat, 20, 1e-4, cfg.seed, &cfg.policy);
    let bvp = GridSpec1D::new(0.0, 1.0, 201).and_then(|g| heat_bvp_fd_compare(&g, 1.0, 0.01, 1e-6, &cfg.policy));
    let refine = heat_bvp_refinement(&[51, 101, 201], 1.0, 0.01, 1e-6, &cfg.policy);
    bundle("heat", vec![("heat equation", pde), ("boundary-value problem", bvp), ("refinement", refine)])
}

fn nls_suite(cfg: &SuiteConfig) -> VerificationReport {
    let (r, p, k) = (1.0, 0.3, 0.6);
    let standard = NLSCandidate { r, p_wave: p, k, sign_time: 1.0, grouping: PhaseGrouping::Grouped, modulus: ModulusArgument::K };
    let search = nls_dn_period(&standard, &cfg.policy)
        .and_then(|period| GridSpec1D::new(0.0, period, 400))
        .and_then(|g| nls_convention_search(r, p, k, &g, 0.37, &cfg.policy));
    let plane = GridSpec1D::new(0.0, 2.0 * std::f64::consts::PI, 64).and_then(|g| nls_plane_wave_report(1.0, &g, 0.37, &cfg.policy));
    bundle("nls", vec![("convention search", search), ("plane wave", plane)])
}

/// Runs one suite; `All` runs the six individual suites concurrently and
/// aggregates them in suite order.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> VerificationReport {
    match suite {
        Suite::Theta => theta_suite(cfg),
        Suite::Coefficients => coefficients_suite(cfg),
        Suite::Elliptic => elliptic_suite(cfg),
        Suite::Zeta => zeta_suite(cfg),
        Suite::Heat => heat_suite(cfg),
        Suite::Nls => nls_suite(cfg),
        Suite::All => {
            let reports: Vec<VerificationReport> = std::thread::scope(|s| {
                let handles: Vec<_> = Suite::INDIVIDUAL.iter().map(|&x| s.spawn(move || run_suite(x, cfg))).collect();
                handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
            });
            aggregate_reports(&reports)
        }
    }
}
