//! The verification ladder: deterministic operator identities first, then
//! per-sample identities, then Monte Carlo moment checks.
//!
//! Numerical failures never abort the ladder; each rung is reported with its
//! value and threshold. Errors while building the operators abort with the
//! underlying error.

use serde::Serialize;

use crate::error::Result;
use crate::exec::Execution;
use crate::foliation::Foliation;
use crate::graph::Graph;
use crate::hadamard::{verify_hadamard_identity, verify_isometry, HadamardFamily};
use crate::operators::{green_variation, harmonic_residual};
use crate::rng::{domain, GaussianStream};
use crate::sampling::{
    self, basis_independence, brownian_check, dgff_covariance, increment_independence,
    markov_property, oracle_covariance, random_test_function, sweep_average_check, wnf_covariance,
    MonteCarlo,
};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: usize,
    /// Operator identities.
    pub tol_exact: f64,
    /// Per-sample and Pythagoras identities, and Green monotonicity.
    pub tol_sample: f64,
    /// Invertibility of `Q_N`.
    pub tol_injective: f64,
    pub z_max: f64,
    pub exec: Execution,
    /// Build clusters up to this index only.
    pub cluster: Option<usize>,
    /// Skip the statistical rungs.
    pub monte_carlo: bool,
    pub identity_samples: usize,
    pub test_functions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 100_000,
            tol_exact: 1e-10,
            tol_sample: 1e-12,
            tol_injective: 1e-8,
            z_max: 5.0,
            exec: Execution::default(),
            cluster: None,
            monte_carlo: true,
            identity_samples: 100,
            test_functions: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Residual,
    ZScore,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub kind: CheckKind,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn residual(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            kind: CheckKind::Residual,
            value,
            threshold,
            passed: value <= threshold,
            detail: None,
        }
    }

    fn z(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            kind: CheckKind::ZScore,
            ..Self::residual(name, value, threshold)
        }
    }

    fn failing(mut self, detail: impl Into<String>) -> Self {
        self.passed = false;
        self.detail = Some(detail.into());
        self
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub depth: usize,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Build the operators and run the ladder.
pub fn verify(graph: &Graph, foliation: &Foliation, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let top = cfg.cluster.unwrap_or(foliation.depth());
    let fam = HadamardFamily::build_to(graph, foliation, top, cfg.exec)?;
    Ok(verify_family(&fam, cfg))
}

fn max_rel(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// Run the ladder on already built operators.
pub fn verify_family(fam: &HadamardFamily, cfg: &VerifyConfig) -> VerifyReport {
    let mut checks = deterministic_checks(fam, cfg);
    checks.extend(sample_identity_checks(fam, cfg));
    if cfg.monte_carlo {
        checks.extend(monte_carlo_checks(fam, cfg));
    }
    let all_passed = checks.iter().all(|c| c.passed);
    VerifyReport {
        schema: SCHEMA,
        depth: fam.depth(),
        seed: cfg.seed,
        trials: cfg.trials,
        checks,
        all_passed,
    }
}

fn deterministic_checks(fam: &HadamardFamily, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let ops = &fam.operators;
    let tol = cfg.tol_exact;
    let mut out = Vec::new();

    out.push(CheckResult::residual(
        "green_inverse",
        max_rel(ops.iter().map(|o| o.inverse_residual().relative())),
        tol,
    ));
    out.push(CheckResult::residual(
        "green_symmetry",
        max_rel(ops.iter().map(|o| o.symmetry_residual().relative())),
        tol,
    ));

    let bounds = max_rel(ops.iter().map(|o| o.poisson_bounds(tol).0));
    let harmonic = max_rel(
        ops.iter()
            .map(|o| o.poisson_harmonic_residual(&fam.graph).relative()),
    );
    let min_row = ops
        .iter()
        .map(|o| o.poisson_bounds(tol).1)
        .fold(f64::INFINITY, f64::min);
    out.push(
        CheckResult::residual("poisson_bounds", bounds.max(harmonic), tol).with_detail(format!(
            "smallest row sum {min_row:.6e}, harmonic residual {harmonic:.3e}"
        )),
    );

    let mut variation: f64 = 0.0;
    let mut monotonicity: f64 = 0.0;
    for n in 1..ops.len() {
        let (res, min_increase) = green_variation(&ops[n], &ops[n - 1]);
        variation = variation.max(res.relative());
        monotonicity = monotonicity.max((-min_increase).max(0.0) / res.scale.max(1.0));
    }
    out.push(CheckResult::residual("green_variation", variation, tol));
    out.push(CheckResult::residual(
        "green_monotonicity",
        monotonicity,
        cfg.tol_sample,
    ));

    out.push(CheckResult::residual(
        "hadamard_identity",
        max_rel(
            (0..=fam.depth()).map(|n| verify_hadamard_identity(&fam.q[n], fam.green(n)).relative()),
        ),
        tol,
    ));
    out.push(CheckResult::residual(
        "isometry",
        max_rel(
            (0..=fam.depth())
                .map(|n| verify_isometry(&fam.q[n], &fam.graph, fam.cluster(n)).relative()),
        ),
        tol,
    ));
    out.push(CheckResult::residual(
        "layer_sqrt",
        fam.sqrt_residual().relative(),
        tol,
    ));
    let (block, kernel_harmonic) = fam.kernel_structure();
    out.push(CheckResult::residual(
        "kernel_structure",
        block.max(kernel_harmonic.relative()),
        tol,
    ));
    out.push(CheckResult::residual("q_stability", fam.q_stability(), tol));
    out.push(injectivity(fam, cfg));
    out
}

/// Recover a random coefficient vector from its image under `Q_N`.
fn injectivity(fam: &HadamardFamily, cfg: &VerifyConfig) -> CheckResult {
    let top = fam.depth();
    let s = GaussianStream::new(cfg.seed).with_domain(domain::TEST_FUNCTIONS);
    let e: Vec<f64> = (0..fam.dim(top))
        .map(|i| s.normal(i as u64, u64::MAX))
        .collect();
    let b = fam.q[top].apply(&e);
    let check = CheckResult::residual("q_injectivity", f64::INFINITY, cfg.tol_injective);
    match fam.solve_q(top, &b) {
        Ok(f) => {
            let scale = e.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = max_rel(f.iter().zip(&e).map(|(a, b)| (a - b).abs())) / scale;
            CheckResult::residual("q_injectivity", err, cfg.tol_injective)
        }
        Err(err) => check.failing(err.to_string()),
    }
}

fn sample_identity_checks(fam: &HadamardFamily, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let stream = GaussianStream::new(cfg.seed);
    let mut identity: f64 = 0.0;
    let mut harmonic: f64 = 0.0;
    let pi_max = fam.graph.pis().iter().fold(1.0f64, |m, &p| m.max(p));
    for t in 0..cfg.identity_samples as u64 {
        let phi = sampling::white_noise_local(fam, &stream, t);
        for n in 1..=fam.depth() {
            let inc = sampling::increment_local(fam, &phi, n);
            let ext = sampling::layer_noise_extension_local(fam, &phi, n);
            let scale = inc.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            identity =
                identity.max(max_rel(inc.iter().zip(&ext).map(|(a, b)| (a - b).abs())) / scale);
            let top = fam.cluster(n).top_range();
            let h = harmonic_residual(&fam.graph, fam.cluster(n), &inc, 0..top.start);
            harmonic = harmonic.max(h / (pi_max * scale));
        }
    }
    vec![
        CheckResult::residual("increment_identity", identity, cfg.tol_sample),
        CheckResult::residual("increment_harmonicity", harmonic, cfg.tol_exact),
    ]
}

fn monte_carlo_checks(fam: &HadamardFamily, cfg: &VerifyConfig) -> Vec<CheckResult> {
    let mc = MonteCarlo::new(cfg.seed, cfg.trials, cfg.exec);
    let z = cfg.z_max;
    let top = fam.depth();
    let mut out = Vec::new();

    out.push(CheckResult::z(
        "wnf_covariance",
        wnf_covariance(fam, &mc).worst_z(),
        z,
    ));
    out.push(match basis_independence(fam, &mc) {
        Ok(r) => CheckResult::z("wnf_basis_independence", r.worst_z(), z),
        Err(e) => CheckResult::z("wnf_basis_independence", f64::INFINITY, z).failing(e.to_string()),
    });

    let (joint, dgff) = dgff_covariance(fam, &mc);
    out.push(CheckResult::z("dgff_covariance", dgff.worst_z(), z));

    let mut own: f64 = 0.0;
    let mut agree: f64 = 0.0;
    let mut oracle_error = None;
    for n in 0..=top {
        match oracle_covariance(fam, n, &mc, Some(&joint)) {
            Ok((a, b)) => {
                own = own.max(a.max_abs_z);
                agree = agree.max(b.map_or(0.0, |r| r.max_abs_z));
            }
            Err(e) => oracle_error = Some(e.to_string()),
        }
    }
    let mut oracle = CheckResult::z("oracle_covariance", own, z);
    let mut agreement = CheckResult::z("oracle_agreement", agree, z);
    if let Some(e) = oracle_error {
        oracle = oracle.failing(e.clone());
        agreement = agreement.failing(e);
    }
    out.push(oracle);
    out.push(agreement);

    out.push(CheckResult::z(
        "increment_independence",
        increment_independence(fam, &mc).max_abs_z,
        z,
    ));
    let markov = (0..top)
        .filter_map(|m| markov_property(fam, m, &mc).ok())
        .map(|r| r.max_abs_z)
        .fold(0.0, f64::max);
    out.push(CheckResult::z("markov_property", markov, z));

    let fs: Vec<_> = (0..cfg.test_functions.max(1) as u64)
        .map(|k| random_test_function(fam, top, &mc.stream, k))
        .collect();
    // Pythagoras over every test function; the covariance is sampled for the
    // first one only.
    let mut pythagoras: f64 = 0.0;
    let mut monotone = true;
    let quick = MonteCarlo { trials: 0, ..mc };
    let mut first = None;
    for (k, f) in fs.iter().enumerate() {
        let run = if k == 0 { &mc } else { &quick };
        match brownian_check(fam, f, run) {
            Ok(r) => {
                pythagoras = pythagoras.max(r.pythagoras_residual);
                monotone &= r.monotone;
                if k == 0 {
                    first = Some(r);
                }
            }
            Err(e) => {
                pythagoras = f64::INFINITY;
                monotone = false;
                if k == 0 {
                    out.push(
                        CheckResult::z("brownian_covariance", f64::INFINITY, z)
                            .failing(e.to_string()),
                    );
                }
            }
        }
    }
    let mut py = CheckResult::residual("pythagoras", pythagoras, cfg.tol_sample);
    if !monotone {
        py = py.failing("variance targets are not monotone in n");
    }
    out.push(py);
    if let Some(r) = first {
        out.push(CheckResult::z(
            "brownian_covariance",
            r.covariance.max_abs_z,
            z,
        ));
    }

    let n1 = top.min(1);
    let f = random_test_function(fam, n1, &mc.stream, cfg.test_functions as u64);
    match sweep_average_check(fam, &f, n1, top, cfg.identity_samples, &mc) {
        Ok(r) => {
            out.push(CheckResult::residual(
                "sweep_identity",
                r.identity_residual.unwrap_or(0.0),
                cfg.tol_exact,
            ));
            out.push(CheckResult::z(
                "sweep_covariance",
                r.covariance.max_abs_z,
                z,
            ));
        }
        Err(e) => {
            out.push(
                CheckResult::residual("sweep_identity", f64::INFINITY, cfg.tol_exact)
                    .failing(e.to_string()),
            );
            out.push(CheckResult::z("sweep_covariance", f64::INFINITY, z).failing(e.to_string()));
        }
    }
    out
}

/// Rung names in ladder order.
pub const LADDER: &[&str] = &[
    "green_inverse",
    "green_symmetry",
    "poisson_bounds",
    "green_variation",
    "green_monotonicity",
    "hadamard_identity",
    "isometry",
    "layer_sqrt",
    "kernel_structure",
    "q_stability",
    "q_injectivity",
    "increment_identity",
    "increment_harmonicity",
    "wnf_covariance",
    "wnf_basis_independence",
    "dgff_covariance",
    "oracle_covariance",
    "oracle_agreement",
    "increment_independence",
    "markov_property",
    "pythagoras",
    "brownian_covariance",
    "sweep_identity",
    "sweep_covariance",
];
