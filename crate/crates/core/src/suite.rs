//! Batch verification suites driven by a JSON run configuration, each
//! producing a [`Report`] of check records.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bethe::{
    diagonal_onshell_check, find_all_solutions, residual, spectrum_match, FindOptions, MonicPolynomial, ResidualForm,
    SolutionSet, SolveOptions,
};
use crate::error::{Error, Result};
use crate::izergin::{verify_izergin_properties, IzerginSuiteConfig};
use crate::oracle::{gauge_independence, verify_oracle, Chain, Side, DEFAULT_ORACLE_CAP, SPECTRUM_CAP};
use crate::params::{random_gauge, Model, ModelParams, TwistMatrix};
use crate::rational::{omega_inverse_check, omega_matrix, verify_sum_identities};
use crate::report::{all_pass, merge_by_name, Check, CheckRecord};
use crate::sampling::{in_disk, stream};
use crate::scalar::{c64, cpowi, C};
use crate::scalar_products::{
    appendix_checks, frozen_point, gamma_weights, generic_points, jacobian_matrix, negative_control, norm_squared,
    onshell_izergin_report, orthogonality_check, random_direction, richardson, row_combination_rhs, sp_det_izergin,
    sp_det_jacobian, sp_partition_sum, OnShellRoots, SpTolerances,
};

type C64 = C<f64>;

/// Suites runnable from a [`RunConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    VerifyIzergin,
    VerifyOracle,
    VerifyAppendices,
    SolveBethe,
    ScalarProduct,
    Norm,
    SpectrumCheck,
    /// Every suite above in sequence, with record names prefixed by the suite.
    VerifyAll,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::VerifyIzergin,
        Command::VerifyOracle,
        Command::VerifyAppendices,
        Command::SolveBethe,
        Command::ScalarProduct,
        Command::Norm,
        Command::SpectrumCheck,
        Command::VerifyAll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::VerifyIzergin => "verify-izergin",
            Command::VerifyOracle => "verify-oracle",
            Command::VerifyAppendices => "verify-appendices",
            Command::SolveBethe => "solve-bethe",
            Command::ScalarProduct => "scalar-product",
            Command::Norm => "norm",
            Command::SpectrumCheck => "spectrum-check",
            Command::VerifyAll => "verify-all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

/// Model block of the configuration. `rho1` defaults to a seeded random gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub c: C64,
    pub theta: Vec<C64>,
    pub kappa_tilde: C64,
    pub kappa: C64,
    pub kappa_plus: C64,
    pub kappa_minus: C64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
}

const SAMPLE_THETA: [(f64, f64); 8] = [
    (0.3, 0.1),
    (-0.4, 0.2),
    (0.9, -0.3),
    (-0.1, -0.6),
    (0.5, 0.7),
    (-0.8, -0.2),
    (0.2, -0.9),
    (-0.6, 0.8),
];

impl ModelConfig {
    /// A generic sample instance with `n <= 8` sites and `c = 1`.
    pub fn sample(n: usize) -> Self {
        Self {
            c: c64(1.0, 0.0),
            theta: SAMPLE_THETA.iter().take(n).map(|&(a, b)| c64(a, b)).collect(),
            kappa_tilde: c64(2.0, 0.1),
            kappa: c64(1.0, -0.2),
            kappa_plus: c64(1.0, 0.3),
            kappa_minus: c64(3.0, -0.1),
            rho1: None,
            min_gap: None,
        }
    }

    pub fn twist(&self) -> TwistMatrix<f64> {
        TwistMatrix::new(self.kappa_tilde, self.kappa, self.kappa_plus, self.kappa_minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Oracle algebra, absolute error over the operator scale.
    pub oracle: f64,
    pub izergin_exact: f64,
    pub izergin_limit: f64,
    pub izergin_symmetry: f64,
    /// Newton convergence, `max_j |Y(u_j|u)| / scale`.
    pub newton: f64,
    pub certify: f64,
    /// Every residual form on a certified solution.
    pub bethe_residual: f64,
    /// Bethe eigenvalues against the dense spectrum.
    pub spectrum: f64,
    /// Summation formulas, Omega identities and the partition identities.
    pub appendix: f64,
    pub scalar_products: SpTolerances,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: 1e-10,
            izergin_exact: 1e-9,
            izergin_limit: 1e-4,
            izergin_symmetry: 1e-11,
            newton: 1e-12,
            certify: 1e-8,
            bethe_residual: 1e-8,
            spectrum: 1e-8,
            appendix: 1e-7,
            scalar_products: SpTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest chain handled by the dense oracle.
    pub oracle_sites: usize,
    /// Largest chain whose full transfer-matrix spectrum is computed.
    pub spectrum_sites: usize,
    /// Izergin suite runs all `0 <= n, m <= izergin_max_n`.
    pub izergin_max_n: usize,
    /// Off-shell scalar products run all `0 <= m, n <= partition_max`.
    pub partition_max: usize,
    /// Full coverage `2^N` is required for chains up to this length.
    pub full_coverage_up_to: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            oracle_sites: DEFAULT_ORACLE_CAP,
            spectrum_sites: SPECTRUM_CAP,
            izergin_max_n: 6,
            partition_max: 3,
            full_coverage_up_to: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Random draws per off-shell sweep entry.
    pub draws: usize,
    /// Random `v` per certified solution in on-shell comparisons.
    pub onshell_draws: usize,
    pub izergin_draws: usize,
    pub oracle_draws: usize,
    /// Spectral points used to certify each Bethe solution.
    pub z_samples: usize,
    /// Spectral points for the on-shell Izergin identities.
    pub identity_points: usize,
    pub starts_per_state: usize,
    /// Search rounds repelled from the solutions already found.
    pub deflation_rounds: usize,
    pub negative_control_draws: usize,
    /// Offset for the frozen-point extrapolation.
    pub frozen_eps: f64,
    /// Offset for the `v -> u` norm limit.
    pub norm_eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<C64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<C64>>,
}

impl Default for Inputs {
    fn default() -> Self {
        Self {
            draws: 20,
            onshell_draws: 10,
            izergin_draws: 50,
            oracle_draws: 5,
            z_samples: 3,
            identity_points: 7,
            starts_per_state: 64,
            deflation_rounds: 4,
            negative_control_draws: 10,
            frozen_eps: 1e-3,
            norm_eps: 1e-5,
            u: None,
            v: None,
        }
    }
}

/// Everything a suite run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub inputs: Inputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::sample(3)
    }
}

impl RunConfig {
    pub fn sample(n: usize) -> Self {
        Self {
            model: ModelConfig::sample(n),
            seed: 0,
            tolerances: Tolerances::default(),
            caps: Caps::default(),
            inputs: Inputs::default(),
        }
    }

    /// Canonical pretty JSON; parsing it back and re-emitting is byte-identical.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// SHA-256 of the compact canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The gauge in use: the configured one or a seeded random choice.
    pub fn rho1(&self) -> Result<C64> {
        match self.model.rho1 {
            Some(r) => Ok(r),
            None => random_gauge(&self.model.twist(), &mut stream(self.seed, &[0x6a06e])),
        }
    }

    /// Builds and validates the model.
    pub fn build_model(&self) -> Result<Model<f64>> {
        let m = &self.model;
        let params = ModelParams {
            c: m.c,
            theta: m.theta.clone(),
            twist: m.twist(),
            rho1: self.rho1()?,
            min_gap: m.min_gap,
        };
        Model::new(params)
    }

    /// Validates the model and the sizes against the caps.
    pub fn validate(&self) -> Result<Model<f64>> {
        let model = self.build_model()?;
        let n = model.n();
        if n > self.caps.oracle_sites {
            return Err(Error::CapExceeded {
                what: "chain length",
                value: n,
                cap: self.caps.oracle_sites,
            });
        }
        for (name, set) in [("u", &self.inputs.u), ("v", &self.inputs.v)] {
            if let Some(s) = set {
                if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidParams(format!("inputs.{name} has a non-finite entry")));
                }
            }
        }
        Ok(model)
    }
}

/// Outcome of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config_digest: String,
    /// True iff every record passes.
    pub pass: bool,
    pub records: Vec<CheckRecord>,
    /// Command-specific results (solutions, evaluated values).
    pub data: Value,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Pretty JSON with the timing field zeroed, for reproducibility comparisons.
    pub fn to_json_without_timing(&self) -> String {
        Report {
            wall_time_s: 0.0,
            ..self.clone()
        }
        .to_json()
    }
}

/// Runs `command` on the current rayon pool. Errors are configuration
/// problems; failed checks are reported in the records.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let model = cfg.validate()?;
    let (records, data) = dispatch(command, cfg, &model)?;
    Ok(Report {
        command: command.to_string(),
        config_digest: cfg.digest(),
        pass: all_pass(&records),
        records,
        data,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs `command` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn run_with_threads(command: Command, cfg: &RunConfig, threads: Option<usize>) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(command, cfg))
}

type Outcome = (Vec<CheckRecord>, Value);

fn dispatch(command: Command, cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    match command {
        Command::VerifyIzergin => izergin_suite(cfg),
        Command::VerifyOracle => oracle_suite(cfg, model),
        Command::VerifyAppendices => appendix_suite(cfg, model),
        Command::SolveBethe => solve_suite(cfg, model),
        Command::ScalarProduct => scalar_product_suite(cfg, model),
        Command::Norm => norm_suite(cfg, model),
        Command::SpectrumCheck => spectrum_suite(cfg, model),
        Command::VerifyAll => {
            let mut records = Vec::new();
            let mut data = serde_json::Map::new();
            for c in Command::ALL.into_iter().filter(|&c| c != Command::VerifyAll) {
                let (recs, d) = dispatch(c, cfg, model)?;
                records.extend(recs.into_iter().map(|r| CheckRecord {
                    name: format!("{c}/{}", r.name),
                    ..r
                }));
                data.insert(c.to_string(), d);
            }
            Ok((records, Value::Object(data)))
        }
    }
}

fn izergin_suite(cfg: &RunConfig) -> Result<Outcome> {
    let t = &cfg.tolerances;
    let suite = IzerginSuiteConfig {
        seed: cfg.seed,
        max_n: cfg.caps.izergin_max_n,
        draws: cfg.inputs.izergin_draws,
        exact_tol: t.izergin_exact,
        limit_tol: t.izergin_limit,
        symmetry_tol: t.izergin_symmetry,
    };
    let records = verify_izergin_properties(&suite)?;
    Ok((records, json!({ "max_n": suite.max_n, "draws": suite.draws })))
}

fn oracle_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let mut records = verify_oracle(model, cfg.seed, cfg.inputs.oracle_draws, cfg.tolerances.oracle)?;
    let mut gauge = Check::new(
        "gauge-independence",
        "(kappa_tilde-rho1) nu11 + (kappa-rho2) nu22 is the same operator for two gauges rho1",
        cfg.tolerances.oracle,
    );
    let mut rng = stream(cfg.seed, &[0x6a06e, 1]);
    let other = random_gauge(model.twist(), &mut rng)?;
    for _ in 0..cfg.inputs.oracle_draws.max(1) {
        let u: C64 = in_disk(&mut rng, 1.0 + model.length_scale());
        if let Some(e) = gauge.guard(gauge_independence(model, other, u)) {
            gauge.bound(e);
        }
    }
    records.push(gauge.finish());
    Ok((records, json!({ "rho1": model.dec().rho1, "other_rho1": other })))
}

fn find_solutions(cfg: &RunConfig, model: &Model<f64>) -> Result<SolutionSet<f64>> {
    let opts = FindOptions {
        seed: cfg.seed,
        starts_per_state: cfg.inputs.starts_per_state,
        deflation_rounds: cfg.inputs.deflation_rounds,
        solve: SolveOptions {
            tol: cfg.tolerances.newton,
            certify_tol: cfg.tolerances.certify,
            z_samples: cfg.inputs.z_samples,
            seed: cfg.seed,
            ..SolveOptions::default()
        },
        ..FindOptions::default()
    };
    find_all_solutions(model, &opts)
}

fn on_shell_sets(cfg: &RunConfig, model: &Model<f64>, set: &SolutionSet<f64>) -> Vec<OnShellRoots<f64>> {
    set.solutions
        .iter()
        .filter_map(|s| OnShellRoots::from_solution(model, s, cfg.tolerances.scalar_products.on_shell).ok())
        .collect()
}

/// A record that fails unless at least one certified solution exists.
fn solutions_found(count: usize) -> CheckRecord {
    let mut ck = Check::new("certified-solutions", "at least one certified Bethe solution", 0.0);
    if count == 0 {
        ck.fail("no certified solution found");
    } else {
        ck.bound(0.0);
        ck.note(format!("{count} certified solution(s)"));
    }
    ck.finish()
}

fn solve_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let n = model.n();
    let t = &cfg.tolerances;
    let set = find_solutions(cfg, model)?;
    let mut records = vec![solutions_found(set.solutions.len())];

    let gated = n <= cfg.caps.full_coverage_up_to;
    let mut cov = Check::new("coverage", "distinct certified solutions = 2^N", 0.0);
    cov.bound(if gated { 1.0 - set.coverage } else { 0.0 });
    cov.note(format!(
        "{} of {} states from {} starts ({} converged){}",
        set.solutions.len(),
        1u64 << n,
        set.starts,
        set.converged_runs,
        if gated { "" } else { "; not gated at this size" }
    ));
    records.push(cov.finish());

    let mut cert = Check::new(
        "certificate",
        "||Tr(z) B(u) - Lambda(z|u) B(u)|| <= tol max(1,|Lambda|) ||B(u)|| at seeded z",
        t.certify,
    );
    for s in &set.solutions {
        cert.bound(s.certificate_error);
    }
    records.push(cert.finish());

    let theta = model.theta().to_vec();
    let c = model.c();
    let mut forms: Vec<(&str, &str, ResidualForm<f64>)> = vec![
        (
            "residual-products",
            "a2 lambda2(u_j) f(u_j,u_j') - a1 lambda1(u_j) f(u_j',u_j) + (rho1+rho2) lambda1 lambda2 g(u_j,u_j') = 0",
            ResidualForm::Products,
        ),
        ("residual-y", "Y(u_j|u) = 0", ResidualForm::Y),
        (
            "residual-theta-weighted",
            "sum over theta_k weighted by f(u,theta_k) = 0",
            ResidualForm::ThetaWeighted,
        ),
        (
            "residual-theta-inverse-weighted",
            "sum over theta_k weighted by 1/f(u,theta_k) = 0",
            ResidualForm::ThetaInverseWeighted,
        ),
        (
            "residual-polynomial-h",
            "polynomial form with p_j(z) = prod_{k != j} (z - theta_k + c)",
            ResidualForm::Polynomial((0..n).map(|j| MonicPolynomial::h_type(&theta, c, j)).collect()),
        ),
        (
            "residual-polynomial-g",
            "polynomial form with p_j(z) = prod_{k != j} (z - theta_k)",
            ResidualForm::Polynomial((0..n).map(|j| MonicPolynomial::g_type(&theta, j)).collect()),
        ),
    ];
    let mut inter = Vec::new();
    for code in 0..(1u32 << n) - 1 {
        let in_a: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
        for j in (0..n).filter(|&j| !in_a[j]) {
            inter.push(MonicPolynomial::interpolating(&theta, c, &in_a, j)?);
        }
    }
    forms.push((
        "residual-polynomial-interpolating",
        "polynomial form with p(z) = prod_{a in A} (z - theta_a + c) prod_{b in B, b != j} (z - theta_b), every split",
        ResidualForm::Polynomial(inter),
    ));
    for (name, anchor, form) in &forms {
        let mut ck = Check::new(*name, *anchor, t.bethe_residual);
        for s in &set.solutions {
            if let Some(r) = ck.guard(residual(model, form, s.roots.values())) {
                ck.bound(r.max_scaled());
            }
        }
        records.push(ck.finish());
    }

    if n <= cfg.caps.spectrum_sites {
        let chain = Chain::new(model)?;
        let mut sp = Check::new("spectrum-match", "Lambda(z|u) is an eigenvalue of Tr(z)", t.spectrum);
        if let Some(e) = sp.guard(spectrum_match(&chain, &set.solutions)) {
            sp.bound(e);
        }
        records.push(sp.finish());
    }
    let data = serde_json::to_value(&set).expect("solutions serialize");
    Ok((records, data))
}

fn spectrum_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let n = model.n();
    if n > cfg.caps.spectrum_sites {
        return Err(Error::CapExceeded {
            what: "chain length for the dense spectrum",
            value: n,
            cap: cfg.caps.spectrum_sites,
        });
    }
    let t = &cfg.tolerances;
    let chain = Chain::new(model)?;
    let set = find_solutions(cfg, model)?;
    let mut records = vec![solutions_found(set.solutions.len())];
    let mut rng = stream(cfg.seed, &[0x5bec]);
    let zs: Vec<C64> = (0..cfg.inputs.z_samples.max(1))
        .map(|_| in_disk(&mut rng, 1.0 + model.length_scale()))
        .collect();

    let mut m = Check::new(
        "eigenvalue-match",
        "Lambda(z|u) is an eigenvalue of Tr(z) at fresh z",
        t.spectrum,
    );
    let mut cover = Check::new(
        "distinct-eigenvalues",
        "distinct solutions give distinct eigenvalues of Tr(z); 2^N are found for small N",
        0.0,
    );
    let mut eig_data = Vec::new();
    for (zi, &z) in zs.iter().enumerate() {
        let ev = chain.transfer_matrix(z).eigenvalues();
        let mut used = vec![false; ev.len()];
        let mut lambdas = Vec::new();
        for s in &set.solutions {
            let Some(lam) = m.guard(crate::bethe::eigenvalue_lambda(model, z, s.roots.values())) else {
                continue;
            };
            let (k, d) = ev
                .iter()
                .enumerate()
                .map(|(k, &e)| (k, (e - lam).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            m.bound(d / lam.norm().max(1.0));
            if used[k] {
                cover.fail(format!("two solutions share eigenvalue index {k} at z = {z}"));
            }
            used[k] = true;
            lambdas.push(lam);
        }
        if zi == 0 {
            eig_data.push(json!({ "z": z, "dense": ev, "bethe": lambdas }));
        }
    }
    let gated = n <= cfg.caps.full_coverage_up_to;
    cover.bound(if gated { 1.0 - set.coverage } else { 0.0 });
    cover.note(format!("{} of {} eigenvalues matched", set.solutions.len(), 1u64 << n));
    records.push(m.finish());
    records.push(cover.finish());
    Ok((records, json!({ "samples": eig_data, "coverage": set.coverage })))
}

fn appendix_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let n = model.n();
    let t = &cfg.tolerances;
    let kern = model.kern();
    let theta = model.theta();
    let mut rng = stream(cfg.seed, &[0xa99e]);
    let mut records = Vec::new();

    let mut sums = Check::new(
        "summation-formulas",
        "sum_j g(u_j,v_k)/h(u_j,v_k) gamma_j = h(v,v_k)/h(u,v_k); sum_j g(v_k,u_j)/h(v_k,u_j) gamma_j = -h(v_k,v)/h(v_k,u); sum_j g(v_k,u_j) gamma_j = -1; gamma_j = g(u_j,u_j')/g(u_j,v)",
        t.appendix,
    );
    let mut rows = Check::new("omega-row-sums", "sum_j Omega_ij(x) = 1", t.appendix);
    let mut inv = Check::new(
        "omega-inverse",
        "Omega(x) times Omega(x) with c -> -c is the identity",
        t.appendix,
    );
    for d in 0..cfg.inputs.draws {
        let size = 1 + d % (n + 2);
        let u = generic_points(model, &mut rng, size, &[]);
        let v = generic_points(model, &mut rng, size, &u);
        let x: Vec<C64> = if d == 0 {
            theta.to_vec()
        } else {
            generic_points(model, &mut rng, size, &[])
        };
        for k in 0..size {
            if let Some(e) = sums.guard(verify_sum_identities(kern, &u, &v, k, &x)) {
                sums.bound(e.g_over_h_left);
                sums.bound(e.g_over_h_right);
                sums.bound(e.g_sum);
                rows.bound(e.omega_row_sums);
            }
        }
        if let Some(e) = inv.guard(omega_inverse_check(kern, &x)) {
            inv.bound(e);
        }
    }
    if let Some(om) = rows.guard(omega_matrix(kern, theta)) {
        for i in 0..n {
            let s: C64 = om.row(i).iter().copied().sum();
            rows.bound((s - c64(1.0, 0.0)).norm());
        }
    }
    records.extend([sums.finish(), rows.finish(), inv.finish()]);

    let set = find_solutions(cfg, model)?;
    let sols = on_shell_sets(cfg, model, &set);
    records.push(solutions_found(sols.len()));
    let sp_tol = t.scalar_products;
    let app_tol = SpTolerances {
        identity: t.appendix,
        agreement: t.appendix,
        ..t.scalar_products
    };
    let generic_u = generic_points(model, &mut rng, n, &[]);
    let gamma = in_disk::<f64>(&mut rng, 1.5) + c64(0.5, 0.0);
    let zs: Vec<C64> = (0..cfg.inputs.identity_points)
        .map(|_| in_disk(&mut rng, 1.0 + model.length_scale()))
        .collect();
    let mut merged = Vec::new();
    for u in &sols {
        merge_by_name(&mut merged, onshell_izergin_report(model, u, &zs, &sp_tol)?);
        let v = generic_points(model, &mut rng, n, u.roots());
        for code in 0..1u32 << n {
            let in_a: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
            merge_by_name(
                &mut merged,
                appendix_checks(model, u, &in_a, &generic_u, gamma, &v, &app_tol)?,
            );
        }
    }
    records.extend(merged);
    records.push(row_combination(model, &sols, &mut rng, t.appendix));
    if n >= 2 {
        records.push(diagonal_analog(cfg, model, &zs)?);
    }
    Ok((records, json!({ "solutions": sols.len(), "identity_points": zs })))
}

/// `sum_j gamma_j M(u_j, v_k)` vanishes between distinct on-shell sets and
/// equals `-Y(v_k|v)` for generic `v`.
fn row_combination(
    model: &Model<f64>,
    sols: &[OnShellRoots<f64>],
    rng: &mut crate::sampling::SeededRng,
    tol: f64,
) -> CheckRecord {
    let mut ck = Check::new(
        "row-combination",
        "sum_j gamma_j M(u_j,v_k) = -Y(v_k|v), gamma_j = g(u_j,u_j')/g(u_j,v); zero for on-shell v",
        tol,
    );
    let n = model.n();
    for (i, u) in sols.iter().enumerate() {
        let partner = sols.get((i + 1) % sols.len()).filter(|_| sols.len() > 1);
        let generic = generic_points(model, rng, n, u.roots());
        let targets = partner
            .map(|p| (p.roots().to_vec(), true))
            .into_iter()
            .chain([(generic, false)]);
        for (v, on_shell) in targets {
            let Some(mm) = ck.guard(jacobian_matrix(model, u, &v)) else {
                continue;
            };
            let Some(gam) = ck.guard(gamma_weights(model, u.roots(), &v)) else {
                continue;
            };
            let scale = mm.entries.max_abs().max(1.0) * gam.iter().fold(1.0f64, |a, g| a.max(g.norm()));
            for k in 0..n {
                let s: C64 = (0..n).map(|j| gam[j] * mm.entries[(j, k)]).sum();
                if on_shell {
                    ck.compare_at(s, C64::zero(), scale);
                } else if let Some(r) = ck.guard(row_combination_rhs(model, &v, k)) {
                    ck.compare_at(s, r, scale);
                }
            }
        }
    }
    ck.finish()
}

/// The diagonal-twist analog with one root on the first two sites.
fn diagonal_analog(cfg: &RunConfig, model: &Model<f64>, zs: &[C64]) -> Result<CheckRecord> {
    let mut ck = Check::new(
        "diagonal-analog",
        "diagonal twist, M = 1, N = 2: K^(z)_{M,N}(u|theta) = prod_i (d_i - z), d_i in {1, kappa/kappa_tilde}",
        cfg.tolerances.scalar_products.identity,
    );
    let sub = model.with_theta(model.theta()[..2].to_vec())?;
    let mut rng = stream(cfg.seed, &[0xd1a9]);
    for attempt in 0..32 {
        let start: C64 = in_disk(&mut rng, sub.length_scale());
        match diagonal_onshell_check(&sub, &[start], zs) {
            Ok(rep) => {
                ck.bound(rep.classification_error);
                for (_, e) in &rep.errors {
                    ck.bound(*e);
                }
                ck.note(format!("root {} after {} restart(s)", rep.roots[0], attempt));
                return Ok(ck.finish());
            }
            Err(_) => continue,
        }
    }
    ck.fail("no diagonal-twist root found from 32 starts");
    Ok(ck.finish())
}

fn scalar_product_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    match &cfg.inputs.u {
        Some(u) => scalar_product_given(cfg, model, u),
        None => scalar_product_sweep(cfg, model),
    }
}

const SP_ORACLE: &str = "<0| nu21(v) nu12(u) |0> on the dense 2^N space";

fn scalar_product_given(cfg: &RunConfig, model: &Model<f64>, u: &[C64]) -> Result<Outcome> {
    let t = &cfg.tolerances.scalar_products;
    let chain = Chain::new(model)?;
    let v = match &cfg.inputs.v {
        Some(v) => v.clone(),
        None => generic_points(model, &mut stream(cfg.seed, &[0x5e1]), u.len(), u),
    };
    let oracle = chain.scalar_product(&v, u);
    let mut records = Vec::new();
    let mut part = Check::new("partition-sum-vs-oracle", SP_ORACLE, t.partition);
    let ps = part.guard(sp_partition_sum(model, &v, u));
    if let Some(p) = ps {
        part.compare(p, oracle);
    }
    records.push(part.finish());
    let mut data = json!({ "v": v, "oracle": oracle, "partition_sum": ps });

    let mut shell = Check::new("on-shell", "max_j |Y(u_j|u)| <= tol scale", t.on_shell);
    let on = shell.guard(OnShellRoots::new(model, u, t.on_shell));
    if let Some(r) = &on {
        shell.bound(r.residual());
    }
    records.push(shell.finish());
    if let Some(r) = on {
        if v.len() != u.len() {
            return Err(Error::Dimension(format!(
                "determinant formulas need |v| = |u| = {}, got |v| = {}",
                u.len(),
                v.len()
            )));
        }
        let dj = sp_det_jacobian(model, &v, &r);
        let di = sp_det_izergin(model, &v, &r);
        let mut cj = Check::new("det-jacobian-vs-oracle", SP_ORACLE, t.agreement);
        let mut ci = Check::new("det-izergin-vs-oracle", SP_ORACLE, t.agreement);
        let mut cx = Check::new(
            "det-jacobian-vs-det-izergin",
            "Jacobian determinant = double modified Izergin determinant on-shell",
            t.agreement,
        );
        let (dj, di) = (cj.guard(dj), ci.guard(di));
        if let Some(x) = dj {
            cj.compare(x, oracle);
        }
        if let Some(y) = di {
            ci.compare(y, oracle);
        }
        match (dj, di) {
            (Some(x), Some(y)) => {
                cx.compare(x, y);
            }
            _ => cx.fail("a determinant path failed"),
        }
        records.extend([cj.finish(), ci.finish(), cx.finish()]);
        data["det_jacobian"] = json!(dj);
        data["det_izergin"] = json!(di);
    }
    Ok((records, data))
}

fn scalar_product_sweep(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let t = &cfg.tolerances.scalar_products;
    let n = model.n();
    let chain = Chain::new(model)?;
    let tw = model.twist();
    let mut rng = stream(cfg.seed, &[0x5e2]);
    let mut records = Vec::new();

    let mut part = Check::new("partition-sum-vs-oracle", SP_ORACLE, t.partition);
    let mut sym = Check::new(
        "symmetry-relation",
        "S_{m,n}(v|u) = (kappa_minus/kappa_plus)^(m-n) S_{n,m}(u|v)",
        t.partition,
    );
    let pmax = cfg.caps.partition_max;
    for m in 0..=pmax {
        for k in 0..=pmax {
            for _ in 0..cfg.inputs.draws {
                let v = generic_points(model, &mut rng, m, &[]);
                let u = generic_points(model, &mut rng, k, &v);
                let Some(s) = part.guard(sp_partition_sum(model, &v, &u)) else {
                    continue;
                };
                part.compare(s, chain.scalar_product(&v, &u));
                if m != k {
                    if let Some(r) = sym.guard(sp_partition_sum(model, &u, &v)) {
                        sym.compare(s, r * cpowi(tw.kappa_minus / tw.kappa_plus, m as i64 - k as i64));
                    }
                }
            }
        }
    }
    records.extend([part.finish(), sym.finish()]);

    let set = find_solutions(cfg, model)?;
    let sols = on_shell_sets(cfg, model, &set);
    records.push(solutions_found(sols.len()));
    let mut cj = Check::new("det-jacobian-vs-oracle", SP_ORACLE, t.agreement);
    let mut ci = Check::new("det-izergin-vs-oracle", SP_ORACLE, t.agreement);
    let mut cx = Check::new(
        "det-jacobian-vs-det-izergin",
        "Jacobian determinant = double modified Izergin determinant on-shell",
        t.agreement,
    );
    let mut fo = Check::new(
        "frozen-point-oracle",
        "S(v|u) at v = {theta_A, theta_B - c} = (-1)^n_B mu^N alpha^(-n_A) lambda2(u) lambda2(theta_B - c) lambda1(theta_A) f(u,theta_A) K^(zeta)(u|theta) / f(theta_A,theta_B)",
        t.agreement,
    );
    let mut fl = Check::new(
        "frozen-point-limit",
        "double-Izergin formula extrapolated to v = {theta_A, theta_B - c} matches the closed form",
        t.limit,
    );
    for u in &sols {
        for _ in 0..cfg.inputs.onshell_draws {
            let v = generic_points(model, &mut rng, n, u.roots());
            let o = chain.scalar_product(&v, u.roots());
            let dj = cj.guard(sp_det_jacobian(model, &v, u));
            let di = ci.guard(sp_det_izergin(model, &v, u));
            if let Some(x) = dj {
                cj.compare(x, o);
            }
            if let Some(y) = di {
                ci.compare(y, o);
            }
            if let (Some(x), Some(y)) = (dj, di) {
                cx.compare(x, y);
            }
        }
        for code in 0..1u32 << n {
            let in_a: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
            if let Some(fp) = fl.guard(frozen_point(model, u, &in_a, cfg.inputs.frozen_eps, Some(&chain))) {
                fl.compare(fp.extrapolated, fp.closed_form);
                if let Some(o) = fp.oracle {
                    fo.compare(o, fp.closed_form);
                }
            }
        }
    }
    records.extend([cj.finish(), ci.finish(), cx.finish(), fo.finish(), fl.finish()]);

    let draws = cfg.inputs.negative_control_draws;
    let (hit, total) = negative_control(model, &chain, cfg.seed, draws, t.negative_control)?;
    let mut neg = Check::new(
        "negative-control",
        "off-shell u: determinant formula misses the oracle by more than the threshold in at least 9 of 10 draws",
        0.1,
    );
    neg.bound(if total == 0 {
        1.0
    } else {
        1.0 - hit as f64 / total as f64
    });
    neg.note(format!("{hit} of {total} off-shell draws detected"));
    records.push(neg.finish());
    Ok((
        records,
        json!({ "solutions": sols.len(), "negative_control": [hit, total] }),
    ))
}

fn norm_suite(cfg: &RunConfig, model: &Model<f64>) -> Result<Outcome> {
    let t = &cfg.tolerances.scalar_products;
    let n = model.n();
    let chain = Chain::new(model)?;
    let mut records = Vec::new();
    let sols = match &cfg.inputs.u {
        Some(u) => {
            let mut shell = Check::new("on-shell", "max_j |Y(u_j|u)| <= tol scale", t.on_shell);
            let on = shell.guard(OnShellRoots::new(model, u, t.on_shell));
            if let Some(r) = &on {
                shell.bound(r.residual());
            }
            records.push(shell.finish());
            on.into_iter().collect()
        }
        None => {
            let set = find_solutions(cfg, model)?;
            let sols = on_shell_sets(cfg, model, &set);
            records.push(solutions_found(sols.len()));
            sols
        }
    };
    let mut vs = Check::new("norm-vs-oracle", "<0| nu21(u) nu12(u) |0> = norm formula", t.agreement);
    let mut lim = Check::new(
        "norm-vs-limit",
        "double-Izergin formula at v = u + eps d tends to the norm as eps -> 0",
        t.limit,
    );
    let mut rng = stream(cfg.seed, &[0x90e]);
    let mut values = Vec::new();
    for u in &sols {
        let Some(nf) = vs.guard(norm_squared(model, u)) else {
            continue;
        };
        let bra = chain.bethe_vector(u.roots(), Side::Bra);
        let ket = chain.bethe_vector(u.roots(), Side::Ket);
        vs.compare(nf, crate::linalg::dot(&bra.data, &ket.data));
        let dir = random_direction::<f64>(&mut rng, n);
        let l = richardson(cfg.inputs.norm_eps, |e| {
            let v: Vec<C64> = u.roots().iter().zip(&dir).map(|(&a, &d)| a + d * e).collect();
            sp_det_izergin(model, &v, u)
        });
        if let Some(l) = lim.guard(l) {
            lim.compare(l, nf);
        }
        values.push(json!({ "roots": u.roots(), "norm": nf }));
    }
    records.extend([vs.finish(), lim.finish()]);
    if sols.len() >= 2 {
        let g = orthogonality_check(model, &chain, &sols)?;
        let mut off = Check::new(
            "gram-orthogonality",
            "<0| nu21(u) nu12(w) |0> = 0 for distinct on-shell u, w (relative to the diagonal)",
            t.orthogonality,
        );
        off.bound(g.max_off_diagonal);
        off.note(format!("{} x {} Gram matrix", g.gram.rows(), g.gram.cols()));
        let mut diag = Check::new("gram-diagonal-vs-norm", "Gram diagonal = norm formula", t.agreement);
        diag.bound(g.max_norm_error);
        records.extend([off.finish(), diag.finish()]);
    }
    Ok((records, json!({ "norms": values })))
}
