//! Acceptance criteria, one line each. Runs as a plain binary so the summary
//! is printed without `--nocapture`; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use twisted_xxx::suite::{run_with_threads, Command, Report, RunConfig};
use twisted_xxx::CheckRecord;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            pass: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what.into());
        }
    }

    fn info(&mut self, what: impl AsRef<str>) {
        if self.pass {
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what.as_ref());
        }
    }

    /// Every named record is present, passing, and no looser than `max_tol`.
    fn records(&mut self, label: &str, report: &Report, names: &[&str], max_tol: f64) {
        for name in names {
            match find(report, name) {
                None => self.require(false, format!("{label}: missing record {name}")),
                Some(r) => {
                    self.require(
                        r.pass,
                        format!(
                            "{label}: {name} failed (rel {:.2e}, abs {:.2e})",
                            r.max_rel_err, r.max_abs_err
                        ),
                    );
                    self.require(
                        r.tolerance <= max_tol,
                        format!("{label}: {name} tolerance {:.1e} too loose", r.tolerance),
                    );
                }
            }
        }
    }

    fn all_records(&mut self, label: &str, report: &Report) {
        for r in report.records.iter().filter(|r| !r.pass) {
            self.require(false, format!("{label}: {} failed (rel {:.2e})", r.name, r.max_rel_err));
        }
    }
}

fn find<'a>(report: &'a Report, name: &str) -> Option<&'a CheckRecord> {
    report.records.iter().find(|r| r.name == name)
}

fn worst(report: &Report, names: &[&str]) -> f64 {
    names
        .iter()
        .filter_map(|n| find(report, n))
        .map(|r| r.max_rel_err)
        .fold(0.0, f64::max)
}

struct Runs {
    cache: BTreeMap<(Command, usize, Option<usize>), Result<Report, String>>,
}

impl Runs {
    fn get(&mut self, command: Command, n: usize, threads: Option<usize>) -> Result<&Report, String> {
        self.cache
            .entry((command, n, threads))
            .or_insert_with(|| run_with_threads(command, &RunConfig::sample(n), threads).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| format!("{command} at N={n}: {e}"))
    }
}

fn izergin(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    match runs.get(Command::VerifyIzergin, 3, Some(1)) {
        Err(e) => v.require(false, e),
        Ok(r) => {
            let cfg = RunConfig::sample(3);
            v.require(cfg.caps.izergin_max_n >= 6, "size cap below 6");
            v.require(cfg.inputs.izergin_draws >= 50, "fewer than 50 draws");
            v.records(
                "izergin",
                r,
                &[
                    "shift",
                    "initial-conditions",
                    "kz-reduction",
                    "partition-expansion-v",
                    "partition-expansion-u",
                    "set-exchange",
                    "convolution",
                ],
                1e-9,
            );
            v.records(
                "izergin",
                r,
                &["residue", "paired-limit", "limit-u-infinity", "limit-v-infinity"],
                1e-4,
            );
            v.all_records("izergin", r);
            v.require(r.wall_time_s <= 30.0, format!("took {:.1} s", r.wall_time_s));
            v.info(format!(
                "{} properties, {:.2} s single-threaded",
                r.records.len(),
                r.wall_time_s
            ));
        }
    }
    v
}

fn oracle(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    match runs.get(Command::VerifyOracle, 3, None) {
        Err(e) => v.require(false, e),
        Ok(r) => {
            let names = [
                "rtt-exchange",
                "vacuum-actions",
                "gauged-vacuum-actions",
                "operator-degrees",
                "transfer-two-forms",
                "transfer-commute",
            ];
            v.records("N=3", r, &names, 1e-10);
            v.all_records("N=3", r);
            v.info(format!("worst rel err {:.1e}", worst(r, &names)));
        }
    }
    v
}

fn off_shell(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    let cfg = RunConfig::sample(3);
    v.require(cfg.caps.partition_max >= 3, "partition sizes below 3");
    v.require(cfg.inputs.draws >= 20, "fewer than 20 draws");
    match runs.get(Command::ScalarProduct, 3, None) {
        Err(e) => v.require(false, e),
        Ok(r) => {
            let names = ["partition-sum-vs-oracle", "symmetry-relation"];
            v.records("N=3", r, &names, 1e-8);
            v.info(format!("worst rel err {:.1e}", worst(r, &names)));
        }
    }
    v
}

fn bethe(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    let mut found = Vec::new();
    for n in 1..=3 {
        let label = format!("N={n}");
        match runs.get(Command::SolveBethe, n, None) {
            Err(e) => v.require(false, e),
            Ok(r) => {
                v.records(
                    &label,
                    r,
                    &[
                        "spectrum-match",
                        "residual-products",
                        "residual-y",
                        "residual-theta-weighted",
                        "residual-theta-inverse-weighted",
                        "residual-polynomial-h",
                        "residual-polynomial-g",
                    ],
                    1e-8,
                );
                if n <= 2 {
                    v.records(&label, r, &["coverage"], 0.0);
                }
                v.all_records(&label, r);
                let count = r.data["solutions"].as_array().map_or(0, Vec::len);
                found.push(format!("{count}/{}", 1 << n));
            }
        }
    }
    v.info(format!("solutions {}", found.join(", ")));
    v
}

fn determinants(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    for n in [2, 3] {
        let label = format!("N={n}");
        match runs.get(Command::ScalarProduct, n, None) {
            Err(e) => v.require(false, e),
            Ok(r) => {
                v.records(
                    &label,
                    r,
                    &[
                        "det-jacobian-vs-oracle",
                        "det-izergin-vs-oracle",
                        "det-jacobian-vs-det-izergin",
                        "frozen-point-oracle",
                    ],
                    1e-7,
                );
                v.records(&label, r, &["frozen-point-limit"], 1e-4);
                if n == 3 {
                    v.require(r.wall_time_s <= 120.0, format!("N=3 took {:.1} s", r.wall_time_s));
                    v.info(format!("N=3 triangle in {:.2} s", r.wall_time_s));
                }
            }
        }
    }
    v
}

fn norms(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    match runs.get(Command::Norm, 2, None) {
        Err(e) => v.require(false, e),
        Ok(r) => {
            v.records(
                "N=2",
                r,
                &["gram-orthogonality", "gram-diagonal-vs-norm", "norm-vs-oracle"],
                1e-7,
            );
            v.records("N=2", r, &["norm-vs-limit"], 1e-4);
            v.all_records("N=2", r);
            let count = r.data["norms"].as_array().map_or(0, Vec::len);
            v.require(count >= 4, format!("only {count} certified solutions"));
            v.info(format!("{count} solutions"));
        }
    }
    v
}

fn on_shell(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    v.require(
        RunConfig::sample(2).inputs.identity_points >= 7,
        "fewer than 7 z points",
    );
    for n in [2, 3] {
        let label = format!("N={n}");
        match runs.get(Command::VerifyAppendices, n, None) {
            Err(e) => v.require(false, e),
            Ok(r) => {
                v.records(&label, r, &["z-eigenvalue-classes"], 1e-7);
                let names = ["k-equals-root-product", "prod-f", "product-identity", "diagonal-analog"];
                v.records(&label, r, &names, 1e-8);
                v.info(format!("{label} worst rel err {:.1e}", worst(r, &names)));
            }
        }
    }
    v
}

fn appendices(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    for n in [2, 3] {
        let label = format!("N={n}");
        match runs.get(Command::VerifyAppendices, n, None) {
            Err(e) => v.require(false, e),
            Ok(r) => {
                let names = [
                    "summation-formulas",
                    "omega-row-sums",
                    "omega-inverse",
                    "partial-product-identity",
                    "single-removal-sum",
                    "transfer-sum",
                    "jacobian-determinant",
                    "row-combination",
                ];
                v.records(&label, r, &names, 1e-7);
                v.all_records(&label, r);
                v.info(format!("{label} worst rel err {:.1e}", worst(r, &names)));
            }
        }
    }
    v
}

fn negative_control(runs: &mut Runs) -> Verdict {
    let mut v = Verdict::new();
    v.require(
        RunConfig::sample(2).inputs.negative_control_draws >= 10,
        "fewer than 10 draws",
    );
    for n in [2, 3] {
        let label = format!("N={n}");
        match runs.get(Command::ScalarProduct, n, None) {
            Err(e) => v.require(false, e),
            Ok(r) => {
                v.records(&label, r, &["negative-control"], 0.1);
                if let Some(rec) = find(r, "negative-control") {
                    v.info(format!("{label} miss fraction {:.2}", rec.max_rel_err));
                }
            }
        }
    }
    v
}

fn reproducibility() -> Verdict {
    let mut v = Verdict::new();
    for n in [2, 3] {
        let cfg = RunConfig::sample(n);
        let first = run_with_threads(Command::VerifyAll, &cfg, Some(1));
        let second = run_with_threads(Command::VerifyAll, &cfg, Some(1));
        match (first, second) {
            (Ok(a), Ok(b)) => {
                v.require(
                    a.to_json_without_timing() == b.to_json_without_timing(),
                    format!("N={n} reports differ"),
                );
                v.require(a.pass, format!("N={n} full suite did not pass"));
            }
            (Err(e), _) | (_, Err(e)) => v.require(false, format!("N={n}: {e}")),
        }
    }
    v.info("identical reports at N=2 and N=3");
    v
}

fn main() -> ExitCode {
    let mut runs = Runs { cache: BTreeMap::new() };
    let criteria: Vec<(&str, Verdict)> = vec![
        ("izergin determinant properties", izergin(&mut runs)),
        ("oracle consistency", oracle(&mut runs)),
        ("off-shell scalar product", off_shell(&mut runs)),
        ("bethe solving", bethe(&mut runs)),
        ("determinant representations", determinants(&mut runs)),
        ("gram matrix and norms", norms(&mut runs)),
        ("on-shell identities", on_shell(&mut runs)),
        ("summation and omega identities", appendices(&mut runs)),
        ("negative control", negative_control(&mut runs)),
        ("reproducibility", reproducibility()),
    ];
    let mut ok = true;
    for (i, (title, verdict)) in criteria.iter().enumerate() {
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {title}: {}", i + 1, verdict.detail);
        ok &= verdict.pass;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
