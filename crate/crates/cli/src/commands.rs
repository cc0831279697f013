use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use refund_lab::adversary::{self, worst_case};
use refund_lab::certify;
use refund_lab::distributions::DEFAULT_GRID;
use refund_lab::evaluation::{monte_carlo, profit_closed_form, profit_generic};
use refund_lab::market::v_one_star;
use refund_lab::mechanisms::optimal_mechanism;
use refund_lab::report::{
    fmt_sig, write_evaluation_csv, write_mechanism_csv, write_worst_case_csv, EvaluationRow,
    MechanismRow, WorstCaseRow,
};
use refund_lab::{best_guaranteed_profit, Branch, RngState};

use crate::scenario::{self, Overrides, Resolved};
use crate::Failure;

/// Tolerances used by `--check`.
const CLOSED_FORM_TOL: f64 = 1e-9;
const MC_SIGMAS: f64 = 4.0;
const ENVELOPE_TOL: f64 = 1e-6;
const MECHANISM_TOL: f64 = 2e-3;

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Writes `render`'s output to `path`, or stdout when `path` is `None`.
fn emit<F>(path: Option<&Path>, render: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> refund_lab::Result<()>,
{
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut w = BufWriter::new(file);
            render(&mut w)?;
            w.flush().map_err(|e| io_error(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock)?;
            Ok(())
        }
    }
}

fn resolve(path: Option<&Path>, overrides: Overrides) -> Result<Resolved, Failure> {
    let s = scenario::load(path)?.resolve(overrides)?;
    if s.scale != 1.0 {
        eprintln!(
            "refund-lab: values are for the normalized market; multiply by v_bar = {} for money amounts",
            fmt_sig(s.scale)
        );
    }
    Ok(s)
}

fn require_nonempty<T>(items: &[T], what: &str) -> Result<(), Failure> {
    if items.is_empty() {
        return Err(Failure::Config(format!("no {what} given")));
    }
    Ok(())
}

fn check_failed(failures: Vec<String>) -> Result<(), Failure> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Certification(failures.join("; ")))
    }
}

pub fn compute(
    mu: f64,
    gamma: Option<f64>,
    cost: Option<f64>,
    v_bar: Option<f64>,
) -> Result<(), Failure> {
    let (params, scale) = scenario::market(Some(mu), gamma, cost, v_bar)?;
    let sol = best_guaranteed_profit(&params);
    let interval = match sol.branch {
        Branch::HighCost if sol.v_star < params.gamma() => {
            format!("[{}, {}]", fmt_sig(sol.v_star), fmt_sig(params.gamma()))
        }
        _ => "empty".to_string(),
    };
    let mut rows = vec![
        ("mu", fmt_sig(params.mu())),
        ("gamma", fmt_sig(params.gamma())),
        ("c", fmt_sig(params.cost())),
        ("gamma_bar", fmt_sig(sol.gamma_bar)),
        ("branch", sol.branch.to_string()),
        ("v_star", fmt_sig(sol.v_star)),
        ("beta_star", fmt_sig(sol.beta_star)),
        ("v_one_star", fmt_sig(v_one_star(mu)?)),
        ("discount_interval", interval),
    ];
    if v_bar.is_some() {
        rows.push(("scale", fmt_sig(scale)));
        rows.push(("scaled_profit", fmt_sig(scale * sol.v_star)));
    }
    for (key, value) in rows {
        println!("{key:<18} {value}");
    }
    Ok(())
}

pub fn evaluate(path: Option<&Path>, overrides: Overrides, check: bool) -> Result<(), Failure> {
    let s = resolve(path, overrides)?;
    require_nonempty(&s.policies, "policies")?;
    require_nonempty(&s.distributions, "distributions")?;
    let streams = match (s.mc_samples, s.seed) {
        (0, _) => None,
        (_, Some(seed)) => {
            Some(RngState::from_seed(seed).split(s.policies.len() * s.distributions.len()))
        }
        (_, None) => return Err(Failure::Config("Monte Carlo needs a `seed`".into())),
    };
    let pairs: Vec<(usize, usize)> = (0..s.policies.len())
        .flat_map(|i| (0..s.distributions.len()).map(move |j| (i, j)))
        .collect();

    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let (pname, kind, policy) = &s.policies[i];
            let (dname, dist) = &s.distributions[j];
            let row = |route: &str, value: f64, std_error: f64| EvaluationRow {
                policy: pname.clone(),
                distribution: dname.clone(),
                route: route.to_string(),
                value,
                std_error,
            };
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            let generic = profit_generic(policy, dist, &s.params, s.tie)?;
            // Closed forms assume the adversarial tie rule.
            if let (Some(kind), refund_lab::TieRule::Adversarial) = (kind, s.tie) {
                if let Ok(closed) = profit_closed_form(*kind, dist, &s.params) {
                    rows.push(row("closed_form", closed, 0.0));
                    if (closed - generic).abs() > CLOSED_FORM_TOL {
                        failures.push(format!(
                            "{pname}/{dname}: closed form {closed} vs {generic}"
                        ));
                    }
                }
            }
            rows.push(row("generic", generic, 0.0));
            if let Some(streams) = &streams {
                let mut rng = streams[k].clone();
                let mc = monte_carlo(policy, dist, &s.params, s.tie, s.mc_samples, &mut rng)?;
                rows.push(row("monte_carlo", mc.estimate, mc.std_error));
                if (mc.estimate - generic).abs() > MC_SIGMAS * mc.std_error + 1e-12 {
                    failures.push(format!(
                        "{pname}/{dname}: Monte Carlo {} +- {} vs {generic}",
                        mc.estimate, mc.std_error
                    ));
                }
            }
            Ok((rows, failures))
        })
        .collect::<refund_lab::Result<Vec<_>>>()?;

    let (rows, failures): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let rows: Vec<EvaluationRow> = rows.into_iter().flatten().collect();
    emit(s.output.as_deref(), |w| write_evaluation_csv(&rows, w))?;
    if check {
        check_failed(failures.into_iter().flatten().collect())?;
    }
    Ok(())
}

pub fn adversary(path: Option<&Path>, overrides: Overrides, check: bool) -> Result<(), Failure> {
    let s = resolve(path, overrides)?;
    require_nonempty(&s.policies, "policies")?;
    let grid_n = s.grid_n.unwrap_or(adversary::DEFAULT_GRID);
    let (mu, gamma) = (s.params.mu(), s.params.gamma());
    let v_star = best_guaranteed_profit(&s.params).v_star;

    let rows = s
        .policies
        .par_iter()
        .map(|(name, _, policy)| {
            let result = worst_case(&policy.profile(&s.params, s.tie)?, mu, grid_n)?;
            Ok(WorstCaseRow::new(name, mu, gamma, &result))
        })
        .collect::<refund_lab::Result<Vec<_>>>()?;
    emit(s.output.as_deref(), |w| write_worst_case_csv(&rows, w))?;
    if check {
        // No policy can guarantee more than V*.
        let failures = rows
            .iter()
            .filter(|r| r.value > v_star + ENVELOPE_TOL)
            .map(|r| format!("{}: guarantee {} exceeds V* = {v_star}", r.policy, r.value))
            .collect();
        check_failed(failures)?;
    }
    Ok(())
}

pub fn mechanism(
    path: Option<&Path>,
    overrides: Overrides,
    check: bool,
    allocations_dir: Option<&Path>,
) -> Result<(), Failure> {
    let s = resolve(path, overrides)?;
    require_nonempty(&s.distributions, "distributions")?;
    let grid_n = s.grid_n.unwrap_or(DEFAULT_GRID);
    let v_star = best_guaranteed_profit(&s.params).v_star;

    let results = s
        .distributions
        .par_iter()
        .map(|(name, dist)| {
            let discrete = if dist.is_discrete() {
                dist.clone()
            } else {
                dist.discretize(grid_n)?
            };
            Ok((name.clone(), optimal_mechanism(&discrete, &s.params)?))
        })
        .collect::<refund_lab::Result<Vec<_>>>()?;

    if let Some(dir) = allocations_dir {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        for (name, opt) in &results {
            let path = dir.join(format!("{name}.csv"));
            emit(Some(&path), |w| opt.allocation.write_csv(w))?;
        }
    }

    let rows: Vec<MechanismRow> = results
        .iter()
        .map(|(name, opt)| MechanismRow {
            distribution: name.clone(),
            mu: s.params.mu(),
            gamma: s.params.gamma(),
            grid_points: opt.allocation.grid().len(),
            value: opt.value,
            buyer_payoff: opt.buyer_payoff,
            v_star,
        })
        .collect();
    emit(s.output.as_deref(), |w| write_mechanism_csv(&rows, w))?;
    if check {
        // Against any distribution the seller can secure V*, up to discretization.
        let failures = results
            .iter()
            .filter(|(_, opt)| opt.value < v_star - MECHANISM_TOL)
            .map(|(name, opt)| format!("{name}: optimal value {} below V* = {v_star}", opt.value))
            .collect();
        check_failed(failures)?;
    }
    Ok(())
}

pub fn figures(mu: f64, gammas: &[f64], steps: usize, out_dir: &Path) -> Result<(), Failure> {
    if steps == 0 {
        return Err(Failure::Config("--steps must be positive".into()));
    }
    let grid = refund_lab::figures::unit_grid(steps);
    let files = certify::figure_files(mu, gammas, &grid)?;
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    for (name, bytes) in files {
        let path = out_dir.join(&name);
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn certify(fixtures: Option<&Path>, only: &[u8]) -> Result<(), Failure> {
    let selected = |id: u8| only.is_empty() || only.contains(&id);
    let runners: [(u8, &dyn Fn() -> certify::CriterionOutcome); 9] = [
        (1, &certify::criterion_1),
        (2, &certify::criterion_2),
        (3, &certify::criterion_3),
        (4, &certify::criterion_4),
        (5, &certify::criterion_5),
        (6, &certify::criterion_6),
        (7, &certify::criterion_7),
        (8, &certify::criterion_8),
        (9, &|| certify::criterion_9(fixtures)),
    ];
    let mut failed = Vec::new();
    for (id, run) in runners.iter().filter(|(id, _)| selected(*id)) {
        let outcome = run();
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Certification(format!(
            "failed criteria: {}",
            failed.join(", ")
        )))
    }
}
