//! CSV row formats shared by the library and the command-line tool.

use std::io::Write;

use serde::Serialize;

use crate::adversary::EnvelopeResult;
use crate::error::Result;

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if (1e-5..1e15).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// One evaluation result: `route` is `closed_form`, `generic` or `monte_carlo`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub policy: String,
    pub distribution: String,
    pub route: String,
    pub value: f64,
    /// Zero for the exact routes.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseRow {
    pub policy: String,
    pub mu: f64,
    pub gamma: f64,
    pub value: f64,
    pub witness: [(f64, f64); 2],
}

impl WorstCaseRow {
    /// A one-atom witness is written twice with the mass on the first copy.
    pub fn new(policy: &str, mu: f64, gamma: f64, result: &EnvelopeResult) -> Self {
        let atoms = result.witness.atoms();
        let first = atoms[0];
        let second = atoms.get(1).copied().unwrap_or((first.0, 0.0));
        Self {
            policy: policy.to_string(),
            mu,
            gamma,
            value: result.value,
            witness: [first, second],
        }
    }
}

/// Optimal mechanism against one distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismRow {
    pub distribution: String,
    pub mu: f64,
    pub gamma: f64,
    pub grid_points: usize,
    pub value: f64,
    pub buyer_payoff: f64,
    pub v_star: f64,
}

pub fn write_mechanism_csv<W: Write>(rows: &[MechanismRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "distribution",
        "mu",
        "gamma",
        "grid_points",
        "value",
        "buyer_payoff",
        "v_star",
    ])?;
    for r in rows {
        w.write_record([
            r.distribution.clone(),
            fmt_sig(r.mu),
            fmt_sig(r.gamma),
            r.grid_points.to_string(),
            fmt_sig(r.value),
            fmt_sig(r.buyer_payoff),
            fmt_sig(r.v_star),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_evaluation_csv<W: Write>(rows: &[EvaluationRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["policy", "distribution", "route", "value", "std_error"])?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            r.distribution.clone(),
            r.route.clone(),
            fmt_sig(r.value),
            fmt_sig(r.std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_worst_case_csv<W: Write>(rows: &[WorstCaseRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "policy",
        "mu",
        "gamma",
        "value",
        "witness_q1",
        "witness_mass1",
        "witness_q2",
        "witness_mass2",
    ])?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            fmt_sig(r.mu),
            fmt_sig(r.gamma),
            fmt_sig(r.value),
            fmt_sig(r.witness[0].0),
            fmt_sig(r.witness[0].1),
            fmt_sig(r.witness[1].0),
            fmt_sig(r.witness[1].1),
        ])?;
    }
    w.flush()?;
    Ok(())
}
