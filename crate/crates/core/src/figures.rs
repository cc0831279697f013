//! Data behind the two figures: the worst-case distribution against its
//! Pareto bound, and guaranteed profit as a function of `gamma`.

use std::io::Write;

use crate::adversary::robust_price;
use crate::distributions::make_worst_case;
use crate::error::Result;
use crate::market::{best_guaranteed_profit, v_one_star, MarketParams};
use crate::report::fmt_sig;

/// Signal grid spacing for the worst-case figure.
pub const FIG1_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig1Row {
    pub q: f64,
    pub cdf: f64,
    /// `1 - V*/q`; `-inf` at `q = 0`.
    pub bound: f64,
}

pub fn fig1_rows(params: &MarketParams) -> Vec<Fig1Row> {
    let v = best_guaranteed_profit(params).v_star;
    let fw = make_worst_case(params);
    let n = (1.0 / FIG1_STEP).round() as usize;
    (0..=n)
        .map(|i| {
            let q = i as f64 / n as f64;
            let bound = if q == 0.0 {
                f64::NEG_INFINITY
            } else {
                1.0 - v / q
            };
            Fig1Row {
                q,
                cdf: fw.cdf(q),
                bound,
            }
        })
        .collect()
}

/// `fig1_<gamma>.csv`.
pub fn fig1_file_name(gamma: f64) -> String {
    format!("fig1_{}.csv", fmt_sig(gamma))
}

pub fn write_fig1<W: Write>(rows: &[Fig1Row], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q", "F_w", "one_minus_v_over_q"])?;
    for r in rows {
        w.write_record([fmt_sig(r.q), fmt_sig(r.cdf), fmt_sig(r.bound)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Row {
    pub gamma: f64,
    pub v_star: f64,
    pub v_one: f64,
    pub robust_price: f64,
    pub generous_alone: f64,
}

pub fn fig2_rows(mu: f64, gammas: &[f64]) -> Result<Vec<Fig2Row>> {
    let v_one = v_one_star(mu)?;
    let price = robust_price(mu)?.guarantee;
    gammas
        .iter()
        .map(|&gamma| {
            let params = MarketParams::new(mu, gamma)?;
            let generous_alone = if gamma < 1.0 {
                (mu - gamma).max(0.0) / (1.0 - gamma)
            } else {
                0.0
            };
            Ok(Fig2Row {
                gamma,
                v_star: best_guaranteed_profit(&params).v_star,
                v_one,
                robust_price: price,
                generous_alone,
            })
        })
        .collect()
}

pub fn write_fig2<W: Write>(rows: &[Fig2Row], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "gamma",
        "v_star",
        "v_one_star",
        "robust_price",
        "generous_refund",
    ])?;
    for r in rows {
        w.write_record([
            fmt_sig(r.gamma),
            fmt_sig(r.v_star),
            fmt_sig(r.v_one),
            fmt_sig(r.robust_price),
            fmt_sig(r.generous_alone),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `n + 1` evenly spaced values on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_high_cost() {
        let params = MarketParams::new(0.75, 0.8).unwrap();
        let v = best_guaranteed_profit(&params).v_star;
        let rows = fig1_rows(&params);
        assert_eq!(rows.len(), 1001);
        for r in &rows {
            assert!(r.cdf >= r.bound - 1e-12);
            if r.q >= v && r.q < 0.8 {
                assert!((r.cdf - r.bound).abs() < 1e-12, "{r:?}");
            }
        }
        assert_eq!(rows[1000].cdf, 1.0);
    }

    #[test]
    fn fig2_endpoints() {
        let rows = fig2_rows(0.75, &unit_grid(100)).unwrap();
        assert!((rows[0].v_star - 0.75).abs() < 1e-12);
        assert!((rows[0].generous_alone - 0.75).abs() < 1e-12);
        assert!((rows[100].v_star - rows[100].v_one).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].v_star < w[0].v_star);
        }
    }

    #[test]
    fn fig1_csv_header_and_first_row() {
        let params = MarketParams::new(0.5, 1.0).unwrap();
        let mut buf = Vec::new();
        write_fig1(&fig1_rows(&params), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("q,F_w,one_minus_v_over_q"));
        assert_eq!(lines.next(), Some("0,0,-inf"));
        assert_eq!(fig1_file_name(1.0), "fig1_1.csv");
        assert_eq!(fig1_file_name(0.25), "fig1_0.25.csv");
    }
}
