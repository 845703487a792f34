//! Metric rows, CSV persistence and cross-seed statistics.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunLog};
use crate::error::{Error, Result};

/// One logged update of one run. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algo: Algorithm,
    pub seed: u64,
    pub epoch: usize,
    pub iter: usize,
    pub g_evals: u64,
    pub grad_norm_sq: f64,
    pub min_grad_norm_sq: f64,
    pub mspbe: f64,
    pub var_estimate: Option<f64>,
    pub reward_estimate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn from_log(log: &RunLog, seed: u64) -> Self {
        let mut running = f64::INFINITY;
        let rows = log
            .records
            .iter()
            .map(|r| {
                running = running.min(r.grad_norm_sq);
                MetricsRow {
                    algo: log.algorithm,
                    seed,
                    epoch: r.epoch,
                    iter: r.step,
                    g_evals: r.g_evals,
                    grad_norm_sq: r.grad_norm_sq,
                    min_grad_norm_sq: running,
                    mspbe: r.mspbe,
                    var_estimate: r.var_estimate,
                    reward_estimate: r.reward_estimate,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn extend(&mut self, other: MetricsTable) {
        self.rows.extend(other.rows);
    }

    /// Rows of one `(algo, seed)` run, in order.
    pub fn run(&self, algo: Algorithm, seed: u64) -> Vec<&MetricsRow> {
        self.rows.iter().filter(|r| r.algo == algo && r.seed == seed).collect()
    }

    /// Distinct `(algo, seed)` pairs in order of first appearance.
    pub fn groups(&self) -> Vec<(Algorithm, u64)> {
        let mut out: Vec<(Algorithm, u64)> = Vec::new();
        for r in &self.rows {
            if !out.contains(&(r.algo, r.seed)) {
                out.push((r.algo, r.seed));
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.rows.is_empty() {
            w.write_record(HEADER)?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != HEADER {
            return Err(Error::Config(format!("unexpected metrics header {header:?}")));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Check the per-run invariants: `g_evals` strictly increasing and
    /// `min_grad_norm_sq` equal to the running minimum of `grad_norm_sq`.
    pub fn validate(&self) -> Result<()> {
        for (algo, seed) in self.groups() {
            let mut running = f64::INFINITY;
            let mut last_evals = None;
            for r in self.run(algo, seed) {
                running = running.min(r.grad_norm_sq);
                if r.min_grad_norm_sq != running {
                    return Err(Error::State(format!(
                        "{algo} seed {seed} iter {}: min_grad_norm_sq {} is not the running minimum {running}",
                        r.iter, r.min_grad_norm_sq
                    )));
                }
                if last_evals.is_some_and(|e| r.g_evals <= e) {
                    return Err(Error::State(format!(
                        "{algo} seed {seed} iter {}: g_evals not increasing",
                        r.iter
                    )));
                }
                last_evals = Some(r.g_evals);
            }
        }
        Ok(())
    }
}

pub const HEADER: [&str; 10] = [
    "algo",
    "seed",
    "epoch",
    "iter",
    "g_evals",
    "grad_norm_sq",
    "min_grad_norm_sq",
    "mspbe",
    "var_estimate",
    "reward_estimate",
];

/// Mean of the last `tail` values.
pub fn asymptotic_error(grad_norm_sq: &[f64], tail: usize) -> Result<f64> {
    if tail == 0 || grad_norm_sq.len() < tail {
        return Err(Error::Parameter(format!(
            "asymptotic error needs a tail of at least 1 and at most the run length ({}), got {tail}",
            grad_norm_sq.len()
        )));
    }
    let last = &grad_norm_sq[grad_norm_sq.len() - tail..];
    Ok(last.iter().sum::<f64>() / tail as f64)
}

/// Nearest-rank percentile of `sorted` (ascending), `p` in percent.
pub fn nearest_rank(sorted: &[f64], p: u32) -> f64 {
    let n = sorted.len();
    let rank = (p as usize * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

/// A curve sampled at increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    /// Linear interpolation; `None` outside the sampled range.
    pub fn at(&self, x: f64) -> Option<f64> {
        let (first, last) = (*self.x.first()?, *self.x.last()?);
        if x < first || x > last {
            return None;
        }
        let k = self.x.partition_point(|&v| v < x);
        if self.x[k] == x {
            return Some(self.y[k]);
        }
        let (x0, x1, y0, y1) = (self.x[k - 1], self.x[k], self.y[k - 1], self.y[k]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub g_evals: f64,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
}

/// 5th, 50th and 95th nearest-rank percentiles across curves, on the
/// abscissae of the first curve that every curve covers.
pub fn envelope_stats(curves: &[Curve]) -> Result<Vec<EnvelopeRow>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Parameter("envelope needs at least one curve".into()))?;
    let mut out = Vec::with_capacity(first.x.len());
    let mut values = Vec::with_capacity(curves.len());
    for &x in &first.x {
        values.clear();
        for c in curves {
            match c.at(x) {
                Some(v) => values.push(v),
                None => break,
            }
        }
        if values.len() != curves.len() {
            continue;
        }
        values.sort_by(f64::total_cmp);
        out.push(EnvelopeRow {
            g_evals: x,
            p05: nearest_rank(&values, 5),
            p50: nearest_rank(&values, 50),
            p95: nearest_rank(&values, 95),
        });
    }
    Ok(out)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Parameter(
            "spearman needs two equally long samples of size >= 2".into(),
        ));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Parameter("spearman is undefined for a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(algo: Algorithm, seed: u64, iter: usize, g: f64, min: f64) -> MetricsRow {
        MetricsRow {
            algo,
            seed,
            epoch: 0,
            iter,
            g_evals: iter as u64,
            grad_norm_sq: g,
            min_grad_norm_sq: min,
            mspbe: 0.1 * g,
            var_estimate: iter.is_multiple_of(2).then_some(g / 3.0),
            reward_estimate: None,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = MetricsTable {
            rows: vec![
                row(Algorithm::GreedyGq, 0, 1, 0.1 + 0.2, 0.1 + 0.2),
                row(Algorithm::GreedyGq, 0, 2, 1e-300, 1e-300),
                row(Algorithm::VrGreedyGq, 7, 1, std::f64::consts::PI, std::f64::consts::PI),
            ],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "algo,seed,epoch,iter,g_evals,grad_norm_sq,min_grad_norm_sq,mspbe,var_estimate,reward_estimate\n"
        ));
        assert!(text.contains("greedy_gq,0,0,1,1,0.30000000000000004,"));
        assert_eq!(MetricsTable::read_csv(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn empty_table_keeps_header() {
        let mut buf = Vec::new();
        MetricsTable::default().write_csv(&mut buf).unwrap();
        assert_eq!(MetricsTable::read_csv(buf.as_slice()).unwrap(), MetricsTable::default());
    }

    #[test]
    fn validation_catches_broken_minimum() {
        let good = MetricsTable {
            rows: vec![
                row(Algorithm::GreedyGq, 0, 1, 2.0, 2.0),
                row(Algorithm::GreedyGq, 0, 2, 3.0, 2.0),
            ],
        };
        good.validate().unwrap();
        let bad = MetricsTable {
            rows: vec![
                row(Algorithm::GreedyGq, 0, 1, 2.0, 2.0),
                row(Algorithm::GreedyGq, 0, 2, 3.0, 3.0),
            ],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn asymptotic_error_examples() {
        assert_eq!(asymptotic_error(&[0.5; 20], 10).unwrap(), 0.5);
        assert_eq!(asymptotic_error(&[3.0, 1.0, 2.0], 1).unwrap(), 2.0);
        assert!(asymptotic_error(&[1.0; 5], 6).is_err());
    }

    #[test]
    fn single_curve_envelope_is_the_curve() {
        let c = Curve {
            x: vec![1.0, 2.0, 3.0],
            y: vec![5.0, 4.0, 1.0],
        };
        let env = envelope_stats(std::slice::from_ref(&c)).unwrap();
        assert_eq!(env.len(), 3);
        for (e, y) in env.iter().zip(&c.y) {
            assert_eq!((e.p05, e.p50, e.p95), (*y, *y, *y));
        }
    }

    #[test]
    fn constant_curves_give_order_statistics() {
        let curves: Vec<Curve> = (1..=40)
            .map(|k| Curve {
                x: vec![0.0, 1.0],
                y: vec![k as f64; 2],
            })
            .collect();
        let env = envelope_stats(&curves).unwrap();
        assert_eq!((env[0].p05, env[0].p50, env[0].p95), (2.0, 20.0, 38.0));
    }

    #[test]
    fn interpolates_onto_the_first_grid() {
        let a = Curve {
            x: vec![0.0, 2.0, 4.0],
            y: vec![0.0, 2.0, 4.0],
        };
        let b = Curve {
            x: vec![0.0, 4.0],
            y: vec![4.0, 0.0],
        };
        let env = envelope_stats(&[a, b]).unwrap();
        assert_eq!(env[1].g_evals, 2.0);
        assert_eq!((env[1].p05, env[1].p95), (2.0, 2.0));
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 9.0, 3.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap() - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn envelopes_bracket_the_median(ys in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 5), 1..30)) {
            let curves: Vec<Curve> = ys.into_iter().map(|y| Curve { x: (0..5).map(f64::from).collect(), y }).collect();
            for e in envelope_stats(&curves).unwrap() {
                prop_assert!(e.p05 <= e.p50 && e.p50 <= e.p95);
            }
        }

        #[test]
        fn csv_round_trip_random(vals in proptest::collection::vec((any::<f64>().prop_filter("finite", |v| v.is_finite()), proptest::option::of(-1e10f64..1e10)), 1..20)) {
            let rows = vals.iter().enumerate().map(|(i, &(g, v))| MetricsRow {
                algo: Algorithm::ActorCritic, seed: 3, epoch: 0, iter: i + 1, g_evals: i as u64 + 1,
                grad_norm_sq: g, min_grad_norm_sq: g, mspbe: g, var_estimate: v, reward_estimate: v,
            }).collect();
            let table = MetricsTable { rows };
            let mut buf = Vec::new();
            table.write_csv(&mut buf).unwrap();
            prop_assert_eq!(MetricsTable::read_csv(buf.as_slice()).unwrap(), table);
        }
    }
}
