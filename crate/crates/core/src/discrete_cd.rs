//! Inference on a finite, ordered parameter space from a matrix of sampling
//! probabilities (for example the operating characteristics of a screening
//! test: which result each true status produces, and how often).
//!
//! Both the statuses (parameter values) and the results (outcomes) are totally
//! ordered, so "as or more extreme" is well defined in each direction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on column sums.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

/// `probs[r][c]` is the probability of result `r` when the true status is `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingMatrix {
    statuses: Vec<String>,
    results: Vec<String>,
    probs: Vec<Vec<f64>>,
}

/// A result-by-status table of numbers.
pub type Table = Vec<Vec<f64>>;

impl OperatingMatrix {
    pub fn new(statuses: Vec<String>, results: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let k = statuses.len();
        if k == 0 || results.len() != k {
            return Err(Error::invalid(format!(
                "need as many results as statuses (K >= 1), got {} statuses and {} results",
                k,
                results.len()
            )));
        }
        if probs.len() != k || probs.iter().any(|row| row.len() != k) {
            return Err(Error::invalid(format!("probability matrix must be {k}x{k}")));
        }
        for (r, row) in probs.iter().enumerate() {
            for (c, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::invalid(format!(
                        "entry ({}, {}) = {p} must be a nonnegative number",
                        results[r], statuses[c]
                    )));
                }
            }
        }
        for (c, status) in statuses.iter().enumerate() {
            let s: f64 = probs.iter().map(|row| row[c]).sum();
            if (s - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::invalid(format!("column '{status}' sums to {s}, not 1")));
            }
        }
        Ok(Self {
            statuses,
            results,
            probs,
        })
    }

    pub fn k(&self) -> usize {
        self.statuses.len()
    }
    pub fn statuses(&self) -> &[String] {
        &self.statuses
    }
    pub fn results(&self) -> &[String] {
        &self.results
    }
    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Parses a CSV whose header row names the statuses (after a leading
    /// result-label column) and whose rows are `result,p_1,...,p_K`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::schema(1, "empty matrix file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::schema(
                hline,
                "header needs a label column and at least one status",
            ));
        }
        let statuses: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
        let mut results = Vec::new();
        let mut probs = Vec::new();
        for (ln, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::schema(
                    ln,
                    format!("expected {} fields, found {}", cols.len(), fields.len()),
                ));
            }
            results.push(fields[0].to_string());
            let row = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::schema(ln, format!("'{f}' is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            probs.push(row);
        }
        Self::new(statuses, results, probs)
    }

    /// The screening example: statuses No Cancer < Pre-Cancer < Cancer,
    /// results Negative < At Risk < Positive.
    pub fn screening_example() -> Self {
        Self::new(
            vec!["No Cancer".into(), "Pre-Cancer".into(), "Cancer".into()],
            vec!["Negative".into(), "At Risk".into(), "Positive".into()],
            vec![vec![0.85, 0.40, 0.05], vec![0.10, 0.50, 0.15], vec![0.05, 0.10, 0.80]],
        )
        .expect("example matrix is valid")
    }

    fn lower_tail(&self, r: usize, c: usize) -> f64 {
        (0..=r).map(|i| self.probs[i][c]).sum()
    }

    fn upper_tail(&self, r: usize, c: usize) -> f64 {
        (r..self.k()).map(|i| self.probs[i][c]).sum()
    }
}

/// A one-sided p-value cell; interior cells on the diagonal carry both tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "lowercase")]
pub enum TailPValue {
    /// Probability of this result or a higher one.
    Upper {
        p: f64,
    },
    /// Probability of this result or a lower one.
    Lower {
        p: f64,
    },
    Both {
        upper: f64,
        lower: f64,
    },
}

impl TailPValue {
    /// The single p-value of a one-tailed cell.
    pub fn single(&self) -> Option<f64> {
        match *self {
            TailPValue::Upper { p } | TailPValue::Lower { p } => Some(p),
            TailPValue::Both { .. } => None,
        }
    }
}

impl fmt::Display for TailPValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailPValue::Upper { p } | TailPValue::Lower { p } => write!(f, "{p:.2}"),
            TailPValue::Both { upper, lower } => write!(f, "{upper:.2}|{lower:.2}"),
        }
    }
}

/// One-sided p-values for every (result, status) cell.
///
/// For an observed result, statuses below it are tested with the upper tail
/// (results at least this high), statuses above it with the lower tail. The
/// lowest result can only be extreme downward and the highest only upward;
/// an interior result on the diagonal reports both tails.
pub fn one_sided_pvalues(m: &OperatingMatrix) -> Vec<Vec<TailPValue>> {
    let k = m.k();
    (0..k)
        .map(|r| {
            (0..k)
                .map(|c| {
                    if r == 0 {
                        TailPValue::Lower { p: m.lower_tail(r, c) }
                    } else if r == k - 1 || c < r {
                        TailPValue::Upper { p: m.upper_tail(r, c) }
                    } else if c > r {
                        TailPValue::Lower { p: m.lower_tail(r, c) }
                    } else {
                        TailPValue::Both {
                            upper: m.upper_tail(r, c),
                            lower: m.lower_tail(r, c),
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// Confidence level attached to one observed result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceLevel {
    pub result: String,
    /// The alternative the result supports (the status of the same rank).
    pub status: String,
    pub level: f64,
}

fn single(cell: &TailPValue) -> f64 {
    match *cell {
        TailPValue::Upper { p } | TailPValue::Lower { p } => p,
        // Only diagonal cells carry both tails, and those are never neighbours.
        TailPValue::Both { upper, lower } => upper.min(lower),
    }
}

/// For result `r`, the confidence in status `r` is one minus the p-values that
/// rule out its neighbouring statuses `r − 1` and `r + 1`.
pub fn confidence_levels(m: &OperatingMatrix) -> Vec<ConfidenceLevel> {
    let pv = one_sided_pvalues(m);
    let k = m.k();
    (0..k)
        .map(|r| {
            let mut level = 1.0;
            if r > 0 {
                level -= single(&pv[r][r - 1]);
            }
            if r + 1 < k {
                level -= single(&pv[r][r + 1]);
            }
            ConfidenceLevel {
                result: m.results[r].clone(),
                status: m.statuses[r].clone(),
                level,
            }
        })
        .collect()
}

/// The p-value table with each diagonal cell replaced by its confidence level.
pub fn confidence_level_block(m: &OperatingMatrix) -> Table {
    let pv = one_sided_pvalues(m);
    let levels = confidence_levels(m);
    (0..m.k())
        .map(|r| {
            (0..m.k())
                .map(|c| if r == c { levels[r].level } else { single(&pv[r][c]) })
                .collect()
        })
        .collect()
}

fn row_normalize(rows: Table, what: &str, m: &OperatingMatrix) -> Result<Table> {
    rows.into_iter()
        .enumerate()
        .map(|(r, row)| {
            let s: f64 = row.iter().sum();
            if !(s > 0.0) {
                return Err(Error::DegenerateMass(format!(
                    "{what} row '{}' has zero mass",
                    m.results[r]
                )));
            }
            Ok(row.into_iter().map(|x| x / s).collect())
        })
        .collect()
}

/// Posterior over statuses for each result under the given prior weights.
pub fn posterior(m: &OperatingMatrix, prior_weights: &[f64]) -> Result<Table> {
    if prior_weights.len() != m.k() {
        return Err(Error::invalid(format!(
            "{} prior weights for {} statuses",
            prior_weights.len(),
            m.k()
        )));
    }
    if prior_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("prior weights must be nonnegative numbers"));
    }
    if !(prior_weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::invalid("prior weights are all zero"));
    }
    let rows = m
        .probs
        .iter()
        .map(|row| row.iter().zip(prior_weights).map(|(p, w)| p * w).collect())
        .collect();
    row_normalize(rows, "posterior", m)
}

/// Each row of the matrix divided by its sum.
pub fn normalized_likelihood(m: &OperatingMatrix) -> Result<Table> {
    row_normalize(m.probs.clone(), "likelihood", m)
}

/// Row `r` is the sampling distribution of results under status `map[r]`.
pub fn plugin_sampling(m: &OperatingMatrix, map: &[usize]) -> Result<Table> {
    if map.len() != m.k() || map.iter().any(|&c| c >= m.k()) {
        return Err(Error::invalid("plug-in map must send every result to a valid status"));
    }
    Ok(map
        .iter()
        .map(|&c| (0..m.k()).map(|r| m.probs[r][c]).collect())
        .collect())
}

/// The map sending result `r` to status `r`.
pub fn diagonal_map(k: usize) -> Vec<usize> {
    (0..k).collect()
}

/// Parses a prior ratio such as `4:2:1`.
pub fn parse_prior(s: &str) -> Result<Vec<f64>> {
    s.split(':')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("prior weight '{t}' is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn pvalue_cells() {
        let m = OperatingMatrix::screening_example();
        let pv = one_sided_pvalues(&m);
        assert!((pv[1][0].single().unwrap() - 0.15).abs() < 1e-12);
        assert!((pv[1][2].single().unwrap() - 0.20).abs() < 1e-12);
        assert!((pv[0][0].single().unwrap() - 0.85).abs() < 1e-12);
        match pv[1][1] {
            TailPValue::Both { upper, lower } => {
                assert!((upper - 0.60).abs() < 1e-12 && (lower - 0.90).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(pv[1][1].to_string(), "0.60|0.90");
        // Most extreme result against the most extreme opposing status is a single cell.
        assert!((pv[2][0].single().unwrap() - 0.05).abs() < 1e-12);
        assert!((pv[0][2].single().unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn levels() {
        let m = OperatingMatrix::screening_example();
        let l = confidence_levels(&m);
        let got: Vec<f64> = l.iter().map(|c| round2(c.level)).collect();
        assert_eq!(got, vec![0.60, 0.65, 0.90]);
        assert_eq!(l[1].status, "Pre-Cancer");
    }

    #[test]
    fn single_status() {
        let m = OperatingMatrix::new(vec!["s".into()], vec!["r".into()], vec![vec![1.0]]).unwrap();
        assert_eq!(one_sided_pvalues(&m)[0][0].single(), Some(1.0));
        assert_eq!(confidence_levels(&m)[0].level, 1.0);
    }

    #[test]
    fn posterior_rows() {
        let m = OperatingMatrix::screening_example();
        let post = posterior(&m, &[4.0, 2.0, 1.0]).unwrap();
        let want = [[0.80, 0.19, 0.01], [0.26, 0.65, 0.10], [0.17, 0.17, 0.67]];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(round2(post[r][c]), want[r][c], "({r},{c})");
            }
        }
        assert_eq!(
            posterior(&m, &[1.0, 1.0, 1.0]).unwrap(),
            normalized_likelihood(&m).unwrap()
        );
        let point = posterior(&m, &[0.0, 1.0, 0.0]).unwrap();
        assert!(point.iter().all(|row| row == &vec![0.0, 1.0, 0.0]));
    }

    #[test]
    fn likelihood_and_plugin() {
        let m = OperatingMatrix::screening_example();
        let nl = normalized_likelihood(&m).unwrap();
        let want = [[0.65, 0.31, 0.04], [0.13, 0.67, 0.20], [0.05, 0.11, 0.84]];
        for r in 0..3 {
            assert!((nl[r].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for c in 0..3 {
                assert_eq!(round2(nl[r][c]), want[r][c]);
            }
        }
        let pl = plugin_sampling(&m, &diagonal_map(3)).unwrap();
        assert_eq!(pl[1], vec![0.40, 0.50, 0.10]);
        let constant = plugin_sampling(&m, &[2, 2, 2]).unwrap();
        assert!(constant.iter().all(|row| row == &constant[0]));
    }

    #[test]
    fn csv_parsing_and_bad_sums() {
        let ok = "result,No Cancer,Pre-Cancer,Cancer\nNegative,0.85,0.40,0.05\nAt Risk,0.10,0.50,0.15\nPositive,0.05,0.10,0.80\n";
        assert_eq!(
            OperatingMatrix::from_csv(ok).unwrap(),
            OperatingMatrix::screening_example()
        );
        let bad = ok.replace("0.85", "0.95");
        assert!(matches!(OperatingMatrix::from_csv(&bad), Err(Error::Invalid(_))));
        let short = "result,a,b\nx,0.5\n";
        assert!(matches!(
            OperatingMatrix::from_csv(short),
            Err(Error::Schema { line: 2, .. })
        ));
    }
}
