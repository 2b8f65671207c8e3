//! EDAS ranking (evaluation based on distance from average solution).
//!
//! The default orientation treats the shortfall below the mean of a benefit
//! criterion as the positive distance, so the best alternative has the lowest
//! appraisal score. [`Orientation::Canonical`] is the textbook variant where
//! the highest score wins.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionKind {
    Benefit,
    Cost,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    /// Shortfall is penalized as `pd`; lowest appraisal score ranks first.
    #[default]
    Shortfall,
    /// Excess over the mean is `pd`; highest appraisal score ranks first.
    Canonical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub kind: CriterionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionMatrix {
    alternatives: Vec<String>,
    criteria: Vec<Criterion>,
    /// Row-major, one row per alternative.
    scores: Vec<f64>,
    weights: Vec<f64>,
    means: Option<Vec<f64>>,
}

impl DecisionMatrix {
    /// Equal weights `1/criteria` unless replaced with [`Self::with_weights`].
    pub fn new(alternatives: Vec<String>, criteria: Vec<Criterion>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if alternatives.is_empty() || criteria.is_empty() {
            return Err(Error::shape("need at least one alternative and one criterion"));
        }
        if scores.len() != alternatives.len() {
            return Err(Error::shape(format!(
                "{} score rows for {} alternatives",
                scores.len(),
                alternatives.len()
            )));
        }
        let k = criteria.len();
        let mut flat = Vec::with_capacity(k * scores.len());
        for (name, row) in alternatives.iter().zip(&scores) {
            if row.len() != k {
                return Err(Error::shape(format!("{name}: {} scores for {k} criteria", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("{name}: scores must be finite")));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            alternatives,
            weights: vec![1.0 / k as f64; k],
            criteria,
            scores: flat,
            means: None,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.criteria.len() {
            return Err(Error::shape(format!(
                "{} weights for {} criteria",
                weights.len(),
                self.criteria.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Replaces the computed column means.
    pub fn with_means(mut self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.criteria.len() {
            return Err(Error::shape(format!(
                "{} means for {} criteria",
                means.len(),
                self.criteria.len()
            )));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("means must be finite"));
        }
        self.means = Some(means);
        Ok(self)
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn score(&self, alt: usize, crit: usize) -> f64 {
        self.scores[alt * self.criteria.len() + crit]
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks(self.criteria.len())
    }

    /// Parses `alternative,<name>:benefit|cost,...` CSV with optional
    /// `weights` and `means` rows. A criterion without a kind is a benefit.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut header: Option<Vec<Criterion>> = None;
        let (mut names, mut rows) = (Vec::new(), Vec::new());
        let (mut weights, mut means) = (None, None);
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(idx + 1, |p| p.line() as usize),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(idx + 1, |p| p.line() as usize);
            let cells: Vec<&str> = record.iter().collect();
            let Some(criteria) = &header else {
                header = Some(parse_header(&cells, line)?);
                continue;
            };
            if cells.len() != criteria.len() + 1 {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {} fields, found {}", criteria.len() + 1, cells.len()),
                });
            }
            let values = cells[1..]
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            line,
                            reason: format!("not a number: {c:?}"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            match cells[0] {
                "weights" => weights = Some(values),
                "means" => means = Some(values),
                name => {
                    names.push(name.to_string());
                    rows.push(values);
                }
            }
        }
        let criteria = header.ok_or(Error::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let mut m = Self::new(names, criteria, rows)?;
        if let Some(w) = weights {
            m = m.with_weights(w)?;
        }
        if let Some(mu) = means {
            m = m.with_means(mu)?;
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

fn parse_header(cells: &[&str], line: usize) -> Result<Vec<Criterion>> {
    if cells.first() != Some(&"alternative") || cells.len() < 2 {
        return Err(Error::Parse {
            line,
            reason: "header must be `alternative,<criterion>[:benefit|cost],...`".into(),
        });
    }
    cells[1..]
        .iter()
        .map(|c| {
            let (name, kind) = match c.rsplit_once(':') {
                Some((n, "benefit")) => (n, CriterionKind::Benefit),
                Some((n, "cost")) => (n, CriterionKind::Cost),
                Some((_, k)) => {
                    return Err(Error::Parse {
                        line,
                        reason: format!("unknown criterion kind {k:?}"),
                    })
                }
                None => (*c, CriterionKind::Benefit),
            };
            Ok(Criterion {
                name: name.to_string(),
                kind,
            })
        })
        .collect()
}

/// Column means, or the fixed means when the matrix carries them.
pub fn mean_solution(m: &DecisionMatrix) -> Vec<f64> {
    if let Some(mu) = &m.means {
        return mu.clone();
    }
    let n = m.alternatives.len() as f64;
    (0..m.criteria.len())
        .map(|j| m.rows().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

/// Distance matrices `(pd, nd)`, row-major like the scores.
pub fn distances(m: &DecisionMatrix, means: &[f64], orientation: Orientation) -> Result<(Vec<f64>, Vec<f64>)> {
    if means.len() != m.criteria.len() {
        return Err(Error::shape("means do not match criteria"));
    }
    if let Some(j) = means.iter().position(|mu| *mu == 0.0) {
        return Err(Error::domain(format!(
            "mean of criterion {:?} is zero",
            m.criteria[j].name
        )));
    }
    let mut pd = Vec::with_capacity(m.scores.len());
    let mut nd = Vec::with_capacity(m.scores.len());
    for row in m.rows() {
        for ((x, mu), c) in row.iter().zip(means).zip(&m.criteria) {
            let below = (mu - x).max(0.0) / mu.abs();
            let above = (x - mu).max(0.0) / mu.abs();
            let penalize_below = matches!(
                (c.kind, orientation),
                (CriterionKind::Benefit, Orientation::Shortfall) | (CriterionKind::Cost, Orientation::Canonical)
            );
            if penalize_below {
                pd.push(below);
                nd.push(above);
            } else {
                pd.push(above);
                nd.push(below);
            }
        }
    }
    Ok((pd, nd))
}

/// Weighted row sums `(sp, sn)`.
pub fn aggregate(pd: &[f64], nd: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = weights.len();
    let sum = |d: &[f64]| -> Vec<f64> {
        d.chunks(k)
            .map(|row| row.iter().zip(weights).map(|(v, w)| v * w).sum())
            .collect()
    };
    (sum(pd), sum(nd))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Appraisal {
    pub nsp: Vec<f64>,
    pub nsn: Vec<f64>,
    pub as_score: Vec<f64>,
    /// 1-based rank per alternative.
    pub rank: Vec<usize>,
}

/// Normalizes the aggregates, averages them into the appraisal score and ranks.
pub fn appraise(sp: &[f64], sn: &[f64], orientation: Orientation) -> Appraisal {
    let max_sp = sp.iter().copied().fold(0.0, f64::max);
    let max_sn = sn.iter().copied().fold(0.0, f64::max);
    let nsp: Vec<f64> = sp.iter().map(|v| if max_sp > 0.0 { v / max_sp } else { 0.0 }).collect();
    let nsn: Vec<f64> = sn
        .iter()
        .map(|v| if max_sn > 0.0 { 1.0 - v / max_sn } else { 1.0 })
        .collect();
    let as_score: Vec<f64> = nsp.iter().zip(&nsn).map(|(p, n)| 0.5 * (p + n)).collect();
    let mut order: Vec<usize> = (0..sp.len()).collect();
    match orientation {
        Orientation::Shortfall => order.sort_by(|&a, &b| as_score[a].total_cmp(&as_score[b])),
        Orientation::Canonical => order.sort_by(|&a, &b| as_score[b].total_cmp(&as_score[a])),
    }
    let mut rank = vec![0; sp.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
    Appraisal {
        nsp,
        nsn,
        as_score,
        rank,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdasResult {
    pub alternatives: Vec<String>,
    pub mean: Vec<f64>,
    pub pd: Vec<f64>,
    pub nd: Vec<f64>,
    pub sp: Vec<f64>,
    pub sn: Vec<f64>,
    pub nsp: Vec<f64>,
    pub nsn: Vec<f64>,
    pub as_score: Vec<f64>,
    pub rank: Vec<usize>,
}

impl EdasResult {
    /// `alternative,sp,sn,nsp,nsn,as,rank` in input order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::domain(e.to_string());
        w.write_record(["alternative", "sp", "sn", "nsp", "nsn", "as", "rank"])
            .map_err(err)?;
        for i in 0..self.alternatives.len() {
            w.write_record([
                self.alternatives[i].clone(),
                format!("{:.6}", self.sp[i]),
                format!("{:.6}", self.sn[i]),
                format!("{:.6}", self.nsp[i]),
                format!("{:.6}", self.nsn[i]),
                format!("{:.6}", self.as_score[i]),
                self.rank[i].to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::domain(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn rank(m: &DecisionMatrix, orientation: Orientation) -> Result<EdasResult> {
    let mean = mean_solution(m);
    let (pd, nd) = distances(m, &mean, orientation)?;
    let (sp, sn) = aggregate(&pd, &nd, &m.weights);
    let Appraisal {
        nsp,
        nsn,
        as_score,
        rank,
    } = appraise(&sp, &sn, orientation);
    Ok(EdasResult {
        alternatives: m.alternatives.clone(),
        mean,
        pd,
        nd,
        sp,
        sn,
        nsp,
        nsn,
        as_score,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benefit(name: &str) -> Criterion {
        Criterion {
            name: name.into(),
            kind: CriterionKind::Benefit,
        }
    }

    fn two_col(rows: &[(f64, f64)]) -> DecisionMatrix {
        DecisionMatrix::new(
            (0..rows.len()).map(|i| format!("a{i}")).collect(),
            vec![benefit("x"), benefit("y")],
            rows.iter().map(|&(a, b)| vec![a, b]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_alternative_mean() {
        let m = two_col(&[(0.3, 0.9)]);
        assert_eq!(mean_solution(&m), vec![0.3, 0.9]);
    }

    #[test]
    fn distance_examples() {
        let m = two_col(&[(0.4414, 0.7491)]).with_means(vec![0.7152, 0.7152]).unwrap();
        let (pd, nd) = distances(&m, &mean_solution(&m), Orientation::Shortfall).unwrap();
        assert!((pd[0] - 0.382838).abs() < 1e-5 && nd[0] == 0.0);
        assert!((nd[1] - 0.047399).abs() < 2e-4 && pd[1] == 0.0);
        let (pc, nc) = distances(&m, &mean_solution(&m), Orientation::Canonical).unwrap();
        assert_eq!((pc, nc), (nd, pd));
    }

    #[test]
    fn zero_mean_is_domain_error() {
        let m = two_col(&[(0.0, 1.0), (0.0, 0.5)]);
        assert!(matches!(
            distances(&m, &mean_solution(&m), Orientation::Shortfall),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cost_criterion_flips() {
        let m = DecisionMatrix::new(
            vec!["a".into(), "b".into()],
            vec![Criterion {
                name: "time".into(),
                kind: CriterionKind::Cost,
            }],
            vec![vec![1.0], vec![3.0]],
        )
        .unwrap();
        let (pd, nd) = distances(&m, &[2.0], Orientation::Shortfall).unwrap();
        assert_eq!(pd, vec![0.0, 0.5]);
        assert_eq!(nd, vec![0.5, 0.0]);
        let r = rank(&m, Orientation::Shortfall).unwrap();
        assert_eq!(r.rank, vec![1, 2]);
    }

    #[test]
    fn identical_alternatives_rank_by_row() {
        let m = two_col(&[(0.5, 0.5), (0.5, 0.5), (0.5, 0.5)]);
        let r = rank(&m, Orientation::Shortfall).unwrap();
        assert!(r.pd.iter().chain(&r.nd).all(|v| *v == 0.0));
        assert_eq!(r.rank, vec![1, 2, 3]);
        assert_eq!(r.nsp, vec![0.0; 3]);
        assert_eq!(r.nsn, vec![1.0; 3]);
    }

    #[test]
    fn printed_aggregates_reproduce_final_ranks() {
        let sp = [
            0.224785, 0.080281, 0.15652, 0.142291, 0.040052, 0.104429, 0.01307, 0.014611, 0.011015, 0.009473,
        ];
        let sn = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.023692, 0.023692, 0.048859, 0.055081];
        let a = appraise(&sp, &sn, Orientation::Shortfall);
        assert_eq!(a.rank, vec![10, 6, 9, 8, 5, 7, 3, 4, 2, 1]);
        assert!((a.as_score[1] - 0.678572).abs() < 1e-5);
        assert!((a.as_score[9] - 0.021072).abs() < 1e-5);
        assert_eq!(a.nsn[9], 0.0);
    }

    #[test]
    fn canonical_prefers_high_scores() {
        let m = two_col(&[(0.9, 0.9), (0.1, 0.2), (0.5, 0.5)]);
        assert_eq!(rank(&m, Orientation::Canonical).unwrap().rank[0], 1);
        assert_eq!(rank(&m, Orientation::Shortfall).unwrap().rank[0], 1);
        assert_eq!(rank(&m, Orientation::Shortfall).unwrap().rank[1], 3);
    }

    #[test]
    fn csv_round_trip() {
        let text = "alternative,zhao:benefit,shi\n# comment\nweights,0.5,0.166667\nmeans,0.7152,0.9731\nA,0.4414,0.7783\nB,0.7940,0.9178\n";
        let m = DecisionMatrix::from_csv(text).unwrap();
        assert_eq!(m.alternatives(), &["A".to_string(), "B".to_string()]);
        assert_eq!(m.weights(), &[0.5, 0.166667]);
        assert_eq!(mean_solution(&m), vec![0.7152, 0.9731]);
        let out = rank(&m, Orientation::Shortfall).unwrap().to_csv().unwrap();
        assert!(out.starts_with("alternative,sp,sn,nsp,nsn,as,rank\nA,0.224779,"));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            DecisionMatrix::from_csv("alternative,x:gain\nA,1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            DecisionMatrix::from_csv("alternative,x\nA,1\nB,abc\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(DecisionMatrix::from_csv("alternative,x\n").is_err());
        assert!(DecisionMatrix::from_csv("alternative,x,y\nweights,1,2,3\n").is_err());
    }
}
