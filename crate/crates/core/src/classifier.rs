//! Nearest common vector classification.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kdcv::CommonVectors;

/// Dissimilarity between a discriminant vector and a class template.
/// Smaller is closer for all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Sum of absolute differences.
    L1,
    /// Squared Euclidean distance (no square root).
    L2,
    /// Negated cosine similarity, in `[-1, 1]`.
    Cos,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::L1, Measure::L2, Measure::Cos];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::L1 => "l1",
            Measure::L2 => "l2",
            Measure::Cos => "cos",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Measure::L1),
            "l2" => Ok(Measure::L2),
            "cos" | "cosine" => Ok(Measure::Cos),
            other => Err(Error::InvalidParameter(format!(
                "unknown measure `{other}` (expected l1, l2 or cos)"
            ))),
        }
    }
}

pub fn score(measure: Measure, y: &[f64], m: &[f64]) -> Result<f64> {
    if y.len() != m.len() {
        return Err(Error::dims(m.len(), y.len(), "discriminant vector"));
    }
    Ok(match measure {
        Measure::L1 => y.iter().zip(m).map(|(a, b)| (a - b).abs()).sum(),
        Measure::L2 => y.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum(),
        Measure::Cos => {
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ny == 0.0 || nm == 0.0 {
                return Err(Error::Undefined(
                    "cosine measure with a zero vector".into(),
                ));
            }
            let dot: f64 = y.iter().zip(m).map(|(a, b)| a * b).sum();
            (-dot / (ny * nm)).clamp(-1.0, 1.0)
        }
    })
}

/// Classes ordered from closest to farthest.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    entries: Vec<(usize, f64)>,
}

impl Ranking {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn predicted(&self) -> usize {
        self.entries[0].0
    }

    pub fn best_score(&self) -> f64 {
        self.entries[0].1
    }

    /// Zero-based position of `class`, if present.
    pub fn rank_of(&self, class: usize) -> Option<usize> {
        self.entries.iter().position(|&(c, _)| c == class)
    }

    pub fn top(&self, n: usize) -> &[(usize, f64)] {
        &self.entries[..n.min(self.entries.len())]
    }
}

/// Score `y` against every template; ties go to the smaller class id.
pub fn classify(templates: &CommonVectors, y: &[f64], measure: Measure) -> Result<Ranking> {
    let mut entries = templates
        .rows()
        .iter()
        .enumerate()
        .map(|(class, m)| Ok((class, score(measure, y, m)?)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    Ok(Ranking { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn templates(rows: Vec<Vec<f64>>) -> CommonVectors {
        CommonVectors::new(rows).unwrap()
    }

    #[test]
    fn identical_vectors() {
        let v = [0.5, -1.5, 2.0];
        assert_eq!(score(Measure::L1, &v, &v).unwrap(), 0.0);
        assert_eq!(score(Measure::L2, &v, &v).unwrap(), 0.0);
        assert!((score(Measure::Cos, &v, &v).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_arithmetic() {
        let (y, m) = ([1.0, 2.0], [2.0, 4.0]);
        assert_eq!(score(Measure::L1, &y, &m).unwrap(), 3.0);
        assert_eq!(score(Measure::L2, &y, &m).unwrap(), 5.0);
        assert!((score(Measure::Cos, &y, &m).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(score(Measure::Cos, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_with_zero_vector_is_undefined() {
        assert!(score(Measure::Cos, &[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(score(Measure::L2, &[0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn exact_match_wins() {
        let t = templates((0..5).map(|c| vec![c as f64, 1.0 - c as f64]).collect());
        let r = classify(&t, &[3.0, -2.0], Measure::L2).unwrap();
        assert_eq!(r.predicted(), 3);
        assert_eq!(r.best_score(), 0.0);
        assert_eq!(r.entries().len(), 5);
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let t = templates(vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
        let r = classify(&t, &[1.0, -1.0], Measure::L2).unwrap();
        assert_eq!(r.entries()[0], (1, 2.0));
        assert_eq!(r.entries()[1].0, 2);
        assert_eq!(r.predicted(), 1);
    }

    #[test]
    fn parses_measures() {
        assert_eq!("COS".parse::<Measure>().unwrap(), Measure::Cos);
        assert!("l3".parse::<Measure>().is_err());
    }

    fn vecs(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), n)
    }

    proptest! {
        #[test]
        fn ranking_matches_brute_force(rows in vecs(5), y in prop::collection::vec(-10.0f64..10.0, 3)) {
            let t = templates(rows.clone());
            for measure in [Measure::L1, Measure::L2] {
                let r = classify(&t, &y, measure).unwrap();
                let mut expected: Vec<(usize, f64)> = rows.iter().enumerate()
                    .map(|(c, m)| (c, score(measure, &y, m).unwrap())).collect();
                expected.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
                prop_assert_eq!(r.entries(), &expected[..]);
                prop_assert!(r.entries().windows(2).all(|w| w[0].1 <= w[1].1));
            }
        }

        #[test]
        fn cosine_order_ignores_scale(rows in vecs(4), y in prop::collection::vec(0.1f64..10.0, 3), alpha in 0.01f64..100.0) {
            prop_assume!(rows.iter().all(|r| r.iter().any(|v| *v != 0.0)));
            let t = templates(rows);
            let scaled: Vec<f64> = y.iter().map(|v| v * alpha).collect();
            let a: Vec<usize> = classify(&t, &y, Measure::Cos).unwrap().entries().iter().map(|e| e.0).collect();
            let b: Vec<usize> = classify(&t, &scaled, Measure::Cos).unwrap().entries().iter().map(|e| e.0).collect();
            // scaling may perturb scores in the last ulp; compare only well separated orders
            let scores: Vec<f64> = classify(&t, &y, Measure::Cos).unwrap().entries().iter().map(|e| e.1).collect();
            prop_assume!(scores.windows(2).all(|w| w[1] - w[0] > 1e-12));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn squared_and_true_euclidean_agree(rows in vecs(6), y in prop::collection::vec(-10.0f64..10.0, 3)) {
            let t = templates(rows.clone());
            let squared: Vec<usize> = classify(&t, &y, Measure::L2).unwrap().entries().iter().map(|e| e.0).collect();
            let mut root: Vec<(usize, f64)> = rows.iter().enumerate()
                .map(|(c, m)| (c, score(Measure::L2, &y, m).unwrap().sqrt())).collect();
            root.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            prop_assert_eq!(squared, root.iter().map(|e| e.0).collect::<Vec<_>>());
        }

        #[test]
        fn relabeling_permutes_ranking(rows in vecs(4), y in prop::collection::vec(-10.0f64..10.0, 3)) {
            let perm = [2usize, 0, 3, 1];
            let mut permuted = vec![Vec::new(); 4];
            for (old, row) in rows.iter().enumerate() {
                permuted[perm[old]] = row.clone();
            }
            let a = classify(&templates(rows), &y, Measure::L1).unwrap();
            let b = classify(&templates(permuted), &y, Measure::L1).unwrap();
            let scores: Vec<f64> = a.entries().iter().map(|e| e.1).collect();
            prop_assume!(scores.windows(2).all(|w| w[0] != w[1]));
            let mapped: Vec<usize> = a.entries().iter().map(|e| perm[e.0]).collect();
            prop_assert_eq!(mapped, b.entries().iter().map(|e| e.0).collect::<Vec<_>>());
        }
    }
}
