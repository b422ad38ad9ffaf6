use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::kb::{FeatureVector, WeightTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightShift {
    pub feature: String,
    pub before: i64,
    pub after: i64,
    pub frequency: f64,
    pub shift: f64,
}

/// `(after - before) * frequency` per feature, largest magnitude first.
pub fn weight_shift_report(
    before: &WeightTable,
    after: &WeightTable,
    freq: &BTreeMap<String, f64>,
) -> Result<Vec<WeightShift>, EvalError> {
    let names: BTreeSet<&String> = before.weights.keys().chain(after.weights.keys()).collect();
    let mut out = names
        .into_iter()
        .map(|f| {
            let b = before.get(f).ok_or_else(|| EvalError::Domain(f.clone()))?;
            let a = after.get(f).ok_or_else(|| EvalError::Domain(f.clone()))?;
            let frequency = freq.get(f).copied().unwrap_or(0.0);
            Ok(WeightShift {
                feature: f.clone(),
                before: b,
                after: a,
                frequency,
                shift: (a - b) as f64 * frequency,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    out.sort_by(|x, y| {
        y.shift
            .abs()
            .total_cmp(&x.shift.abs())
            .then_with(|| x.feature.cmp(&y.feature))
    });
    Ok(out)
}

pub fn shifts_to_csv(rows: &[WeightShift]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "before", "after", "frequency", "shift"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.feature.clone(),
            r.before.to_string(),
            r.after.to_string(),
            r.frequency.to_string(),
            r.shift.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMatrix {
    pub groups: Vec<String>,
    /// `None` where fewer than two vectors (diagonal) or no vectors exist.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Zero vectors dropped per group.
    pub excluded_zero: BTreeMap<String, usize>,
}

impl CosineMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.groups.iter().position(|g| g == a)?;
        let j = self.groups.iter().position(|g| g == b)?;
        self.cells[i][j]
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::from("group")];
        header.extend(self.groups.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (g, row) in self.groups.iter().zip(&self.cells) {
            let mut rec = vec![g.clone()];
            rec.extend(row.iter().map(|c| c.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

fn cosine(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let dot: f64 = a.iter().map(|(k, v)| f64::from(v) * f64::from(b.get(k))).sum();
    let norm = |x: &FeatureVector| x.iter().map(|(_, v)| f64::from(v).powi(2)).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

/// Mean pairwise cosine between groups; the diagonal averages distinct
/// within-group pairs.
pub fn group_cosine_similarity(groups: &BTreeMap<String, Vec<FeatureVector>>) -> CosineMatrix {
    let names: Vec<String> = groups.keys().cloned().collect();
    let mut excluded_zero = BTreeMap::new();
    let kept: Vec<Vec<&FeatureVector>> = groups
        .iter()
        .map(|(g, vs)| {
            let nz: Vec<&FeatureVector> = vs.iter().filter(|v| !v.is_zero()).collect();
            excluded_zero.insert(g.clone(), vs.len() - nz.len());
            nz
        })
        .collect();
    let n = names.len();
    let mut cells = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let (mut sum, mut count) = (0.0, 0usize);
            if i == j {
                let g = &kept[i];
                for a in 0..g.len() {
                    for b in a + 1..g.len() {
                        sum += cosine(g[a], g[b]);
                        count += 1;
                    }
                }
            } else {
                for a in &kept[i] {
                    for b in &kept[j] {
                        sum += cosine(a, b);
                        count += 1;
                    }
                }
            }
            let v = (count > 0).then(|| sum / count as f64);
            cells[i][j] = v;
            cells[j][i] = v;
        }
    }
    CosineMatrix {
        groups: names,
        cells,
        excluded_zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::WeightProvenance;

    fn wt(p: &[(&str, i64)]) -> WeightTable {
        WeightTable::new(p.iter().map(|&(k, v)| (k.to_string(), v)).collect(), WeightProvenance::Manual)
    }

    #[test]
    fn shift_by_hand() {
        let a = wt(&[("x", 10), ("y", -4), ("z", 7)]);
        let b = wt(&[("x", 30), ("y", -10), ("z", 100)]);
        let freq: BTreeMap<String, f64> = [("x".into(), 0.5), ("y".into(), 2.0), ("z".into(), 0.0)].into();
        let r = weight_shift_report(&a, &b, &freq).unwrap();
        let got: Vec<(&str, f64)> = r.iter().map(|s| (s.feature.as_str(), s.shift)).collect();
        assert_eq!(got, vec![("y", -12.0), ("x", 10.0), ("z", 0.0)]);
        assert!(weight_shift_report(&a, &a, &freq).unwrap().iter().all(|s| s.shift == 0.0));
    }

    #[test]
    fn shift_needs_shared_domain() {
        assert!(matches!(
            weight_shift_report(&wt(&[("x", 1)]), &wt(&[("y", 1)]), &BTreeMap::new()),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn cosine_cases() {
        let fv = |p: &[(&str, u32)]| p.iter().map(|&(k, v)| (k, v)).collect::<FeatureVector>();
        let groups: BTreeMap<String, Vec<FeatureVector>> = [
            ("a".to_string(), vec![fv(&[("x", 1)]), fv(&[("x", 3)]), FeatureVector::new()]),
            ("b".to_string(), vec![fv(&[("y", 2)])]),
        ]
        .into();
        let m = group_cosine_similarity(&groups);
        assert_eq!(m.get("a", "b"), Some(0.0));
        assert!((m.get("a", "a").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get("b", "b"), None);
        assert_eq!(m.excluded_zero["a"], 1);
        assert!(m.to_csv().starts_with("group,a,b\n"));
    }
}
