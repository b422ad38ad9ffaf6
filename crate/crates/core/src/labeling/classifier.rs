use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{primitive_diff_vector, LabelError, LabelRecord, Vocabulary};
use crate::augment::{DesignPair, Label, LabelProvenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Folds for the self-reported CV accuracy; below 2 skips it.
    pub cv_folds: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 200,
            learning_rate: 0.01,
            seed: 7,
            cv_folds: 5,
        }
    }
}

/// One-hidden-layer network made antisymmetric by construction:
/// `f(x) = g(x) - g(-x)` with `g(x) = v . tanh(W x + b)`, and
/// `P(right preferred) = sigmoid(f(x))` for `x` the left-minus-right
/// primitive difference. Swapping a pair negates `x` and hence `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceClassifier {
    pub vocab: Vocabulary,
    pub config: ClassifierConfig,
    w: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    pub train_accuracy: f64,
    pub cv_accuracy: Option<f64>,
}

struct Sample {
    nz: Vec<(usize, f64)>,
    target: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn target(label: Label) -> f64 {
    (f64::from(label.value()) + 1.0) / 2.0
}

impl PreferenceClassifier {
    fn decision_sparse(&self, nz: &[(usize, f64)]) -> f64 {
        let d = self.vocab.len();
        let mut f = 0.0;
        for k in 0..self.b.len() {
            let u: f64 = nz.iter().map(|&(j, x)| self.w[k * d + j] * x).sum();
            f += self.v[k] * ((self.b[k] + u).tanh() - (self.b[k] - u).tanh());
        }
        f
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let nz: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        self.decision_sparse(&nz)
    }

    /// Probability that the right design is preferred.
    pub fn prob_right(&self, pair: &DesignPair) -> Result<f64, LabelError> {
        let x = primitive_diff_vector(pair, &self.vocab)?;
        Ok(sigmoid(self.decision(&x)))
    }

    /// Sign of the decision (0 exactly on the boundary) and the larger class
    /// probability.
    pub fn predict(&self, pair: &DesignPair) -> Result<(Label, f64), LabelError> {
        let x = primitive_diff_vector(pair, &self.vocab)?;
        let f = self.decision(&x);
        let p = sigmoid(f);
        let label = if f > 0.0 {
            Label::Right
        } else if f < 0.0 {
            Label::Left
        } else {
            Label::Equal
        };
        Ok((label, p.max(1.0 - p)))
    }

    fn init(vocab: Vocabulary, config: &ClassifierConfig) -> Self {
        let (d, h) = (vocab.len(), config.hidden.max(1));
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let a1 = (6.0 / (d + h) as f64).sqrt();
        let a2 = (6.0 / (h + 1) as f64).sqrt();
        let w = (0..h * d).map(|_| rng.random_range(-a1..a1)).collect();
        // nonzero biases, otherwise their gradient is identically zero
        let b = (0..h).map(|_| rng.random_range(-0.5..0.5)).collect();
        let v = (0..h).map(|_| rng.random_range(-a2..a2)).collect();
        Self {
            vocab,
            config: config.clone(),
            w,
            b,
            v,
            train_accuracy: 0.0,
            cv_accuracy: None,
        }
    }

    /// Full-batch Adam on mean cross-entropy. Ties train toward 0.5.
    fn fit(&mut self, data: &[Sample]) {
        let (d, h) = (self.vocab.len(), self.b.len());
        let n = data.len() as f64;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let sizes = [h * d, h, h];
        let mut m: Vec<Vec<f64>> = sizes.iter().map(|s| vec![0.0; *s]).collect();
        let mut s2: Vec<Vec<f64>> = sizes.iter().map(|s| vec![0.0; *s]).collect();
        for t in 1..=self.config.epochs {
            let mut gw = vec![0.0; h * d];
            let mut gb = vec![0.0; h];
            let mut gv = vec![0.0; h];
            for s in data {
                let mut hp = vec![0.0; h];
                let mut hm = vec![0.0; h];
                let mut f = 0.0;
                for k in 0..h {
                    let u: f64 = s.nz.iter().map(|&(j, x)| self.w[k * d + j] * x).sum();
                    hp[k] = (self.b[k] + u).tanh();
                    hm[k] = (self.b[k] - u).tanh();
                    f += self.v[k] * (hp[k] - hm[k]);
                }
                let delta = (sigmoid(f) - s.target) / n;
                for k in 0..h {
                    let (dp, dm) = (1.0 - hp[k] * hp[k], 1.0 - hm[k] * hm[k]);
                    gv[k] += delta * (hp[k] - hm[k]);
                    gb[k] += delta * self.v[k] * (dp - dm);
                    let gu = delta * self.v[k] * (dp + dm);
                    for &(j, x) in &s.nz {
                        gw[k * d + j] += gu * x;
                    }
                }
            }
            let lr_t = self.config.learning_rate * (1.0 - f64::powi(b2, t as i32)).sqrt()
                / (1.0 - f64::powi(b1, t as i32));
            for (i, (p, g)) in [(&mut self.w, &gw), (&mut self.b, &gb), (&mut self.v, &gv)]
                .into_iter()
                .enumerate()
            {
                for ((pj, gj), (mj, sj)) in p.iter_mut().zip(g).zip(m[i].iter_mut().zip(s2[i].iter_mut())) {
                    *mj = b1 * *mj + (1.0 - b1) * gj;
                    *sj = b2 * *sj + (1.0 - b2) * gj * gj;
                    *pj -= lr_t * *mj / (sj.sqrt() + eps);
                }
            }
        }
    }

    fn accuracy(&self, data: &[Sample]) -> f64 {
        let scored: Vec<&Sample> = data.iter().filter(|s| s.target != 0.5).collect();
        if scored.is_empty() {
            return 0.0;
        }
        let ok = scored
            .iter()
            .filter(|s| (self.decision_sparse(&s.nz) > 0.0) == (s.target > 0.5))
            .count();
        ok as f64 / scored.len() as f64
    }
}

fn samples(pairs: &[&DesignPair], vocab: &Vocabulary) -> Result<Vec<Sample>, LabelError> {
    pairs
        .iter()
        .map(|p| {
            let x = primitive_diff_vector(p, vocab)?;
            Ok(Sample {
                nz: x.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect(),
                target: target(p.label.expect("filtered to labeled")),
            })
        })
        .collect()
}

fn classes(pairs: &[&DesignPair]) -> usize {
    let mut seen: Vec<Label> = pairs.iter().filter_map(|p| p.label).collect();
    seen.sort();
    seen.dedup();
    seen.len()
}

/// Trains on the labeled pairs (unlabeled ones are ignored) and reports
/// k-fold CV accuracy on the decisive (non-tie) labels.
pub fn train_classifier_labeler(
    pairs: &[DesignPair],
    config: &ClassifierConfig,
) -> Result<PreferenceClassifier, LabelError> {
    let labeled: Vec<&DesignPair> = pairs.iter().filter(|p| p.label.is_some()).collect();
    if labeled.is_empty() {
        return Err(LabelError::NoLabels);
    }
    if classes(&labeled) < 2 {
        return Err(LabelError::SingleClass);
    }
    let vocab = Vocabulary::from_pairs(labeled.iter().copied())?;
    let data = samples(&labeled, &vocab)?;
    let mut model = PreferenceClassifier::init(vocab.clone(), config);
    model.fit(&data);
    model.train_accuracy = model.accuracy(&data);
    model.cv_accuracy = cross_validate(&labeled, config)?;
    Ok(model)
}

fn cross_validate(labeled: &[&DesignPair], config: &ClassifierConfig) -> Result<Option<f64>, LabelError> {
    let k = config.cv_folds;
    if k < 2 || labeled.len() < k {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let folds: Vec<Vec<usize>> = (0..k).map(|f| order.iter().copied().skip(f).step_by(k).collect()).collect();
    let scores: Vec<Result<Option<(f64, usize)>, LabelError>> = std::thread::scope(|s| {
        let handles: Vec<_> = folds
            .iter()
            .map(|held| {
                s.spawn(move || {
                    let train: Vec<&DesignPair> = (0..labeled.len())
                        .filter(|i| !held.contains(i))
                        .map(|i| labeled[i])
                        .collect();
                    if classes(&train) < 2 {
                        return Ok(None);
                    }
                    let vocab = Vocabulary::from_pairs(train.iter().copied())?;
                    let mut m = PreferenceClassifier::init(vocab.clone(), config);
                    m.fit(&samples(&train, &vocab)?);
                    let test: Vec<&DesignPair> = held.iter().map(|&i| labeled[i]).collect();
                    let test = samples(&test, &vocab)?;
                    let n = test.iter().filter(|s| s.target != 0.5).count();
                    Ok((n > 0).then(|| (m.accuracy(&test), n)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("cv worker panicked")).collect()
    });
    let mut total = 0.0;
    let mut n = 0;
    for s in scores {
        if let Some((acc, m)) = s? {
            total += acc * m as f64;
            n += m;
        }
    }
    Ok((n > 0).then(|| total / n as f64))
}

/// One ML record per pair: the decision's sign as label and the larger class
/// probability as confidence.
pub fn classify_labels(model: &PreferenceClassifier, pairs: &[DesignPair]) -> Result<Vec<LabelRecord>, LabelError> {
    pairs
        .iter()
        .map(|p| {
            let (label, confidence) = model.predict(p)?;
            Ok(LabelRecord::new(&p.id, label, LabelProvenance::Ml, confidence))
        })
        .collect()
}
