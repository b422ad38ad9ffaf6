use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pairs_to_examples, SplitPlan, TrainError, TrainExample};
use crate::augment::DesignPair;
use crate::evaluate::{accuracy, WeightScorer};
use crate::kb::{FeatureCatalog, WeightProvenance, WeightTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    #[default]
    Logistic,
    LinearSvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// L2 strength on the coefficients (the intercept is not penalized).
    pub lambda: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    /// Half-width of the uniform initialization.
    pub init_scale: f64,
    /// Base step for the hinge subgradient schedule `lr / sqrt(t)`.
    pub svm_learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            max_epochs: 5000,
            tol: 1e-8,
            seed: 7,
            init_scale: 1e-2,
            svm_learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub family: ModelFamily,
    pub epochs: usize,
    pub converged: bool,
    pub seed: u64,
    pub lambda: f64,
    pub tol: f64,
    pub final_loss: f64,
    pub n_examples: usize,
    /// Examples left after opposing duplicates cancel.
    pub n_effective: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    pub coefficients: BTreeMap<String, f64>,
    pub intercept: f64,
    pub meta: TrainingMeta,
}

impl ModelCoefficients {
    pub fn decision(&self, catalog: &FeatureCatalog, x: &[f64]) -> f64 {
        catalog
            .names()
            .zip(x)
            .map(|(n, v)| self.coefficients.get(n).copied().unwrap_or(0.0) * v)
            .sum::<f64>()
            + self.intercept
    }
}

/// Weighted examples after cancellation: examples sharing a pair id and a
/// difference vector are summed by label, opposing ones cancel, and the
/// survivor carries `|net|` as weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NetExample {
    pub x: Vec<f64>,
    pub y: f64,
    pub weight: f64,
}

pub fn net_examples(examples: &[TrainExample]) -> Vec<NetExample> {
    let mut groups: Vec<(Vec<f64>, i64)> = Vec::new();
    let mut index: HashMap<(&str, Vec<u64>), usize> = HashMap::new();
    for e in examples {
        let bits: Vec<u64> = e.x.iter().map(|v| (v + 0.0).to_bits()).collect();
        let slot = *index.entry((e.pair_id.as_str(), bits)).or_insert_with(|| {
            groups.push((e.x.clone(), 0));
            groups.len() - 1
        });
        groups[slot].1 += i64::from(e.y);
    }
    groups
        .into_iter()
        .filter(|(_, net)| *net != 0)
        .map(|(x, net)| NetExample {
            x,
            y: net.signum() as f64,
            weight: net.unsigned_abs() as f64,
        })
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective and gradient at `params = [w.., b]` over raw examples
/// (netted internally). Returns `(loss, grad)` with the same layout.
pub fn loss_and_gradient(examples: &[TrainExample], params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let net = net_examples(examples);
    logistic_objective(&net, params, lambda)
}

fn logistic_objective(net: &[NetExample], params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let total: f64 = net.iter().map(|e| e.weight).sum();
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    if total > 0.0 {
        for e in net {
            let z = dot(w, &e.x) + b;
            // -log sigma(y z) = softplus(-y z)
            loss += e.weight * softplus(-e.y * z);
            let g = -e.y * sigmoid(-e.y * z) * e.weight;
            for (gi, xi) in grad.iter_mut().zip(&e.x) {
                *gi += g * xi;
            }
            grad[d] += g;
        }
        loss /= total;
        for g in &mut grad {
            *g /= total;
        }
    }
    loss += 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    for (gi, wi) in grad.iter_mut().zip(w) {
        *gi += lambda * wi;
    }
    (loss, grad)
}

fn hinge_objective(net: &[NetExample], params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let total: f64 = net.iter().map(|e| e.weight).sum();
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    if total > 0.0 {
        for e in net {
            let margin = e.y * (dot(w, &e.x) + b);
            if margin < 1.0 {
                loss += e.weight * (1.0 - margin);
                let g = -e.y * e.weight;
                for (gi, xi) in grad.iter_mut().zip(&e.x) {
                    *gi += g * xi;
                }
                grad[d] += g;
            }
        }
        loss /= total;
        for g in &mut grad {
            *g /= total;
        }
    }
    loss += 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    for (gi, wi) in grad.iter_mut().zip(w) {
        *gi += lambda * wi;
    }
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Prepared {
    net: Vec<NetExample>,
    init: Vec<f64>,
}

fn prepare(examples: &[TrainExample], catalog: &FeatureCatalog, config: &TrainConfig) -> Result<Prepared, TrainError> {
    let d = catalog.len();
    let net = net_examples(examples);
    let pos = net.iter().any(|e| e.y > 0.0);
    let neg = net.iter().any(|e| e.y < 0.0);
    if !(pos && neg) {
        return Err(TrainError::SingleClass);
    }
    // Columns that never vary stay exactly zero: only the penalty would
    // touch them, and a decayed random value would survive the sign clamp.
    let support: Vec<bool> = (0..d).map(|j| net.iter().any(|e| e.x[j] != 0.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = vec![0.0; d + 1];
    for j in 0..d {
        let v = rng.random_range(-config.init_scale..=config.init_scale);
        if support[j] {
            init[j] = v;
        }
    }
    Ok(Prepared { net, init })
}

fn finish(
    catalog: &FeatureCatalog,
    params: Vec<f64>,
    meta: TrainingMeta,
) -> Result<ModelCoefficients, TrainError> {
    let d = catalog.len();
    let mut coefficients = BTreeMap::new();
    for (name, v) in catalog.names().zip(&params[..d]) {
        if !v.is_finite() {
            return Err(TrainError::NonFiniteCoefficient(name.to_string()));
        }
        coefficients.insert(name.to_string(), *v);
    }
    Ok(ModelCoefficients {
        coefficients,
        intercept: params[d],
        meta,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// L2-regularized logistic regression by full-batch gradient descent with
/// backtracking line search.
pub fn train_logistic(
    examples: &[TrainExample],
    catalog: &FeatureCatalog,
    config: &TrainConfig,
) -> Result<ModelCoefficients, TrainError> {
    let Prepared { net, init } = prepare(examples, catalog, config)?;
    let mut params = init;
    let (mut loss, mut grad) = logistic_objective(&net, &params, config.lambda);
    let mut step: f64 = 1.0;
    let mut epochs = 0;
    let mut converged = false;
    while epochs < config.max_epochs {
        epochs += 1;
        let gg: f64 = grad.iter().map(|g| g * g).sum();
        if gg == 0.0 {
            converged = true;
            break;
        }
        step = (step * 2.0).min(1e4);
        let (next, next_loss, next_grad) = loop {
            let cand: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let (l, g) = logistic_objective(&net, &cand, config.lambda);
            if !l.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch: epochs,
                    last_loss: loss,
                    weight_norm: norm(&params),
                });
            }
            if l <= loss - 0.5 * step * gg || step < 1e-12 {
                break (cand, l, g);
            }
            step *= 0.5;
        };
        let delta = loss - next_loss;
        params = next;
        loss = next_loss;
        grad = next_grad;
        if delta.abs() < config.tol {
            converged = true;
            break;
        }
    }
    let meta = TrainingMeta {
        family: ModelFamily::Logistic,
        epochs,
        converged,
        seed: config.seed,
        lambda: config.lambda,
        tol: config.tol,
        final_loss: loss,
        n_examples: examples.len(),
        n_effective: net.len(),
    };
    finish(catalog, params, meta)
}

/// Linear SVM by hinge-loss subgradient descent with step `lr / sqrt(t)`.
/// The iterate with the lowest objective is returned.
pub fn train_linear_svm(
    examples: &[TrainExample],
    catalog: &FeatureCatalog,
    config: &TrainConfig,
) -> Result<ModelCoefficients, TrainError> {
    let Prepared { net, init } = prepare(examples, catalog, config)?;
    let mut params = init;
    let (mut loss, mut grad) = hinge_objective(&net, &params, config.lambda);
    let mut best = (loss, params.clone());
    let mut epochs = 0;
    let mut converged = false;
    let mut stall = 0;
    while epochs < config.max_epochs {
        epochs += 1;
        if grad.iter().all(|g| *g == 0.0) {
            converged = true;
            break;
        }
        let step = config.svm_learning_rate / (epochs as f64).sqrt();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= step * g;
        }
        (loss, grad) = hinge_objective(&net, &params, config.lambda);
        if !loss.is_finite() {
            return Err(TrainError::NonFinite {
                epoch: epochs,
                last_loss: best.0,
                weight_norm: norm(&params),
            });
        }
        if loss < best.0 - config.tol {
            best = (loss, params.clone());
            stall = 0;
        } else {
            stall += 1;
            if loss < best.0 {
                best = (loss, params.clone());
            }
            // subgradient steps rarely settle; stop after a long plateau
            if stall >= 500 {
                converged = true;
                break;
            }
        }
    }
    let meta = TrainingMeta {
        family: ModelFamily::LinearSvm,
        epochs,
        converged,
        seed: config.seed,
        lambda: config.lambda,
        tol: config.tol,
        final_loss: best.0,
        n_examples: examples.len(),
        n_effective: net.len(),
    };
    finish(catalog, best.1, meta)
}

pub fn train(
    examples: &[TrainExample],
    catalog: &FeatureCatalog,
    family: ModelFamily,
    config: &TrainConfig,
) -> Result<ModelCoefficients, TrainError> {
    match family {
        ModelFamily::Logistic => train_logistic(examples, catalog, config),
        ModelFamily::LinearSvm => train_linear_svm(examples, catalog, config),
    }
}

/// Pairs in, coefficients out.
pub fn fit_pairs(
    pairs: &[DesignPair],
    catalog: &FeatureCatalog,
    family: ModelFamily,
    config: &TrainConfig,
) -> Result<ModelCoefficients, TrainError> {
    let examples = pairs_to_examples(pairs, catalog)?;
    train(&examples, catalog, family, config)
}

/// `round_half_away_from_zero(1000 c)`, with nonzero coefficients kept at
/// least one unit away from zero. The intercept is dropped.
pub fn coefficients_to_weights(coeffs: &ModelCoefficients) -> WeightTable {
    let weights = coeffs
        .coefficients
        .iter()
        .map(|(k, &c)| {
            let mut w = (1000.0 * c).round() as i64;
            if w == 0 && c != 0.0 {
                w = if c > 0.0 { 1 } else { -1 };
            }
            (k.clone(), w)
        })
        .collect();
    WeightTable::new(weights, WeightProvenance::Learned)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub n: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub family: ModelFamily,
    pub folds: Vec<FoldScore>,
    pub mean: f64,
}

/// Trains on all folds but one and scores compliance on the one left out.
/// Folds run on scoped threads; each run is deterministic.
pub fn cross_validate(
    pairs: &[DesignPair],
    plan: &SplitPlan,
    family: ModelFamily,
    catalog: &FeatureCatalog,
    config: &TrainConfig,
) -> Result<CvReport, TrainError> {
    let by_id: HashMap<&str, &DesignPair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut cells: Vec<Vec<DesignPair>> = Vec::with_capacity(plan.folds.len());
    for (i, fold) in plan.folds.iter().enumerate() {
        if fold.is_empty() {
            return Err(TrainError::EmptyFold(i));
        }
        let mut cell = Vec::with_capacity(fold.len());
        for id in fold {
            let p = by_id.get(id.as_str()).ok_or_else(|| TrainError::UnknownPair(id.clone()))?;
            cell.push((*p).clone());
        }
        cells.push(cell);
    }
    let results: Vec<Result<FoldScore, TrainError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cells.len())
            .map(|i| {
                let cells = &cells;
                s.spawn(move || {
                    let train_pairs: Vec<DesignPair> = cells
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .flat_map(|(_, c)| c.iter().cloned())
                        .collect();
                    let model = fit_pairs(&train_pairs, catalog, family, config)?;
                    let weights = coefficients_to_weights(&model);
                    let scorer = WeightScorer::new(catalog, &weights);
                    let acc = accuracy(&cells[i], &scorer, &[])?;
                    Ok(FoldScore {
                        fold: i,
                        n: cells[i].len(),
                        accuracy: acc[0].accuracy.unwrap_or(0.0),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(CvReport { family, folds, mean })
}
