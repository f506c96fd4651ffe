use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::corpus::{Category, SparseDoc, TermId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub epochs: usize,
    /// L2 regularization strength λ.
    pub reg: f64,
    pub seed: u64,
    /// Distance beyond which a document counts toward `μ_P` or `μ_N`.
    pub margin: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            epochs: 20,
            reg: 1e-4,
            seed: 0,
            margin: 1.0,
        }
    }
}

/// Linear soft-margin SVM: `s(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: f64,
    pub(crate) margin: f64,
}

impl SvmModel {
    pub fn weight(&self, term: TermId) -> f64 {
        self.weights.get(term.index()).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    #[inline]
    pub fn decision(&self, doc: &SparseDoc) -> f64 {
        let mut s = self.bias;
        for &(t, tf) in doc.terms() {
            if let Some(w) = self.weights.get(t.index()) {
                s += f64::from(tf) * w;
            }
        }
        s
    }
}

/// Pegasos-style stochastic subgradient descent on
/// `λ/2·(‖w‖² + b²) + mean hinge(y·(w·x + b))`.
///
/// The bias is trained as the weight of a constant feature, so it is
/// regularized too; this keeps the objective symmetric in the labels and makes
/// swapping P and N negate the solution exactly. Documents other than P and N
/// are ignored.
pub fn train_svm<'a>(
    docs: impl IntoIterator<Item = &'a SparseDoc>,
    params: &SvmParams,
) -> Result<SvmModel, ClassifierError> {
    if !(params.reg > 0.0 && params.reg.is_finite()) {
        return Err(ClassifierError::InvalidParameter {
            name: "reg",
            value: params.reg,
        });
    }
    if !(params.margin >= 0.0 && params.margin.is_finite()) {
        return Err(ClassifierError::InvalidParameter {
            name: "margin",
            value: params.margin,
        });
    }
    if params.epochs == 0 {
        return Err(ClassifierError::InvalidParameter {
            name: "epochs",
            value: 0.0,
        });
    }

    let mut examples: Vec<(&SparseDoc, f64)> = Vec::new();
    let mut id_space = 0;
    for doc in docs {
        let y = match doc.label {
            Some(Category::Positive) => 1.0,
            Some(Category::Negative) => -1.0,
            _ => continue,
        };
        if let Some(&(last, _)) = doc.terms().last() {
            id_space = id_space.max(last.index() + 1);
        }
        examples.push((doc, y));
    }
    for (c, y) in [(Category::Positive, 1.0), (Category::Negative, -1.0)] {
        if !examples.iter().any(|&(_, label)| label == y) {
            return Err(ClassifierError::EmptyCategory(c));
        }
    }
    // A fixed presentation order makes the result independent of input order.
    examples.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    // w = scale · v, so the shrink step is O(1) instead of O(|V|).
    let mut v = vec![0.0f64; id_space];
    let mut vb = 0.0f64;
    let mut scale = 1.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let lambda = params.reg;
    let mut t = 0u64;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            t += 1;
            let (doc, y) = examples[k];
            let eta = 1.0 / (lambda * t as f64);

            let mut s = vb;
            for &(term, tf) in doc.terms() {
                s += f64::from(tf) * v[term.index()];
            }
            let violated = y * s * scale < 1.0;

            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                vb = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if violated {
                let step = eta * y / scale;
                for &(term, tf) in doc.terms() {
                    v[term.index()] += step * f64::from(tf);
                }
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                vb *= scale;
                scale = 1.0;
            }
        }
    }

    let weights: Vec<f64> = v.iter().map(|x| x * scale).collect();
    let bias = vb * scale;
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(ClassifierError::Diverged);
    }
    Ok(SvmModel {
        weights,
        bias,
        margin: params.margin,
    })
}
