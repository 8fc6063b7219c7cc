use serde::{Deserialize, Serialize};

/// How the arm enters a reward model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One model per arm on the raw context.
    #[default]
    Separate,
    /// One model on `(e_a, x)`, length `K + p`.
    OneHot,
    /// One model on the context placed in block `a` of a length-`K p` vector.
    Multi,
}

impl Encoding {
    pub fn n_models(self, k: usize) -> usize {
        match self {
            Encoding::Separate => k,
            Encoding::OneHot | Encoding::Multi => 1,
        }
    }

    pub fn dim(self, k: usize, p: usize) -> usize {
        match self {
            Encoding::Separate => p,
            Encoding::OneHot => k + p,
            Encoding::Multi => k * p,
        }
    }

    /// Model index that owns arm `a`.
    pub fn model_of(self, a: usize) -> usize {
        match self {
            Encoding::Separate => a,
            Encoding::OneHot | Encoding::Multi => 0,
        }
    }

    /// Context feature behind encoded column `j`; `None` for arm indicators.
    pub fn feature_of(self, j: usize, k: usize, p: usize) -> Option<usize> {
        match self {
            Encoding::Separate => Some(j),
            Encoding::OneHot => j.checked_sub(k),
            Encoding::Multi => Some(j % p),
        }
    }

    pub fn encode(self, x: &[f64], a: usize, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim(k, x.len()));
        self.encode_into(x, a, k, &mut out);
        out
    }

    pub fn encode_into(self, x: &[f64], a: usize, k: usize, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Encoding::Separate => out.extend_from_slice(x),
            Encoding::OneHot => {
                out.extend((0..k).map(|b| if b == a { 1.0 } else { 0.0 }));
                out.extend_from_slice(x);
            }
            Encoding::Multi => {
                out.resize(k * x.len(), 0.0);
                out[a * x.len()..(a + 1) * x.len()].copy_from_slice(x);
            }
        }
    }
}
