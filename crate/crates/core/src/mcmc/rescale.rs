use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Affine map sending `min(y)` to -0.5 and `max(y)` to +0.5.
///
/// `scaled = (y - center) / (2 * half_range)`. Constant responses use
/// `center = y[0]`, `half_range = 1`, so every value maps to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescale<F> {
    pub center: F,
    pub half_range: F,
}

impl<F: Real> Rescale<F> {
    pub fn identity() -> Self {
        Rescale {
            center: F::zero(),
            half_range: F::lit(0.5),
        }
    }

    /// Panics on an empty slice.
    pub fn fit(y: &[F]) -> Self {
        let (lo, hi) = y
            .iter()
            .fold((y[0], y[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi > lo {
            Rescale {
                center: (lo + hi) * F::lit(0.5),
                half_range: (hi - lo) * F::lit(0.5),
            }
        } else {
            Rescale {
                center: y[0],
                half_range: F::one(),
            }
        }
    }

    pub fn is_degenerate_for(&self, y: &[F]) -> bool {
        y.iter().all(|&v| v == y[0])
    }

    /// Width of the original-scale interval mapped onto [-0.5, 0.5].
    pub fn width(&self) -> F {
        self.half_range + self.half_range
    }

    pub fn forward(&self, y: F) -> F {
        (y - self.center) / self.width()
    }

    pub fn inverse(&self, scaled: F) -> F {
        self.center + scaled * self.width()
    }

    /// Converts a variance on the scaled axis to the original axis.
    pub fn variance_to_original(&self, v: F) -> F {
        v * self.width() * self.width()
    }

    pub fn variance_to_scaled(&self, v: F) -> F {
        v / (self.width() * self.width())
    }
}

/// Scales a response vector, returning the scaled values and the map.
pub fn rescale_response<F: Real>(y: &[F]) -> (Vec<F>, Rescale<F>) {
    let map = Rescale::fit(y);
    (y.iter().map(|&v| map.forward(v)).collect(), map)
}
