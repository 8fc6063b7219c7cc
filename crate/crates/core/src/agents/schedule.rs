use serde::{Deserialize, Serialize};

/// Rule deciding when the posterior is recomputed. A refresh fires at round
/// `t >= 2` when `index(t) > index(t - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefreshSchedule {
    /// `ceil(c * ln t)`.
    Logarithmic { c: f64 },
    /// `ceil(c * sqrt t)`.
    SquareRoot { c: f64 },
    /// `floor(t / n)`.
    EveryN { n: u64 },
}

impl Default for RefreshSchedule {
    fn default() -> Self {
        RefreshSchedule::Logarithmic { c: 8.0 }
    }
}

impl RefreshSchedule {
    pub fn index(&self, t: u64) -> i64 {
        assert!(t >= 1, "rounds start at 1");
        match *self {
            RefreshSchedule::Logarithmic { c } => (c * (t as f64).ln()).ceil() as i64,
            RefreshSchedule::SquareRoot { c } => (c * (t as f64).sqrt()).ceil() as i64,
            RefreshSchedule::EveryN { n } => (t / n.max(1)) as i64,
        }
    }

    pub fn fires(&self, t: u64) -> bool {
        t >= 2 && self.index(t) > self.index(t - 1)
    }

    /// Rounds in `1..=horizon` at which the schedule fires.
    pub fn events(&self, horizon: u64) -> Vec<u64> {
        (1..=horizon).filter(|&t| self.fires(t)).collect()
    }
}

/// `ceil(8 ln t)`, the default refresh index.
pub fn refresh_index(t: u64, schedule: &RefreshSchedule) -> i64 {
    schedule.index(t)
}
