use rand::Rng;
use rayon::prelude::*;

use crate::env::LoggedPanel;
use crate::error::{Error, Result};
use crate::rng::{derive, stream};

/// Concatenates the rows of the listed clusters (indices into
/// [`LoggedPanel::clusters`]), each cluster keeping its row order.
pub fn resample_clusters(panel: &LoggedPanel, clusters: &[Vec<usize>], picks: &[usize]) -> LoggedPanel {
    let rows: Vec<usize> = picks.iter().flat_map(|&c| clusters[c].iter().copied()).collect();
    panel.subset(&rows)
}

/// Evaluates `statistic` on `b` cluster-bootstrap resamples. Replicate `i`
/// draws from its own stream `derive(seed, i)`, so results do not depend on
/// scheduling.
pub fn cluster_bootstrap<T, S>(panel: &LoggedPanel, b: usize, seed: u64, statistic: S) -> Result<Vec<T>>
where
    T: Send,
    S: Fn(usize, &LoggedPanel) -> T + Sync,
{
    let clusters = panel.clusters();
    if clusters.len() < 2 {
        return Err(Error::TooFewClusters(clusters.len()));
    }
    let n_c = clusters.len();
    Ok((0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(derive(seed, i as u64));
            let picks: Vec<usize> = (0..n_c).map(|_| rng.random_range(0..n_c)).collect();
            statistic(i, &resample_clusters(panel, &clusters, &picks))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_synthetic_panel, SyntheticPanelConfig};

    #[test]
    fn identity_resample_is_full_panel() {
        let sp = generate_synthetic_panel(&SyntheticPanelConfig { n_clusters: 6, ..Default::default() }, 1).unwrap();
        let clusters = sp.panel.clusters();
        let picks: Vec<usize> = (0..clusters.len()).collect();
        let re = resample_clusters(&sp.panel, &clusters, &picks);
        let mean = |p: &LoggedPanel| p.rows.iter().map(|r| r.reward).sum::<f64>() / p.len() as f64;
        assert_eq!(re.len(), sp.panel.len());
        assert!((mean(&re) - mean(&sp.panel)).abs() < 1e-12);
    }

    #[test]
    fn row_count_is_unbiased() {
        let sp = generate_synthetic_panel(&SyntheticPanelConfig { n_clusters: 40, mean_steps: 20, ..Default::default() }, 2).unwrap();
        let counts = cluster_bootstrap(&sp.panel, 200, 5, |_, p| p.len() as f64).unwrap();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let n = sp.panel.len() as f64;
        assert!((mean - n).abs() < 0.05 * n, "{mean} vs {n}");
        assert!(counts.iter().any(|&c| c != n));
    }

    #[test]
    fn single_cluster_rejected() {
        let mut sp = generate_synthetic_panel(&SyntheticPanelConfig { n_clusters: 1, ..Default::default() }, 2).unwrap();
        sp.panel.rows.truncate(10);
        assert!(matches!(cluster_bootstrap(&sp.panel, 3, 0, |_, p| p.len()), Err(Error::TooFewClusters(1))));
    }

    #[test]
    fn replicates_are_deterministic() {
        let sp = generate_synthetic_panel(&SyntheticPanelConfig { n_clusters: 10, ..Default::default() }, 3).unwrap();
        let a = cluster_bootstrap(&sp.panel, 8, 11, |_, p| p.rows.iter().map(|r| r.reward).sum::<f64>()).unwrap();
        let b = cluster_bootstrap(&sp.panel, 8, 11, |_, p| p.rows.iter().map(|r| r.reward).sum::<f64>()).unwrap();
        assert_eq!(a, b);
    }
}
