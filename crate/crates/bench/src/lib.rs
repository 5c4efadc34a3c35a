//! Fixtures shared by the criterion benches.

use publicself_core::{canonical_suite, EpisodeRecord, ModelConfig};

/// 3x5 grid, one fruit of each kind, observer on the middle three columns.
pub fn mini_config() -> ModelConfig {
    ModelConfig::from_toml(
        "[grid]\nrows = 3\ncols = 5\n[fruits]\napples = 1\npears = 1\n\
         [observer]\nrow_lo = 0\nrow_hi = 2\ncol_lo = 1\ncol_hi = 3\n\
         [scenario]\nmax_frames = 12\n",
    )
    .expect("mini config is valid")
}

pub fn canonical() -> (ModelConfig, Vec<EpisodeRecord>) {
    let cfg = ModelConfig::default();
    let suite = canonical_suite(&cfg).expect("canonical suite builds");
    (cfg, suite)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_load() {
        assert_eq!(super::canonical().1.len(), 6);
        assert_eq!(super::mini_config().grid.cell_count(), 15);
    }
}
