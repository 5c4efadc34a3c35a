//! Exact reference posterior by explicit world enumeration.
//!
//! Worlds are `(apple mask, pear mask)` pairs over at most 128 cells. The
//! attributed world set starts as every placement and is cut down by
//! rejection against what the observer can tell the actor sees. A fruit is
//! known when every surviving world agrees on it. Intended for tiny grids.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::belief::{attributed_observation, binomial};
use crate::config::ModelConfig;
use crate::filter::IntentionPosterior;
use crate::policy::{Intention, Planner};
use crate::scenario::EpisodeFrame;
use crate::world::{Cell, CellContent, FruitKind, GridSpec};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration too large: {count} worlds exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("grid has {0} cells; the oracle handles at most 128")]
    GridTooLarge(usize),
    #[error("oracle needs persistence = 1, got {0}")]
    Persistence(f64),
    #[error("no world is consistent with frame {0}")]
    Inconsistent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct World {
    apples: u128,
    pears: u128,
}

fn masks_with(n: usize, k: usize, forbidden: u128) -> Vec<u128> {
    let mut out = Vec::new();
    fn rec(n: usize, k: usize, start: usize, acc: u128, forbidden: u128, out: &mut Vec<u128>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            if forbidden & (1 << i) == 0 {
                rec(n, k - 1, i + 1, acc | (1 << i), forbidden, out);
            }
        }
    }
    rec(n, k, 0, 0, forbidden, &mut out);
    out
}

fn all_worlds(grid: GridSpec, apples: usize, pears: usize) -> Vec<World> {
    let n = grid.cell_count();
    masks_with(n, apples, 0)
        .into_iter()
        .flat_map(|a| {
            masks_with(n, pears, a)
                .into_iter()
                .map(move |p| World { apples: a, pears: p })
        })
        .collect()
}

fn known_fruits(worlds: &[World], grid: GridSpec) -> BTreeMap<Cell, FruitKind> {
    let all_a = worlds.iter().fold(u128::MAX, |m, w| m & w.apples);
    let all_p = worlds.iter().fold(u128::MAX, |m, w| m & w.pears);
    let mut known = BTreeMap::new();
    for i in 0..grid.cell_count() {
        if all_a & (1 << i) != 0 {
            known.insert(grid.cell_at(i), FruitKind::Apple);
        } else if all_p & (1 << i) != 0 {
            known.insert(grid.cell_at(i), FruitKind::Pear);
        }
    }
    known
}

/// Posterior over intentions after `frames`, from the uniform prior, for the
/// PublicSelf observer described by `cfg`.
pub fn brute_force_posterior(
    frames: &[EpisodeFrame],
    cfg: &ModelConfig,
    planner: &Planner,
    cap: u128,
) -> Result<IntentionPosterior, OracleError> {
    let grid = cfg.grid;
    let n = grid.cell_count();
    if n > 128 {
        return Err(OracleError::GridTooLarge(n));
    }
    if cfg.filter.persistence != 1.0 {
        return Err(OracleError::Persistence(cfg.filter.persistence));
    }
    let (na, np) = (cfg.fruits.apples, cfg.fruits.pears);
    let count = binomial(n as u128, na as u128) * binomial((n - na) as u128, np as u128);
    if count > cap {
        return Err(OracleError::CapExceeded { count, cap });
    }
    let region = cfg.region();
    let cone = cfg.assumed_cone();
    let floor = cfg.filter.likelihood_floor;

    let mut worlds = all_worlds(grid, na, np);
    // Log weight per intention; the prior is uniform so it cancels.
    let mut log_w = [0.0f64; 2];
    for (t, f) in frames.iter().enumerate() {
        if !region.contains(f.state.actor.cell) {
            continue;
        }
        let obs = attributed_observation(&f.state, region, cone, grid);
        worlds.retain(|w| {
            obs.contents.iter().all(|(&c, &content)| {
                let bit = 1u128 << grid.index(c);
                let here = if w.apples & bit != 0 {
                    CellContent::Apple
                } else if w.pears & bit != 0 {
                    CellContent::Pear
                } else {
                    CellContent::Empty
                };
                here == content
            })
        });
        if worlds.is_empty() {
            return Err(OracleError::Inconsistent(t));
        }
        let known = known_fruits(&worlds, grid);
        for (slot, intention) in Intention::ALL.into_iter().enumerate() {
            let lik = planner
                .likelihood_from_known(&known, f.state.actor, intention)
                .prob(f.action);
            log_w[slot] += lik.max(floor).ln();
        }
    }
    let m = log_w[0].max(log_w[1]);
    Ok(IntentionPosterior::from_weights(
        (log_w[0] - m).exp(),
        (log_w[1] - m).exp(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::KnowledgeBelief;
    use crate::world::FruitCounts;

    fn small() -> ModelConfig {
        ModelConfig::from_toml(
            "[grid]\nrows = 3\ncols = 5\n[fruits]\napples = 1\npears = 1\n\
             [observer]\nrow_lo = 0\nrow_hi = 2\ncol_lo = 1\ncol_hi = 3\n",
        )
        .unwrap()
    }

    #[test]
    fn world_count_matches_closed_form() {
        let g = GridSpec::new(3, 5).unwrap();
        assert_eq!(all_worlds(g, 1, 1).len(), 210);
        let b = KnowledgeBelief::with_totals(g, FruitCounts { apples: 2, pears: 1 }).unwrap();
        assert_eq!(all_worlds(g, 2, 1).len() as u128, b.count_worlds());
    }

    #[test]
    fn zero_frames_is_uniform() {
        let cfg = small();
        let planner = Planner::new(cfg.grid, cfg.policy);
        let p = brute_force_posterior(&[], &cfg, &planner, 1_000).unwrap();
        assert_eq!(p, IntentionPosterior::uniform());
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = small();
        let planner = Planner::new(cfg.grid, cfg.policy);
        assert!(matches!(
            brute_force_posterior(&[], &cfg, &planner, 10),
            Err(OracleError::CapExceeded { count: 210, cap: 10 })
        ));
    }
}
