//! Forward filters over the intention attributed to the actor.
//!
//! Both filters keep a deterministic attributed knowledge belief and a
//! posterior over the two intentions. Per frame: refine the belief with what
//! the observer can tell the actor sees, then weight each intention by the
//! likelihood of the action just taken under that belief.
//!
//! * PublicSelf: the actor's estimate of the observer's attribution. The
//!   observer only sees its fixed region, so the belief learns only cells in
//!   the region that fall inside the actor's assumed cone, and frames where
//!   the actor is out of view carry no evidence at all.
//! * BToM: an observer with the full state. The belief learns the whole
//!   assumed cone and every action counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{attributed_observation, AttributedObservation, BeliefError, KnowledgeBelief};
use crate::config::{FilterSettings, ModelConfig};
use crate::policy::{Intention, Planner};
use crate::scenario::EpisodeRecord;
use crate::world::{fov_cells, Action, FovCone, ObserverRegion, WorldState};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("episode/config mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentionPosterior {
    pub p_apple: f64,
    pub p_pear: f64,
}

impl IntentionPosterior {
    pub fn uniform() -> Self {
        Self {
            p_apple: 0.5,
            p_pear: 0.5,
        }
    }

    /// Normalize two non-negative weights.
    pub fn from_weights(apple: f64, pear: f64) -> Self {
        let total = apple + pear;
        Self {
            p_apple: apple / total,
            p_pear: pear / total,
        }
    }

    pub fn prob(&self, intention: Intention) -> f64 {
        match intention {
            Intention::GetApple => self.p_apple,
            Intention::GetPear => self.p_pear,
        }
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * ((self.p_apple - other.p_apple).abs() + (self.p_pear - other.p_pear).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub posterior: IntentionPosterior,
    pub attributed_belief: KnowledgeBelief,
    pub frame_index: usize,
}

impl FilterState {
    pub fn new(belief: KnowledgeBelief) -> Self {
        Self {
            posterior: IntentionPosterior::uniform(),
            attributed_belief: belief,
            frame_index: 0,
        }
    }
}

/// Which observer the filter models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    PublicSelf,
    Btom,
}

/// Filter parameters shared by every step of an episode.
#[derive(Debug)]
pub struct IntentFilter<'a> {
    pub planner: &'a Planner,
    pub region: ObserverRegion,
    pub assumed_cone: FovCone,
    pub settings: FilterSettings,
}

impl<'a> IntentFilter<'a> {
    pub fn new(planner: &'a Planner, cfg: &ModelConfig) -> Self {
        Self {
            planner,
            region: cfg.region(),
            assumed_cone: cfg.assumed_cone(),
            settings: cfg.filter,
        }
    }

    pub fn initial_state(&self, cfg: &ModelConfig) -> Result<FilterState, FilterError> {
        Ok(FilterState::new(KnowledgeBelief::with_totals(cfg.grid, cfg.fruits)?))
    }

    /// One PublicSelf frame: `state` is the true state shown, `action` the
    /// action taken from it.
    pub fn publicself_step(
        &self,
        fs: &FilterState,
        state: &WorldState,
        action: Action,
    ) -> Result<FilterState, FilterError> {
        if !self.region.contains(state.actor.cell) {
            return Ok(FilterState {
                frame_index: fs.frame_index + 1,
                ..fs.clone()
            });
        }
        let grid = self.planner.grid();
        let obs = attributed_observation(state, self.region, self.assumed_cone, grid);
        self.weigh(fs, &obs, state, action)
    }

    /// One BToM frame: the observer sees everything, so the attributed
    /// belief learns the whole assumed cone.
    pub fn btom_step(
        &self,
        fs: &FilterState,
        state: &WorldState,
        action: Action,
    ) -> Result<FilterState, FilterError> {
        let grid = self.planner.grid();
        let cells = fov_cells(state.actor, self.assumed_cone, grid);
        let contents = cells.iter().map(|&c| (c, state.content(c))).collect();
        let obs = AttributedObservation { cells, contents };
        self.weigh(fs, &obs, state, action)
    }

    fn weigh(
        &self,
        fs: &FilterState,
        obs: &AttributedObservation,
        state: &WorldState,
        action: Action,
    ) -> Result<FilterState, FilterError> {
        let belief = fs.attributed_belief.update(obs)?;
        let rho = self.settings.persistence;
        let prior = fs.posterior;
        let predicted = [
            rho * prior.p_apple + (1.0 - rho) * prior.p_pear,
            rho * prior.p_pear + (1.0 - rho) * prior.p_apple,
        ];
        let floor = self.settings.likelihood_floor;
        let [wa, wp] = [Intention::GetApple, Intention::GetPear].map(|i| {
            let lik = self
                .planner
                .action_likelihood(&belief, state.actor, i)
                .prob(action);
            lik.max(floor)
        });
        Ok(FilterState {
            posterior: IntentionPosterior::from_weights(predicted[0] * wa, predicted[1] * wp),
            attributed_belief: belief,
            frame_index: fs.frame_index + 1,
        })
    }

    pub fn step(
        &self,
        kind: FilterKind,
        fs: &FilterState,
        state: &WorldState,
        action: Action,
    ) -> Result<FilterState, FilterError> {
        match kind {
            FilterKind::PublicSelf => self.publicself_step(fs, state, action),
            FilterKind::Btom => self.btom_step(fs, state, action),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub frame_index: usize,
    pub p_apple: f64,
    pub p_pear: f64,
    pub actor_visible: bool,
}

/// Filter output for one episode: the posterior after each frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrace {
    pub episode_id: String,
    pub rows: Vec<TraceRow>,
}

impl ModelTrace {
    pub fn p_apple(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_apple).collect()
    }

    pub fn prob(&self, intention: Intention) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match intention {
                Intention::GetApple => r.p_apple,
                Intention::GetPear => r.p_pear,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,p_apple,p_pear,actor_visible\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.frame_index, r.p_apple, r.p_pear, r.actor_visible
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }
}

/// Run a filter over a whole episode, from the uniform prior.
pub fn run_trace_with(
    episode: &EpisodeRecord,
    cfg: &ModelConfig,
    planner: &Planner,
    kind: FilterKind,
) -> Result<ModelTrace, FilterError> {
    let m = &episode.meta;
    if m.grid != cfg.grid {
        return Err(FilterError::Mismatch(format!(
            "episode grid {}x{} vs config grid {}x{}",
            m.grid.rows, m.grid.cols, cfg.grid.rows, cfg.grid.cols
        )));
    }
    if m.fruits != cfg.fruits {
        return Err(FilterError::Mismatch(format!(
            "episode fruit counts {:?} vs config {:?}",
            m.fruits, cfg.fruits
        )));
    }
    if planner.grid() != cfg.grid {
        return Err(FilterError::Mismatch("planner grid differs from config".into()));
    }
    let filter = IntentFilter::new(planner, cfg);
    let mut fs = filter.initial_state(cfg)?;
    let mut rows = Vec::with_capacity(episode.frames.len());
    for f in &episode.frames {
        fs = filter.step(kind, &fs, &f.state, f.action)?;
        rows.push(TraceRow {
            frame_index: fs.frame_index - 1,
            p_apple: fs.posterior.p_apple,
            p_pear: fs.posterior.p_pear,
            actor_visible: f.visible,
        });
    }
    Ok(ModelTrace {
        episode_id: m.episode_id.clone(),
        rows,
    })
}

/// PublicSelf trace for an episode.
pub fn run_trace(episode: &EpisodeRecord, cfg: &ModelConfig) -> Result<ModelTrace, FilterError> {
    let planner = Planner::new(cfg.grid, cfg.policy);
    run_trace_with(episode, cfg, &planner, FilterKind::PublicSelf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_blind, build_simple};
    use crate::world::{Cell, GridSpec, Heading, Pose};

    #[test]
    fn bayes_arithmetic() {
        let p = IntentionPosterior::from_weights(0.5 * 0.8, 0.5 * 0.2);
        assert!((p.p_apple - 0.8).abs() < 1e-15);
        assert!((p.p_pear - 0.2).abs() < 1e-15);
        let same = IntentionPosterior::from_weights(0.3 * 0.4, 0.7 * 0.4);
        assert!((same.p_apple - 0.3).abs() < 1e-15);
    }

    #[test]
    fn invisible_frame_is_stasis() {
        let cfg = ModelConfig::default();
        let planner = Planner::new(cfg.grid, cfg.policy);
        let filter = IntentFilter::new(&planner, &cfg);
        let mut fs = filter.initial_state(&cfg).unwrap();
        fs.posterior = IntentionPosterior::from_weights(0.3, 0.7);
        let s = WorldState::new(
            Pose::new(3, 22, Heading::WEST),
            vec![Cell::new(3, 20), Cell::new(0, 0)],
            vec![Cell::new(6, 6), Cell::new(6, 7)],
        );
        let next = filter.publicself_step(&fs, &s, Action::Forward).unwrap();
        assert_eq!(next.posterior, fs.posterior);
        assert_eq!(next.attributed_belief, fs.attributed_belief);
        assert_eq!(next.frame_index, 1);
    }

    #[test]
    fn uniform_search_keeps_prior() {
        let cfg = ModelConfig::default();
        let planner = Planner::new(cfg.grid, cfg.policy);
        let filter = IntentFilter::new(&planner, &cfg);
        let fs = filter.initial_state(&cfg).unwrap();
        // Nothing in the cone: both intentions are searching.
        let s = WorldState::new(
            Pose::new(3, 12, Heading::NORTH),
            vec![Cell::new(6, 0), Cell::new(6, 1)],
            vec![Cell::new(6, 23), Cell::new(6, 24)],
        );
        for a in Action::ALL {
            let b = filter.btom_step(&fs, &s, a).unwrap();
            assert_eq!(b.posterior, IntentionPosterior::uniform());
        }
    }

    #[test]
    fn trace_length_and_normalization() {
        let cfg = ModelConfig::default();
        let rec = build_simple(Intention::GetPear, 11, &cfg).unwrap();
        let trace = run_trace(&rec, &cfg).unwrap();
        assert_eq!(trace.rows.len(), rec.frame_count());
        for r in &trace.rows {
            assert!((r.p_apple + r.p_pear - 1.0).abs() < 1e-12);
        }
        assert!(trace.rows.last().unwrap().p_pear >= 0.9);
    }

    #[test]
    fn blind_stays_even() {
        let cfg = ModelConfig::default();
        let rec = build_blind(Intention::GetApple, 4, &cfg).unwrap();
        let trace = run_trace(&rec, &cfg).unwrap();
        assert!(trace.rows.iter().all(|r| r.p_apple == 0.5 && r.p_pear == 0.5));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let cfg = ModelConfig::default();
        let rec = build_blind(Intention::GetApple, 4, &cfg).unwrap();
        let mut other = cfg.clone();
        other.grid = GridSpec::new(7, 24).unwrap();
        other.observer = None;
        assert!(matches!(run_trace(&rec, &other), Err(FilterError::Mismatch(_))));
    }

    #[test]
    fn csv_layout() {
        let t = ModelTrace {
            episode_id: "x".into(),
            rows: vec![TraceRow {
                frame_index: 0,
                p_apple: 0.5,
                p_pear: 0.5,
                actor_visible: true,
            }],
        };
        assert_eq!(t.to_csv(), "frame_index,p_apple,p_pear,actor_visible\n0,0.5,0.5,true\n");
    }
}
