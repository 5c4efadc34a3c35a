//! Episode construction: the three stimulus archetypes, generic seeded
//! episodes, and the canonical six-episode suite.
//!
//! Every builder is a pure function of `(intention, seed, config)`, which is
//! what lets a record be re-derived from its metadata.

mod record;

pub use record::{read_episode, write_episode, RecordError};

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::KnowledgeBelief;
use crate::config::ModelConfig;
use crate::policy::{Intention, Planner};
use crate::world::{
    in_cone, next_pose, observe_actor_view, spawn_from_rng, step, Action, Cell, FovCone, FruitCounts,
    FruitKind, GridSpec, Heading, ObserverRegion, Pose, WorldError, WorldState,
};
use crate::policy::PolicyParams;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("placement infeasible: {0}")]
    Infeasible(String),
    #[error("no episode satisfying the {archetype:?} postconditions after {attempts} attempts (seed {seed})")]
    Exhausted {
        archetype: Archetype,
        seed: u64,
        attempts: usize,
    },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Belief(#[from] crate::belief::BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Archetype {
    Simple,
    Blind,
    Misleading,
    Random,
}

impl Archetype {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Some(Archetype::Simple),
            "blind" => Some(Archetype::Blind),
            "misleading" => Some(Archetype::Misleading),
            "random" => Some(Archetype::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub episode_id: String,
    pub archetype: Archetype,
    pub intention_truth: Intention,
    pub seed: u64,
    pub grid: GridSpec,
    pub fruits: FruitCounts,
    pub fov: FovCone,
    pub region: ObserverRegion,
    pub policy: PolicyParams,
    pub max_frames: usize,
    /// Scripted actions replayed before the policy takes over.
    pub script: Vec<Action>,
    /// Fruit kind touched by the last frame's action, if any.
    pub outcome: Option<FruitKind>,
}

/// One time step: the state shown, and the action taken from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeFrame {
    pub state: WorldState,
    pub action: Action,
    /// Whether the observer can see the actor in `state`.
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub meta: EpisodeMeta,
    pub frames: Vec<EpisodeFrame>,
}

impl EpisodeRecord {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Index of the first frame in which the observer sees the actor.
    pub fn first_visible_frame(&self) -> Option<usize> {
        self.frames.iter().position(|f| f.visible)
    }
}

/// Initial placement plus where the actions come from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub initial: WorldState,
    pub script: Vec<Action>,
    pub max_frames: usize,
}

/// Run the actor until it touches a fruit or `max_frames` frames are recorded.
/// The actor observes before it acts; scripted actions come first.
pub fn simulate(
    spec: &ScenarioSpec,
    intention: Intention,
    planner: &Planner,
    cfg: &ModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<EpisodeFrame>, Option<FruitKind>), ScenarioError> {
    let grid = cfg.grid;
    let region = cfg.region();
    let mut state = spec.initial.clone();
    let mut private = KnowledgeBelief::with_totals(grid, cfg.fruits)?;
    let mut frames = Vec::new();
    let mut outcome = None;
    for t in 0..spec.max_frames {
        private = private.update(&observe_actor_view(&state, cfg.actor_fov, grid))?;
        let action = match spec.script.get(t) {
            Some(&a) => a,
            None => planner.act(&state, &private, intention, rng),
        };
        frames.push(EpisodeFrame {
            state: state.clone(),
            action,
            visible: region.contains(state.actor.cell),
        });
        let (next, touch) = step(&state, action, grid);
        state = next;
        if touch.is_some() {
            outcome = touch;
            break;
        }
    }
    Ok((frames, outcome))
}

const MAX_ATTEMPTS: usize = 500;

fn episode_rng(seed: u64, archetype: Archetype, intention: Intention) -> ChaCha8Rng {
    let tag = match archetype {
        Archetype::Simple => 1u64,
        Archetype::Blind => 2,
        Archetype::Misleading => 3,
        Archetype::Random => 4,
    } * 2
        + matches!(intention, Intention::GetPear) as u64;
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag)
}

fn assemble(
    archetype: Archetype,
    intention: Intention,
    seed: u64,
    cfg: &ModelConfig,
    script: Vec<Action>,
    frames: Vec<EpisodeFrame>,
    outcome: Option<FruitKind>,
) -> EpisodeRecord {
    EpisodeRecord {
        meta: EpisodeMeta {
            episode_id: format!("{archetype:?}-{intention:?}-{seed}").to_lowercase(),
            archetype,
            intention_truth: intention,
            seed,
            grid: cfg.grid,
            fruits: cfg.fruits,
            fov: cfg.actor_fov,
            region: cfg.region(),
            policy: cfg.policy,
            max_frames: cfg.scenario.max_frames,
            script,
            outcome,
        },
        frames,
    }
}

/// Sample `n` distinct cells from `pool`, skipping anything in `taken`.
fn pick_cells(rng: &mut ChaCha8Rng, pool: &[Cell], taken: &[Cell], n: usize) -> Option<Vec<Cell>> {
    let candidates: Vec<Cell> = pool.iter().copied().filter(|c| !taken.contains(c)).collect();
    if candidates.len() < n {
        return None;
    }
    Some(candidates.choose_multiple(rng, n).copied().collect())
}

fn chebyshev(a: Cell, b: Cell) -> usize {
    a.row.abs_diff(b.row).max(a.col.abs_diff(b.col))
}

/// Lay out `target_kind` fruits and the rest: `first_target` is given, the
/// remaining fruits come from `others_pool`.
fn place_fruits(
    rng: &mut ChaCha8Rng,
    counts: FruitCounts,
    target_kind: FruitKind,
    first_target: Cell,
    actor: Cell,
    others_pool: &[Cell],
) -> Option<(Vec<Cell>, Vec<Cell>)> {
    let extra_targets = counts.of(target_kind).saturating_sub(1);
    let others = counts.of(target_kind.other());
    let rest = pick_cells(rng, others_pool, &[first_target, actor], extra_targets + others)?;
    let mut targets = vec![first_target];
    targets.extend_from_slice(&rest[..extra_targets]);
    let non_targets = rest[extra_targets..].to_vec();
    Some(match target_kind {
        FruitKind::Apple => (targets, non_targets),
        FruitKind::Pear => (non_targets, targets),
    })
}

/// Actor sees its target right away and heads straight for it, all inside
/// the observer's view.
pub fn build_simple(intention: Intention, seed: u64, cfg: &ModelConfig) -> Result<EpisodeRecord, ScenarioError> {
    let grid = cfg.grid;
    let region = cfg.region();
    let planner = Planner::new(grid, cfg.policy);
    let mut rng = episode_rng(seed, Archetype::Simple, intention);
    let target_kind = intention.target();
    if cfg.fruits.of(target_kind) == 0 {
        return Err(ScenarioError::Infeasible("no fruit of the target kind".into()));
    }
    // Keep one column of margin so the approach stays in view.
    let inner: Vec<Cell> = region
        .cells()
        .filter(|c| {
            (c.col > region.col_lo || region.col_lo == 0)
                && (c.col < region.col_hi || region.col_hi + 1 == grid.cols)
        })
        .collect();
    for _ in 0..MAX_ATTEMPTS {
        let actor = *inner.choose(&mut rng).ok_or_else(|| ScenarioError::Infeasible("empty region".into()))?;
        let pose = Pose {
            cell: actor,
            heading: Heading::ALL[rng.gen_range(0..8)],
        };
        let targets: Vec<Cell> = inner
            .iter()
            .copied()
            .filter(|&c| c != actor && chebyshev(c, actor) >= 3 && in_cone(pose, cfg.actor_fov, c))
            .collect();
        let Some(&target) = targets.choose(&mut rng) else { continue };
        let pool: Vec<Cell> = grid
            .cells()
            .filter(|&c| !region.contains(c) && !in_cone(pose, cfg.actor_fov, c))
            .collect();
        let Some((apples, pears)) = place_fruits(&mut rng, cfg.fruits, target_kind, target, actor, &pool) else {
            continue;
        };
        let spec = ScenarioSpec {
            initial: WorldState::new(pose, apples, pears),
            script: Vec::new(),
            max_frames: cfg.scenario.max_frames,
        };
        let (frames, outcome) = simulate(&spec, intention, &planner, cfg, &mut rng)?;
        let last_in_view = frames.last().is_some_and(|f| f.visible);
        if outcome == Some(target_kind) && last_in_view && frames.iter().all(|f| f.visible) {
            return Ok(assemble(Archetype::Simple, intention, seed, cfg, Vec::new(), frames, outcome));
        }
    }
    Err(ScenarioError::Exhausted {
        archetype: Archetype::Simple,
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

/// Which side of the observer region has room for off-screen fruit.
fn exit_side(grid: GridSpec, region: ObserverRegion) -> Option<Heading> {
    if region.col_hi + 4 < grid.cols {
        Some(Heading::EAST)
    } else if region.col_lo >= 4 {
        Some(Heading::WEST)
    } else {
        None
    }
}

fn side_setup(
    grid: GridSpec,
    region: ObserverRegion,
    rng: &mut ChaCha8Rng,
) -> Result<(Heading, Cell), ScenarioError> {
    if region.covers(grid) {
        return Err(ScenarioError::Infeasible(
            "observer region covers the whole grid; nothing can be hidden".into(),
        ));
    }
    let side = exit_side(grid, region).ok_or_else(|| {
        ScenarioError::Infeasible("need at least four columns outside the region on one side".into())
    })?;
    let row = rng.gen_range(region.row_lo..=region.row_hi);
    let col = if side == Heading::EAST {
        rng.gen_range(region.col_hi.saturating_sub(2).max(region.col_lo)..=region.col_hi)
    } else {
        rng.gen_range(region.col_lo..=(region.col_lo + 2).min(region.col_hi))
    };
    Ok((side, Cell::new(row, col)))
}

/// Cells outside the region on `side`, at least three columns past its edge.
fn far_side(region: ObserverRegion, side: Heading) -> impl Fn(&Cell) -> bool {
    move |c: &Cell| {
        if side == Heading::EAST {
            c.col >= region.col_hi + 3
        } else {
            c.col + 3 <= region.col_lo
        }
    }
}

/// Actor heads for a target the observer cannot see, and leaves the view.
pub fn build_blind(intention: Intention, seed: u64, cfg: &ModelConfig) -> Result<EpisodeRecord, ScenarioError> {
    let grid = cfg.grid;
    let region = cfg.region();
    let planner = Planner::new(grid, cfg.policy);
    let mut rng = episode_rng(seed, Archetype::Blind, intention);
    let target_kind = intention.target();
    for _ in 0..MAX_ATTEMPTS {
        let (side, actor) = side_setup(grid, region, &mut rng)?;
        let heading = [side.rotated_cw(), side, side.rotated_ccw()][rng.gen_range(0..3)];
        let pose = Pose { cell: actor, heading };
        let beyond = far_side(region, side);
        let targets: Vec<Cell> = grid
            .cells()
            .filter(|c| beyond(c) && in_cone(pose, cfg.actor_fov, *c))
            .collect();
        let Some(&target) = targets.choose(&mut rng) else { continue };
        let pool: Vec<Cell> = grid
            .cells()
            .filter(|&c| !region.contains(c) && !in_cone(pose, cfg.actor_fov, c))
            .collect();
        let Some((apples, pears)) = place_fruits(&mut rng, cfg.fruits, target_kind, target, actor, &pool) else {
            continue;
        };
        let spec = ScenarioSpec {
            initial: WorldState::new(pose, apples, pears),
            script: Vec::new(),
            max_frames: cfg.scenario.max_frames,
        };
        let (frames, outcome) = simulate(&spec, intention, &planner, cfg, &mut rng)?;
        if outcome == Some(target_kind) && frames.iter().any(|f| !f.visible) {
            return Ok(assemble(Archetype::Blind, intention, seed, cfg, Vec::new(), frames, outcome));
        }
    }
    Err(ScenarioError::Exhausted {
        archetype: Archetype::Blind,
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

/// Scripted approach toward a visible decoy of the other kind, then the
/// policy takes over and leaves for the real target outside the view.
pub fn build_misleading(
    intention: Intention,
    seed: u64,
    cfg: &ModelConfig,
) -> Result<EpisodeRecord, ScenarioError> {
    let grid = cfg.grid;
    let region = cfg.region();
    let planner = Planner::new(grid, cfg.policy);
    let mut rng = episode_rng(seed, Archetype::Misleading, intention);
    let target_kind = intention.target();
    let decoy_kind = target_kind.other();
    if cfg.fruits.of(decoy_kind) == 0 {
        return Err(ScenarioError::Infeasible("no fruit of the decoy kind".into()));
    }
    for _ in 0..MAX_ATTEMPTS {
        let (side, actor) = side_setup(grid, region, &mut rng)?;
        let pose = Pose { cell: actor, heading: side };
        let beyond = far_side(region, side);
        let targets: Vec<Cell> = grid
            .cells()
            .filter(|c| beyond(c) && in_cone(pose, cfg.actor_fov, *c))
            .collect();
        let Some(&target) = targets.choose(&mut rng) else { continue };
        // Decoy: inside the region, behind the actor, at least three cells away.
        let decoys: Vec<Cell> = region
            .cells()
            .filter(|&c| {
                let behind = if side == Heading::EAST { c.col < actor.col } else { c.col > actor.col };
                behind && chebyshev(c, actor) >= 3
            })
            .collect();
        let Some(&decoy) = decoys.choose(&mut rng) else { continue };
        let pool: Vec<Cell> = grid
            .cells()
            .filter(|&c| !region.contains(c) && !in_cone(pose, cfg.actor_fov, c) && c != target)
            .collect();
        let extra_targets = cfg.fruits.of(target_kind) - 1;
        let extra_decoys = cfg.fruits.of(decoy_kind) - 1;
        let Some(rest) = pick_cells(&mut rng, &pool, &[actor, target, decoy], extra_targets + extra_decoys) else {
            continue;
        };
        let mut targets_all = vec![target];
        targets_all.extend_from_slice(&rest[..extra_targets]);
        let mut decoys_all = vec![decoy];
        decoys_all.extend_from_slice(&rest[extra_targets..]);
        let (apples, pears) = match target_kind {
            FruitKind::Apple => (targets_all.clone(), decoys_all),
            FruitKind::Pear => (decoys_all, targets_all.clone()),
        };
        let initial = WorldState::new(pose, apples, pears);

        let script = decoy_approach(&initial, decoy, grid);
        if script.len() < 2 {
            continue;
        }
        let spec = ScenarioSpec {
            initial,
            script: script.clone(),
            max_frames: cfg.scenario.max_frames,
        };
        let (frames, outcome) = simulate(&spec, intention, &planner, cfg, &mut rng)?;
        if outcome == Some(target_kind) && frames.len() > script.len() {
            return Ok(assemble(Archetype::Misleading, intention, seed, cfg, script, frames, outcome));
        }
    }
    Err(ScenarioError::Exhausted {
        archetype: Archetype::Misleading,
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

/// Shortest run of forward moves and turns that ends facing `decoy` from an
/// adjacent cell, never stepping on another fruit. The touching move itself
/// is left out. Empty if no such path exists.
fn decoy_approach(initial: &WorldState, decoy: Cell, grid: GridSpec) -> Vec<Action> {
    const MOVES: [Action; 3] = [Action::Forward, Action::TurnCW, Action::TurnCCW];
    let start = initial.actor;
    let mut prev: HashMap<Pose, (Pose, Action)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = HashSet::from([start]);
    while let Some(pose) = queue.pop_front() {
        if next_pose(pose, Action::Forward, grid).cell == decoy {
            let mut script = Vec::new();
            let mut at = pose;
            while at != start {
                let (from, action) = prev[&at];
                script.push(action);
                at = from;
            }
            script.reverse();
            return script;
        }
        for action in MOVES {
            let next = next_pose(pose, action, grid);
            if initial.content(next.cell).fruit().is_some() || !seen.insert(next) {
                continue;
            }
            prev.insert(next, (pose, action));
            queue.push_back(next);
        }
    }
    Vec::new()
}

/// Spawn anywhere and let the policy run. Used for randomized tests.
pub fn build_random(intention: Intention, seed: u64, cfg: &ModelConfig) -> Result<EpisodeRecord, ScenarioError> {
    let planner = Planner::new(cfg.grid, cfg.policy);
    let mut rng = episode_rng(seed, Archetype::Random, intention);
    let initial = spawn_from_rng(&mut rng, cfg.grid, cfg.fruits)?;
    let spec = ScenarioSpec {
        initial,
        script: Vec::new(),
        max_frames: cfg.scenario.max_frames,
    };
    let (frames, outcome) = simulate(&spec, intention, &planner, cfg, &mut rng)?;
    Ok(assemble(Archetype::Random, intention, seed, cfg, Vec::new(), frames, outcome))
}

pub fn build(
    archetype: Archetype,
    intention: Intention,
    seed: u64,
    cfg: &ModelConfig,
) -> Result<EpisodeRecord, ScenarioError> {
    match archetype {
        Archetype::Simple => build_simple(intention, seed, cfg),
        Archetype::Blind => build_blind(intention, seed, cfg),
        Archetype::Misleading => build_misleading(intention, seed, cfg),
        Archetype::Random => build_random(intention, seed, cfg),
    }
}

/// Rebuild an episode from its metadata under `cfg`'s environment.
pub fn regenerate(meta: &EpisodeMeta, cfg: &ModelConfig) -> Result<EpisodeRecord, ScenarioError> {
    let mut rec = build(meta.archetype, meta.intention_truth, meta.seed, cfg)?;
    rec.meta.episode_id = meta.episode_id.clone();
    Ok(rec)
}

/// Layout of the canonical suite: two episodes per archetype, one for each
/// true intention.
pub const CANONICAL_LAYOUT: [(Archetype, Intention); 6] = [
    (Archetype::Simple, Intention::GetApple),
    (Archetype::Simple, Intention::GetPear),
    (Archetype::Blind, Intention::GetApple),
    (Archetype::Blind, Intention::GetPear),
    (Archetype::Misleading, Intention::GetPear),
    (Archetype::Misleading, Intention::GetApple),
];

/// The six canonical episodes, ids `ep-01` .. `ep-06`.
pub fn canonical_suite(cfg: &ModelConfig) -> Result<Vec<EpisodeRecord>, ScenarioError> {
    let base = cfg.scenario.suite_seed;
    CANONICAL_LAYOUT
        .iter()
        .enumerate()
        .map(|(i, &(archetype, intention))| {
            let mut rec = build(archetype, intention, base + i as u64, cfg)?;
            rec.meta.episode_id = format!("ep-{:02}", i + 1);
            Ok(rec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::observe_observer_view;

    fn cfg() -> ModelConfig {
        ModelConfig::default()
    }

    #[test]
    fn simple_episode_touches_target_in_view() {
        for intention in Intention::ALL {
            let rec = build_simple(intention, 7, &cfg()).unwrap();
            assert_eq!(rec.meta.outcome, Some(intention.target()));
            assert!(rec.frames.iter().all(|f| f.visible));
            assert_eq!(rec, build_simple(intention, 7, &cfg()).unwrap());
        }
    }

    #[test]
    fn blind_episode_hides_every_fruit() {
        let c = cfg();
        let region = c.region();
        for intention in Intention::ALL {
            let rec = build_blind(intention, 3, &c).unwrap();
            let s = &rec.frames[0].state;
            let view = observe_observer_view(s, region);
            assert!(view.contents.values().all(|v| *v == crate::world::CellContent::Empty));
            assert!(rec.frames[0].visible);
            assert!(rec.frames.iter().any(|f| !f.visible));
            assert_eq!(rec.meta.outcome, Some(intention.target()));
            assert!(rec.frame_count() <= c.scenario.max_frames);
        }
    }

    #[test]
    fn blind_infeasible_for_full_region() {
        let mut c = cfg();
        c.observer = Some(ObserverRegion::full(c.grid));
        assert!(matches!(
            build_blind(Intention::GetApple, 1, &c),
            Err(ScenarioError::Infeasible(_))
        ));
    }

    #[test]
    fn misleading_decoy_in_view_and_true_target_touched() {
        let c = cfg();
        let region = c.region();
        for intention in Intention::ALL {
            let rec = build_misleading(intention, 5, &c).unwrap();
            let s = &rec.frames[0].state;
            let decoys = s.fruits(intention.target().other());
            assert!(decoys.iter().any(|d| region.contains(*d)));
            assert!(s.fruits(intention.target()).iter().all(|t| !region.contains(*t)));
            assert_eq!(rec.meta.outcome, Some(intention.target()));
            let scripted: Vec<Action> = rec.frames.iter().take(rec.meta.script.len()).map(|f| f.action).collect();
            assert_eq!(scripted, rec.meta.script);
        }
    }

    #[test]
    fn canonical_suite_shape() {
        let suite = canonical_suite(&cfg()).unwrap();
        assert_eq!(suite.len(), 6);
        for (rec, (arch, intention)) in suite.iter().zip(CANONICAL_LAYOUT) {
            assert_eq!(rec.meta.archetype, arch);
            assert_eq!(rec.meta.intention_truth, intention);
        }
    }

    #[test]
    fn random_episode_is_seeded() {
        let mut c = cfg();
        c.scenario.max_frames = 20;
        let a = build_random(Intention::GetPear, 9, &c).unwrap();
        let b = build_random(Intention::GetPear, 9, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.frame_count() >= 1 && a.frame_count() <= 20);
    }
}
