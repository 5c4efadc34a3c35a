//! Goal-conditioned action model.
//!
//! A deterministic planner (value iteration over `(cell, heading)`) with the
//! fruit-touch rewards, turned into action probabilities by a Boltzmann
//! softmax. When the belief holds no certain fruit of the target kind the
//! actor is searching, and every action that does not step onto a known
//! non-target fruit is equally likely.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::KnowledgeBelief;
use crate::world::{next_pose, Action, Cell, FruitKind, GridSpec, Heading, Pose, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Intention {
    GetApple,
    GetPear,
}

impl Intention {
    pub const ALL: [Intention; 2] = [Intention::GetApple, Intention::GetPear];

    pub fn target(self) -> FruitKind {
        match self {
            Intention::GetApple => FruitKind::Apple,
            Intention::GetPear => FruitKind::Pear,
        }
    }

    pub fn for_target(kind: FruitKind) -> Self {
        match kind {
            FruitKind::Apple => Intention::GetApple,
            FruitKind::Pear => Intention::GetPear,
        }
    }

    pub fn other(self) -> Self {
        Self::for_target(self.target().other())
    }

    /// The reward function that generates this intention.
    pub fn desire(self) -> Desire {
        Desire::for_target(self.target())
    }
}

/// Reward function: touching the target pays, touching the other kind costs,
/// every other step costs a little.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Desire {
    pub target: FruitKind,
    pub touch_target_reward: f64,
    pub touch_other_reward: f64,
    pub step_reward: f64,
}

impl Desire {
    pub fn for_target(target: FruitKind) -> Self {
        Self {
            target,
            touch_target_reward: 1.5,
            touch_other_reward: -1.5,
            step_reward: -0.002,
        }
    }

    pub fn reward_for(&self, touched: Option<FruitKind>) -> f64 {
        match touched {
            Some(k) if k == self.target => self.touch_target_reward,
            Some(_) => self.touch_other_reward,
            None => self.step_reward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyParams {
    /// Boltzmann inverse temperature, in units of 1/reward.
    pub beta: f64,
    pub gamma: f64,
    pub vi_tolerance: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            gamma: 0.95,
            vi_tolerance: 1e-6,
        }
    }
}

pub const DEFAULT_BETA: f64 = 60.0;

impl PolicyParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(format!("beta {} must be finite and >= 0", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma {} must lie in (0, 1)", self.gamma));
        }
        if self.vi_tolerance.is_nan() || self.vi_tolerance <= 0.0 {
            return Err(format!("vi_tolerance {} must be > 0", self.vi_tolerance));
        }
        Ok(())
    }
}

fn state_index(grid: GridSpec, pose: Pose) -> usize {
    grid.index(pose.cell) * 8 + pose.heading.index() as usize
}

fn state_pose(grid: GridSpec, idx: usize) -> Pose {
    Pose {
        cell: grid.cell_at(idx / 8),
        heading: Heading::new((idx % 8) as u8).expect("heading index < 8"),
    }
}

/// Converged action values for one known-fruit layout and intention.
#[derive(Debug, Clone)]
pub struct ValueTable {
    grid: GridSpec,
    q: Vec<[f64; 5]>,
    /// Largest change in V during the final sweep.
    pub residual: f64,
    pub sweeps: usize,
}

impl ValueTable {
    pub fn q(&self, pose: Pose) -> [f64; 5] {
        self.q[state_index(self.grid, pose)]
    }

    pub fn q_action(&self, pose: Pose, action: Action) -> f64 {
        self.q(pose)[action.index()]
    }

    pub fn value(&self, pose: Pose) -> f64 {
        self.q(pose).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

const MAX_SWEEPS: usize = 1_000_000;

/// Value iteration on the deterministic grid MDP. Known fruits are absorbing;
/// every other cell, including Unknown ones, is free floor.
pub fn value_iteration(
    known_fruits: &BTreeMap<Cell, FruitKind>,
    intention: Intention,
    grid: GridSpec,
    params: &PolicyParams,
) -> ValueTable {
    let desire = intention.desire();
    let n = grid.cell_count() * 8;
    let mut fruit_at = vec![None; grid.cell_count()];
    for (&c, &k) in known_fruits {
        fruit_at[grid.index(c)] = Some(k);
    }

    // successor state and immediate reward, per (state, action)
    let mut succ = vec![[(0usize, 0.0f64, false); 5]; n];
    for (s, row) in succ.iter_mut().enumerate() {
        let pose = state_pose(grid, s);
        for a in Action::ALL {
            let np = next_pose(pose, a, grid);
            let touched = fruit_at[grid.index(np.cell)];
            row[a.index()] = (state_index(grid, np), desire.reward_for(touched), touched.is_some());
        }
    }
    let terminal: Vec<bool> = (0..n).map(|s| fruit_at[s / 8].is_some()).collect();

    let backup = |v: &[f64], s: usize| -> [f64; 5] {
        let mut q = [0.0; 5];
        for (qa, &(next, r, absorbing)) in q.iter_mut().zip(&succ[s]) {
            *qa = if absorbing { r } else { r + params.gamma * v[next] };
        }
        q
    };

    let mut v = vec![0.0f64; n];
    let mut next_v = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while residual >= params.vi_tolerance && sweeps < MAX_SWEEPS {
        residual = 0.0;
        for s in 0..n {
            next_v[s] = if terminal[s] {
                0.0
            } else {
                backup(&v, s).into_iter().fold(f64::NEG_INFINITY, f64::max)
            };
            residual = residual.max((next_v[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next_v);
        sweeps += 1;
    }
    let q = (0..n).map(|s| backup(&v, s)).collect();
    ValueTable {
        grid,
        q,
        residual,
        sweeps,
    }
}

/// Probability of each of the five actions, indexed by [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution(pub [f64; 5]);

impl ActionDistribution {
    pub fn uniform() -> Self {
        Self([0.2; 5])
    }

    pub fn prob(&self, action: Action) -> f64 {
        self.0[action.index()]
    }

    pub fn argmax(&self) -> Action {
        let mut best = Action::ALL[0];
        for a in Action::ALL {
            if self.prob(a) > self.prob(best) {
                best = a;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in Action::ALL {
            acc += self.prob(a);
            if u < acc {
                return a;
            }
        }
        // rounding left a sliver above the last bucket
        *Action::ALL
            .iter()
            .rev()
            .find(|&&a| self.prob(a) > 0.0)
            .expect("distribution has positive mass")
    }

    pub fn boltzmann(q: [f64; 5], beta: f64) -> Self {
        let max = q.into_iter().fold(f64::NEG_INFINITY, f64::max);
        let mut w = q.map(|x| (beta * (x - max)).exp());
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        Self(w)
    }
}

type CacheKey = (Vec<(Cell, FruitKind)>, Intention);

/// Action model for one grid and parameter set, with memoized value tables.
#[derive(Debug)]
pub struct Planner {
    grid: GridSpec,
    params: PolicyParams,
    cache: Mutex<HashMap<CacheKey, Arc<ValueTable>>>,
}

impl Planner {
    pub fn new(grid: GridSpec, params: PolicyParams) -> Self {
        Self {
            grid,
            params,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn table(&self, known: &BTreeMap<Cell, FruitKind>, intention: Intention) -> Arc<ValueTable> {
        let key: CacheKey = (known.iter().map(|(&c, &k)| (c, k)).collect(), intention);
        if let Some(t) = self.cache.lock().expect("planner cache poisoned").get(&key) {
            return Arc::clone(t);
        }
        let table = Arc::new(value_iteration(known, intention, self.grid, &self.params));
        self.cache
            .lock()
            .expect("planner cache poisoned")
            .entry(key)
            .or_insert(table)
            .clone()
    }

    /// Action probabilities given fruit cells known for certain.
    pub fn likelihood_from_known(
        &self,
        known: &BTreeMap<Cell, FruitKind>,
        pose: Pose,
        intention: Intention,
    ) -> ActionDistribution {
        let target = intention.target();
        if known.values().any(|&k| k == target) {
            let table = self.table(known, intention);
            return ActionDistribution::boltzmann(table.q(pose), self.params.beta);
        }
        search_distribution(known, pose, target, self.grid)
    }

    pub fn action_likelihood(
        &self,
        belief: &KnowledgeBelief,
        pose: Pose,
        intention: Intention,
    ) -> ActionDistribution {
        self.likelihood_from_known(&belief.certain_fruits(), pose, intention)
    }

    /// Sample the actor's next action from its own belief.
    pub fn act<R: Rng + ?Sized>(
        &self,
        state: &WorldState,
        private_belief: &KnowledgeBelief,
        intention: Intention,
        rng: &mut R,
    ) -> Action {
        self.action_likelihood(private_belief, state.actor, intention)
            .sample(rng)
    }
}

/// Uniform over the actions that do not step onto a known non-target fruit.
fn search_distribution(
    known: &BTreeMap<Cell, FruitKind>,
    pose: Pose,
    target: FruitKind,
    grid: GridSpec,
) -> ActionDistribution {
    let allowed = Action::ALL.map(|a| {
        let cell = next_pose(pose, a, grid).cell;
        !matches!(known.get(&cell), Some(&k) if k != target)
    });
    let n = allowed.iter().filter(|&&ok| ok).count();
    if n == 0 {
        return ActionDistribution::uniform();
    }
    let p = 1.0 / n as f64;
    ActionDistribution(allowed.map(|ok| if ok { p } else { 0.0 }))
}

/// One-off likelihood without a shared cache.
pub fn action_likelihood(
    belief: &KnowledgeBelief,
    pose: Pose,
    intention: Intention,
    params: &PolicyParams,
) -> ActionDistribution {
    Planner::new(belief.grid(), *params).action_likelihood(belief, pose, intention)
}

pub fn act<R: Rng + ?Sized>(
    state: &WorldState,
    private_belief: &KnowledgeBelief,
    intention: Intention,
    params: &PolicyParams,
    rng: &mut R,
) -> Action {
    Planner::new(private_belief.grid(), *params).act(state, private_belief, intention, rng)
}
