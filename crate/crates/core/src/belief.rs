//! Knowledge beliefs as sets of consistent worlds.
//!
//! A belief is a per-cell label map. Every fruit placement that agrees with the
//! labels and the fixed fruit totals is an equally likely world, so the belief
//! never stores weights; rejection of contradicting worlds is just relabeling.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    fov_cells, Cell, CellContent, FovCone, FrameObservation, FruitCounts, FruitKind, GridSpec,
    ObserverRegion, WorldError, WorldState,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BeliefError {
    #[error("contradictory observation at {cell}: labeled {label:?}, observed {observed:?}")]
    Contradiction {
        cell: Cell,
        label: Label,
        observed: CellContent,
    },
    #[error("contradictory observation: no fruit placement remains consistent ({0})")]
    NoConsistentWorld(String),
    #[error("enumeration too large: {count} worlds exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("observation cell {0} outside grid")]
    OutOfGrid(Cell),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Unknown,
    Empty,
    Apple,
    Pear,
}

impl From<CellContent> for Label {
    fn from(c: CellContent) -> Self {
        match c {
            CellContent::Empty => Label::Empty,
            CellContent::Apple => Label::Apple,
            CellContent::Pear => Label::Pear,
        }
    }
}

/// Cells observed in common by the observer and the actor's assumed cone,
/// with their true contents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributedObservation {
    pub cells: BTreeSet<Cell>,
    pub contents: BTreeMap<Cell, CellContent>,
}

impl AttributedObservation {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Anything that reveals the contents of a set of cells.
pub trait CellEvidence {
    fn revealed(&self) -> Box<dyn Iterator<Item = (Cell, CellContent)> + '_>;
}

impl CellEvidence for FrameObservation {
    fn revealed(&self) -> Box<dyn Iterator<Item = (Cell, CellContent)> + '_> {
        Box::new(self.contents.iter().map(|(&c, &v)| (c, v)))
    }
}

impl CellEvidence for AttributedObservation {
    fn revealed(&self) -> Box<dyn Iterator<Item = (Cell, CellContent)> + '_> {
        Box::new(self.contents.iter().map(|(&c, &v)| (c, v)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnowledgeBelief {
    grid: GridSpec,
    totals: FruitCounts,
    labels: Vec<Label>,
}

impl KnowledgeBelief {
    /// Uniform belief: every cell Unknown.
    pub fn init(grid: GridSpec) -> Result<Self, BeliefError> {
        Self::with_totals(grid, FruitCounts::default())
    }

    pub fn with_totals(grid: GridSpec, totals: FruitCounts) -> Result<Self, BeliefError> {
        let needed = totals.total() + 1;
        if grid.cell_count() < needed {
            return Err(WorldError::InsufficientCells {
                rows: grid.rows,
                cols: grid.cols,
                needed,
            }
            .into());
        }
        Ok(Self {
            grid,
            totals,
            labels: vec![Label::Unknown; grid.cell_count()],
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn totals(&self) -> FruitCounts {
        self.totals
    }

    pub fn label(&self, cell: Cell) -> Label {
        self.labels[self.grid.index(cell)]
    }

    pub fn labels(&self) -> impl Iterator<Item = (Cell, Label)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (self.grid.cell_at(i), l))
    }

    pub fn unknown_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Unknown).count()
    }

    pub fn known_count(&self, kind: FruitKind) -> usize {
        let want = Label::from(CellContent::from(kind));
        self.labels.iter().filter(|&&l| l == want).count()
    }

    /// Fruits still to be placed among Unknown cells, per kind.
    fn missing(&self) -> (usize, usize) {
        (
            self.totals.apples - self.known_count(FruitKind::Apple),
            self.totals.pears - self.known_count(FruitKind::Pear),
        )
    }

    /// Apply a rejection update: observed cells take their observed content.
    pub fn update<E: CellEvidence + ?Sized>(&self, obs: &E) -> Result<Self, BeliefError> {
        let mut next = self.clone();
        for (cell, content) in obs.revealed() {
            if !self.grid.contains_cell(cell) {
                return Err(BeliefError::OutOfGrid(cell));
            }
            let idx = self.grid.index(cell);
            let observed = Label::from(content);
            match next.labels[idx] {
                Label::Unknown => next.labels[idx] = observed,
                l if l == observed => {}
                label => {
                    return Err(BeliefError::Contradiction {
                        cell,
                        label,
                        observed: content,
                    })
                }
            }
        }
        let apples = next.known_count(FruitKind::Apple);
        let pears = next.known_count(FruitKind::Pear);
        if apples > self.totals.apples || pears > self.totals.pears {
            return Err(BeliefError::NoConsistentWorld(format!(
                "{apples} apples and {pears} pears observed, totals are {} and {}",
                self.totals.apples, self.totals.pears
            )));
        }
        let (ma, mp) = next.missing();
        if next.unknown_count() < ma + mp {
            return Err(BeliefError::NoConsistentWorld(format!(
                "{} unknown cells cannot hold {} missing fruits",
                next.unknown_count(),
                ma + mp
            )));
        }
        Ok(next)
    }

    /// Exact number of fruit placements consistent with the labels.
    pub fn count_worlds(&self) -> u128 {
        let u = self.unknown_count() as u128;
        let (ma, mp) = self.missing();
        binomial(u, ma as u128) * binomial(u - (ma as u128).min(u), mp as u128)
    }

    /// Fruit cells that hold in every consistent world. Beyond the labeled
    /// fruits this includes Unknown cells forced by the counting constraint.
    pub fn certain_fruits(&self) -> BTreeMap<Cell, FruitKind> {
        let mut out: BTreeMap<Cell, FruitKind> = self
            .labels()
            .filter_map(|(c, l)| match l {
                Label::Apple => Some((c, FruitKind::Apple)),
                Label::Pear => Some((c, FruitKind::Pear)),
                _ => None,
            })
            .collect();
        let (ma, mp) = self.missing();
        let u = self.unknown_count();
        if u > 0 && u == ma + mp && (ma == 0 || mp == 0) {
            let kind = if ma > 0 { FruitKind::Apple } else { FruitKind::Pear };
            for (c, l) in self.labels() {
                if l == Label::Unknown {
                    out.insert(c, kind);
                }
            }
        }
        out
    }

    /// Every consistent placement, each exactly once, as `(apples, pears)`.
    pub fn enumerate_worlds(
        &self,
        cap: u128,
    ) -> Result<impl Iterator<Item = (Vec<Cell>, Vec<Cell>)> + '_, BeliefError> {
        let count = self.count_worlds();
        if count > cap {
            return Err(BeliefError::EnumerationTooLarge { count, cap });
        }
        let known = |label: Label| -> Vec<Cell> {
            self.labels()
                .filter(|&(_, l)| l == label)
                .map(|(c, _)| c)
                .collect()
        };
        let known_apples = known(Label::Apple);
        let known_pears = known(Label::Pear);
        let unknown = known(Label::Unknown);
        let (ma, mp) = self.missing();
        let iter = unknown
            .clone()
            .into_iter()
            .combinations(ma)
            .flat_map(move |extra_apples| {
                let rest: Vec<Cell> = unknown
                    .iter()
                    .copied()
                    .filter(|c| !extra_apples.contains(c))
                    .collect();
                let mut apples = known_apples.clone();
                apples.extend(extra_apples);
                apples.sort();
                let known_pears = known_pears.clone();
                rest.into_iter().combinations(mp).map(move |extra_pears| {
                    let mut pears = known_pears.clone();
                    pears.extend(extra_pears);
                    pears.sort();
                    (apples.clone(), pears)
                })
            });
        Ok(iter)
    }

    /// The belief with apple and pear labels exchanged.
    pub fn swapped_kinds(&self) -> Self {
        let labels = self
            .labels
            .iter()
            .map(|l| match l {
                Label::Apple => Label::Pear,
                Label::Pear => Label::Apple,
                other => *other,
            })
            .collect();
        Self {
            grid: self.grid,
            totals: FruitCounts {
                apples: self.totals.pears,
                pears: self.totals.apples,
            },
            labels,
        }
    }
}

/// Cells the observer can check against what it assumes the actor sees.
/// Empty when the observer cannot see the actor.
pub fn attributed_observation(
    state: &WorldState,
    region: ObserverRegion,
    assumed_cone: FovCone,
    grid: GridSpec,
) -> AttributedObservation {
    if !region.contains(state.actor.cell) {
        return AttributedObservation::default();
    }
    let cells: BTreeSet<Cell> = fov_cells(state.actor, assumed_cone, grid)
        .into_iter()
        .filter(|&c| region.contains(c))
        .collect();
    let contents = cells.iter().map(|&c| (c, state.content(c))).collect();
    AttributedObservation { cells, contents }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{observe_actor_view, Heading, Pose};

    fn small() -> (GridSpec, FruitCounts) {
        (GridSpec::new(3, 3).unwrap(), FruitCounts { apples: 1, pears: 1 })
    }

    /// Brute force: every assignment of {Empty, Apple, Pear} to every cell
    /// that matches the labels and the totals.
    fn brute_count(b: &KnowledgeBelief) -> u128 {
        let n = b.grid().cell_count();
        let mut count = 0;
        for code in 0..3usize.pow(n as u32) {
            let mut x = code;
            let mut apples = 0;
            let mut pears = 0;
            let mut ok = true;
            for i in 0..n {
                let v = x % 3;
                x /= 3;
                let label = b.labels[i];
                match v {
                    1 => apples += 1,
                    2 => pears += 1,
                    _ => {}
                }
                let matches = match label {
                    Label::Unknown => true,
                    Label::Empty => v == 0,
                    Label::Apple => v == 1,
                    Label::Pear => v == 2,
                };
                ok &= matches;
            }
            if ok && apples == b.totals().apples && pears == b.totals().pears {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn init_is_all_unknown() {
        let b = KnowledgeBelief::init(GridSpec::default()).unwrap();
        assert_eq!(b.unknown_count(), 175);
    }

    #[test]
    fn full_field_world_count() {
        let b = KnowledgeBelief::init(GridSpec::default()).unwrap();
        assert_eq!(b.count_worlds(), 226_517_550);
    }

    #[test]
    fn tiny_grid_rejected() {
        assert!(KnowledgeBelief::init(GridSpec::new(2, 2).unwrap()).is_err());
    }

    #[test]
    fn small_grid_counts_match_brute_force() {
        let (g, t) = small();
        let b = KnowledgeBelief::with_totals(g, t).unwrap();
        assert_eq!(brute_count(&b), 72);
        assert_eq!(b.count_worlds(), 72);

        let obs = AttributedObservation {
            cells: BTreeSet::from([Cell::new(0, 0)]),
            contents: BTreeMap::from([(Cell::new(0, 0), CellContent::Empty)]),
        };
        let b1 = b.update(&obs).unwrap();
        assert_eq!(brute_count(&b1), 56);
        assert_eq!(b1.count_worlds(), 56);
        assert_eq!(b1.enumerate_worlds(1000).unwrap().count(), 56);
    }

    #[test]
    fn fully_known_is_one_world() {
        let g = GridSpec::default();
        let s = WorldState::new(
            Pose::new(0, 0, Heading::EAST),
            vec![Cell::new(1, 1), Cell::new(2, 2)],
            vec![Cell::new(3, 3), Cell::new(4, 4)],
        );
        let full = crate::world::observe_observer_view(&s, ObserverRegion::full(g));
        let b = KnowledgeBelief::init(g).unwrap().update(&full).unwrap();
        assert_eq!(b.count_worlds(), 1);
        let worlds: Vec<_> = b.enumerate_worlds(1).unwrap().collect();
        assert_eq!(worlds, vec![(s.apples.clone(), s.pears.clone())]);
    }

    #[test]
    fn empty_observation_shrinks_count_and_is_idempotent() {
        let g = GridSpec::default();
        let b = KnowledgeBelief::init(g).unwrap();
        let s = WorldState::new(
            Pose::new(3, 3, Heading::EAST),
            vec![Cell::new(0, 20), Cell::new(6, 24)],
            vec![Cell::new(0, 0), Cell::new(6, 0)],
        );
        let obs = observe_actor_view(&s, FovCone::default(), g);
        let b1 = b.update(&obs).unwrap();
        assert!(b1.count_worlds() < b.count_worlds());
        assert_eq!(b1.update(&obs).unwrap(), b1);
    }

    #[test]
    fn contradiction_is_reported() {
        let (g, t) = small();
        let b = KnowledgeBelief::with_totals(g, t).unwrap();
        let apple = AttributedObservation {
            cells: BTreeSet::from([Cell::new(1, 1)]),
            contents: BTreeMap::from([(Cell::new(1, 1), CellContent::Apple)]),
        };
        let pear = AttributedObservation {
            cells: BTreeSet::from([Cell::new(1, 1)]),
            contents: BTreeMap::from([(Cell::new(1, 1), CellContent::Pear)]),
        };
        let b1 = b.update(&apple).unwrap();
        let err = b1.update(&pear).unwrap_err();
        assert!(err.to_string().contains("contradictory observation"));

        let second_apple = AttributedObservation {
            cells: BTreeSet::from([Cell::new(0, 0)]),
            contents: BTreeMap::from([(Cell::new(0, 0), CellContent::Apple)]),
        };
        assert!(matches!(
            b1.update(&second_apple),
            Err(BeliefError::NoConsistentWorld(_))
        ));
    }

    #[test]
    fn observed_apples_pin_every_world() {
        let g = GridSpec::new(3, 4).unwrap();
        let b = KnowledgeBelief::with_totals(g, FruitCounts::default()).unwrap();
        let obs = AttributedObservation {
            cells: BTreeSet::from([Cell::new(0, 1), Cell::new(2, 3)]),
            contents: BTreeMap::from([
                (Cell::new(0, 1), CellContent::Apple),
                (Cell::new(2, 3), CellContent::Apple),
            ]),
        };
        let b1 = b.update(&obs).unwrap();
        let worlds: Vec<_> = b1.enumerate_worlds(10_000).unwrap().collect();
        assert_eq!(worlds.len() as u128, b1.count_worlds());
        assert!(worlds
            .iter()
            .all(|(a, _)| a == &vec![Cell::new(0, 1), Cell::new(2, 3)]));
    }

    #[test]
    fn enumeration_cap_guard() {
        let b = KnowledgeBelief::init(GridSpec::default()).unwrap();
        assert!(matches!(
            b.enumerate_worlds(1_000_000),
            Err(BeliefError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn forced_cells_become_certain() {
        let (g, t) = small();
        let b = KnowledgeBelief::with_totals(g, t).unwrap();
        // Apple seen, seven cells empty: the last Unknown cell must hold the pear.
        let mut contents = BTreeMap::new();
        for (i, c) in g.cells().enumerate() {
            if i == 0 {
                contents.insert(c, CellContent::Apple);
            } else if i < 8 {
                contents.insert(c, CellContent::Empty);
            }
        }
        let obs = AttributedObservation {
            cells: contents.keys().copied().collect(),
            contents,
        };
        let b1 = b.update(&obs).unwrap();
        assert_eq!(b1.count_worlds(), 1);
        let certain = b1.certain_fruits();
        assert_eq!(certain.get(&Cell::new(2, 2)), Some(&FruitKind::Pear));
        assert_eq!(certain.len(), 2);
    }

    #[test]
    fn attributed_observation_cases() {
        let g = GridSpec::default();
        let region = ObserverRegion::default_for(g);
        let cone = FovCone::default();
        // Actor outside region.
        let hidden = WorldState::new(
            Pose::new(3, 20, Heading::WEST),
            vec![Cell::new(3, 14), Cell::new(0, 0)],
            vec![Cell::new(6, 6), Cell::new(6, 7)],
        );
        assert!(attributed_observation(&hidden, region, cone, g).is_empty());

        // Full region: same as the actor's own view.
        let s = WorldState::new(
            Pose::new(3, 12, Heading::EAST),
            vec![Cell::new(3, 14), Cell::new(0, 0)],
            vec![Cell::new(3, 18), Cell::new(6, 7)],
        );
        let full = attributed_observation(&s, ObserverRegion::full(g), cone, g);
        let own = observe_actor_view(&s, cone, g);
        assert_eq!(full.cells, own.visible_cells);
        assert_eq!(full.contents, own.contents);

        // Apple in the overlap, pear in the cone but outside the region.
        let part = attributed_observation(&s, region, cone, g);
        assert_eq!(part.contents.get(&Cell::new(3, 14)), Some(&CellContent::Apple));
        assert!(!part.cells.contains(&Cell::new(3, 18)));
        let fruits: Vec<_> = part
            .contents
            .iter()
            .filter(|(_, v)| **v != CellContent::Empty)
            .collect();
        assert_eq!(fruits.len(), 1);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(175, 2), 15_225);
        assert_eq!(binomial(173, 2), 14_878);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(9, 0), 1);
    }
}
