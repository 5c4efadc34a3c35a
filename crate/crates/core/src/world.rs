//! Discrete grid environment: geometry, actor kinematics, fruit placement and
//! field-of-view computation for the actor and the fixed observer.
//!
//! Headings are eight compass directions in 45° steps, 0 = east, counted
//! counterclockwise. Row 0 is the top row, so "north" decreases the row index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("insufficient cells: grid {rows}x{cols} cannot hold {needed} distinct objects")]
    InsufficientCells { rows: usize, cols: usize, needed: usize },
    #[error("invalid grid {rows}x{cols}: both dimensions must be at least 1")]
    InvalidGrid { rows: usize, cols: usize },
    #[error("invalid field of view: {0}")]
    InvalidCone(String),
    #[error("invalid observer region: {0}")]
    InvalidRegion(String),
    #[error("invalid world state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rows: 7, cols: 25 }
    }
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self, WorldError> {
        if rows == 0 || cols == 0 {
            return Err(WorldError::InvalidGrid { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    /// Row-major index of a cell.
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }
}

/// A grid cell. Serialized as `[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl From<(usize, usize)> for Cell {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

impl From<Cell> for (usize, usize) {
    fn from(c: Cell) -> Self {
        (c.row, c.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// One of eight compass directions, 0 = east, counterclockwise positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Heading(u8);

impl Heading {
    pub const EAST: Heading = Heading(0);
    pub const NORTH_EAST: Heading = Heading(1);
    pub const NORTH: Heading = Heading(2);
    pub const NORTH_WEST: Heading = Heading(3);
    pub const WEST: Heading = Heading(4);
    pub const SOUTH_WEST: Heading = Heading(5);
    pub const SOUTH: Heading = Heading(6);
    pub const SOUTH_EAST: Heading = Heading(7);

    pub const ALL: [Heading; 8] = [
        Heading(0),
        Heading(1),
        Heading(2),
        Heading(3),
        Heading(4),
        Heading(5),
        Heading(6),
        Heading(7),
    ];

    pub fn new(index: u8) -> Option<Self> {
        (index < 8).then_some(Heading(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        45.0 * f64::from(self.0)
    }

    pub fn rotated_ccw(self) -> Self {
        Heading((self.0 + 1) % 8)
    }

    pub fn rotated_cw(self) -> Self {
        Heading((self.0 + 7) % 8)
    }

    pub fn opposite(self) -> Self {
        Heading((self.0 + 4) % 8)
    }

    /// Unit displacement `(d_row, d_col)` for one forward move.
    pub fn delta(self) -> (i64, i64) {
        match self.0 {
            0 => (0, 1),
            1 => (-1, 1),
            2 => (-1, 0),
            3 => (-1, -1),
            4 => (0, -1),
            5 => (1, -1),
            6 => (1, 0),
            _ => (1, 1),
        }
    }
}

impl TryFrom<u8> for Heading {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Heading::new(value).ok_or_else(|| format!("heading {value} out of range 0..8"))
    }
}

impl From<Heading> for u8 {
    fn from(h: Heading) -> Self {
        h.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
}

impl Pose {
    pub fn new(row: usize, col: usize, heading: Heading) -> Self {
        Self {
            cell: Cell::new(row, col),
            heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Backward,
    TurnCW,
    TurnCCW,
    Noop,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Forward,
        Action::Backward,
        Action::TurnCW,
        Action::TurnCCW,
        Action::Noop,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::Backward => 1,
            Action::TurnCW => 2,
            Action::TurnCCW => 3,
            Action::Noop => 4,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FruitKind {
    Apple,
    Pear,
}

impl FruitKind {
    pub fn other(self) -> Self {
        match self {
            FruitKind::Apple => FruitKind::Pear,
            FruitKind::Pear => FruitKind::Apple,
        }
    }
}

/// What an observed cell contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellContent {
    Empty,
    Apple,
    Pear,
}

impl From<FruitKind> for CellContent {
    fn from(k: FruitKind) -> Self {
        match k {
            FruitKind::Apple => CellContent::Apple,
            FruitKind::Pear => CellContent::Pear,
        }
    }
}

impl CellContent {
    pub fn fruit(self) -> Option<FruitKind> {
        match self {
            CellContent::Empty => None,
            CellContent::Apple => Some(FruitKind::Apple),
            CellContent::Pear => Some(FruitKind::Pear),
        }
    }
}

/// Number of fruits of each kind on the field. The canonical environment has
/// two of each; small test grids use fewer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FruitCounts {
    pub apples: usize,
    pub pears: usize,
}

impl Default for FruitCounts {
    fn default() -> Self {
        Self { apples: 2, pears: 2 }
    }
}

impl FruitCounts {
    pub fn total(&self) -> usize {
        self.apples + self.pears
    }

    pub fn of(&self, kind: FruitKind) -> usize {
        match kind {
            FruitKind::Apple => self.apples,
            FruitKind::Pear => self.pears,
        }
    }
}

/// Full environment configuration. Fruit lists are kept sorted so that equal
/// placements compare and serialize identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub actor: Pose,
    pub apples: Vec<Cell>,
    pub pears: Vec<Cell>,
}

impl WorldState {
    pub fn new(actor: Pose, mut apples: Vec<Cell>, mut pears: Vec<Cell>) -> Self {
        apples.sort();
        pears.sort();
        Self { actor, apples, pears }
    }

    pub fn validate(&self, grid: GridSpec, counts: FruitCounts) -> Result<(), WorldError> {
        if self.apples.len() != counts.apples || self.pears.len() != counts.pears {
            return Err(WorldError::InvalidState(format!(
                "expected {} apples and {} pears, found {} and {}",
                counts.apples,
                counts.pears,
                self.apples.len(),
                self.pears.len()
            )));
        }
        if !grid.contains_cell(self.actor.cell) {
            return Err(WorldError::InvalidState(format!(
                "actor cell {} outside grid",
                self.actor.cell
            )));
        }
        let mut seen = BTreeSet::new();
        for &c in self.apples.iter().chain(&self.pears) {
            if !grid.contains_cell(c) {
                return Err(WorldError::InvalidState(format!("fruit cell {c} outside grid")));
            }
            if !seen.insert(c) {
                return Err(WorldError::InvalidState(format!("two fruits share cell {c}")));
            }
        }
        Ok(())
    }

    pub fn content(&self, cell: Cell) -> CellContent {
        if self.apples.contains(&cell) {
            CellContent::Apple
        } else if self.pears.contains(&cell) {
            CellContent::Pear
        } else {
            CellContent::Empty
        }
    }

    pub fn fruits(&self, kind: FruitKind) -> &[Cell] {
        match kind {
            FruitKind::Apple => &self.apples,
            FruitKind::Pear => &self.pears,
        }
    }

    /// The same world with apples and pears exchanged.
    pub fn swapped_kinds(&self) -> Self {
        Self::new(self.actor, self.pears.clone(), self.apples.clone())
    }
}

/// Draw an actor pose and fruit placement uniformly from a seeded RNG.
pub fn spawn(seed: u64, grid: GridSpec) -> Result<WorldState, WorldError> {
    spawn_with_counts(seed, grid, FruitCounts::default())
}

pub fn spawn_with_counts(
    seed: u64,
    grid: GridSpec,
    counts: FruitCounts,
) -> Result<WorldState, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spawn_from_rng(&mut rng, grid, counts)
}

pub fn spawn_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    grid: GridSpec,
    counts: FruitCounts,
) -> Result<WorldState, WorldError> {
    let needed = counts.total() + 1;
    if grid.cell_count() < needed {
        return Err(WorldError::InsufficientCells {
            rows: grid.rows,
            cols: grid.cols,
            needed,
        });
    }
    let picks = index::sample(rng, grid.cell_count(), needed).into_vec();
    let actor_cell = grid.cell_at(picks[0]);
    let apples = picks[1..=counts.apples].iter().map(|&i| grid.cell_at(i)).collect();
    let pears = picks[counts.apples + 1..].iter().map(|&i| grid.cell_at(i)).collect();
    let heading = Heading(rng.gen_range(0..8));
    Ok(WorldState::new(
        Pose {
            cell: actor_cell,
            heading,
        },
        apples,
        pears,
    ))
}

/// Kinematics only: the pose after `action`, with moves clamped at walls.
pub fn next_pose(pose: Pose, action: Action, grid: GridSpec) -> Pose {
    let translate = |sign: i64| {
        let (dr, dc) = pose.heading.delta();
        let r = pose.cell.row as i64 + sign * dr;
        let c = pose.cell.col as i64 + sign * dc;
        if grid.contains(r, c) {
            Cell::new(r as usize, c as usize)
        } else {
            pose.cell
        }
    };
    match action {
        Action::Forward => Pose {
            cell: translate(1),
            ..pose
        },
        Action::Backward => Pose {
            cell: translate(-1),
            ..pose
        },
        Action::TurnCW => Pose {
            heading: pose.heading.rotated_cw(),
            ..pose
        },
        Action::TurnCCW => Pose {
            heading: pose.heading.rotated_ccw(),
            ..pose
        },
        Action::Noop => pose,
    }
}

/// Advance the world by one action. Fruits never move; a touch is reported
/// when the actor ends up on a fruit cell.
pub fn step(state: &WorldState, action: Action, grid: GridSpec) -> (WorldState, Option<FruitKind>) {
    let actor = next_pose(state.actor, action, grid);
    let next = WorldState {
        actor,
        apples: state.apples.clone(),
        pears: state.pears.clone(),
    };
    let touch = next.content(actor.cell).fruit();
    (next, touch)
}

/// Angular cone in front of the actor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FovCone {
    /// Degrees either side of the heading.
    pub half_angle: f64,
    /// Euclidean reach in cells, measured between cell centers.
    pub range: f64,
}

impl Default for FovCone {
    fn default() -> Self {
        Self {
            half_angle: 45.0,
            range: 8.0,
        }
    }
}

impl FovCone {
    pub fn new(half_angle: f64, range: f64) -> Result<Self, WorldError> {
        let cone = Self { half_angle, range };
        cone.validate()?;
        Ok(cone)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.half_angle > 0.0 && self.half_angle <= 180.0) {
            return Err(WorldError::InvalidCone(format!(
                "half_angle {} not in (0, 180]",
                self.half_angle
            )));
        }
        if self.range.is_nan() || self.range < 0.0 {
            return Err(WorldError::InvalidCone(format!("range {} is negative", self.range)));
        }
        Ok(())
    }
}

// Slack for cells lying exactly on the cone boundary.
const ANGLE_EPS: f64 = 1e-9;

/// Whether `target` lies inside the cone anchored at `pose`.
pub fn in_cone(pose: Pose, cone: FovCone, target: Cell) -> bool {
    if target == pose.cell {
        return true;
    }
    let d_row = target.row as f64 - pose.cell.row as f64;
    let d_col = target.col as f64 - pose.cell.col as f64;
    let dist_sq = d_row * d_row + d_col * d_col;
    if dist_sq > cone.range * cone.range + ANGLE_EPS {
        return false;
    }
    // North is up: flip the row axis to get a conventional bearing.
    let bearing = (-d_row).atan2(d_col).to_degrees();
    let mut diff = (bearing - pose.heading.degrees()).rem_euclid(360.0);
    if diff > 180.0 {
        diff = 360.0 - diff;
    }
    diff <= cone.half_angle + ANGLE_EPS
}

/// Cells the actor sees: its own cell plus every in-bounds cell inside the cone.
pub fn fov_cells(pose: Pose, cone: FovCone, grid: GridSpec) -> BTreeSet<Cell> {
    grid.cells().filter(|&c| in_cone(pose, cone, c)).collect()
}

/// Fixed rectangular area visible to the observer (inclusive bounds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObserverRegion {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
}

impl ObserverRegion {
    pub fn new(
        row_lo: usize,
        row_hi: usize,
        col_lo: usize,
        col_hi: usize,
        grid: GridSpec,
    ) -> Result<Self, WorldError> {
        let region = Self {
            row_lo,
            row_hi,
            col_lo,
            col_hi,
        };
        region.validate(grid)?;
        Ok(region)
    }

    pub fn full(grid: GridSpec) -> Self {
        Self {
            row_lo: 0,
            row_hi: grid.rows - 1,
            col_lo: 0,
            col_hi: grid.cols - 1,
        }
    }

    /// All rows, the middle seven columns (9..=15 on a 25-column field).
    pub fn default_for(grid: GridSpec) -> Self {
        let width = 7.min(grid.cols);
        let col_lo = (grid.cols - width) / 2;
        Self {
            row_lo: 0,
            row_hi: grid.rows - 1,
            col_lo,
            col_hi: col_lo + width - 1,
        }
    }

    pub fn validate(&self, grid: GridSpec) -> Result<(), WorldError> {
        if self.row_lo > self.row_hi || self.col_lo > self.col_hi {
            return Err(WorldError::InvalidRegion(format!("empty region {self:?}")));
        }
        if self.row_hi >= grid.rows || self.col_hi >= grid.cols {
            return Err(WorldError::InvalidRegion(format!(
                "region {self:?} exceeds grid {}x{}",
                grid.rows, grid.cols
            )));
        }
        Ok(())
    }

    pub fn contains(&self, cell: Cell) -> bool {
        (self.row_lo..=self.row_hi).contains(&cell.row) && (self.col_lo..=self.col_hi).contains(&cell.col)
    }

    pub fn covers(&self, grid: GridSpec) -> bool {
        *self == Self::full(grid)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.row_lo..=self.row_hi)
            .flat_map(move |r| (self.col_lo..=self.col_hi).map(move |c| Cell::new(r, c)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameObservation {
    pub visible_cells: BTreeSet<Cell>,
    pub contents: BTreeMap<Cell, CellContent>,
    pub actor_pose_visible: bool,
    pub actor_pose: Option<Pose>,
}

impl FrameObservation {
    pub fn from_cells(state: &WorldState, cells: BTreeSet<Cell>, actor_visible: bool) -> Self {
        let contents = cells.iter().map(|&c| (c, state.content(c))).collect();
        Self {
            visible_cells: cells,
            contents,
            actor_pose_visible: actor_visible,
            actor_pose: actor_visible.then_some(state.actor),
        }
    }
}

/// What the actor itself sees this frame.
pub fn observe_actor_view(state: &WorldState, cone: FovCone, grid: GridSpec) -> FrameObservation {
    FrameObservation::from_cells(state, fov_cells(state.actor, cone, grid), true)
}

/// What the fixed observer sees this frame.
pub fn observe_observer_view(state: &WorldState, region: ObserverRegion) -> FrameObservation {
    let visible = region.contains(state.actor.cell);
    FrameObservation::from_cells(state, region.cells().collect(), visible)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn state_at(pose: Pose) -> WorldState {
        WorldState::new(
            pose,
            vec![Cell::new(0, 20), Cell::new(6, 24)],
            vec![Cell::new(1, 1), Cell::new(5, 5)],
        )
    }

    #[test]
    fn spawn_is_seeded() {
        let a = spawn(42, grid()).unwrap();
        let b = spawn(42, grid()).unwrap();
        assert_eq!(a, b);
        a.validate(grid(), FruitCounts::default()).unwrap();
    }

    #[test]
    fn spawn_rejects_tiny_grid() {
        let err = spawn(1, GridSpec::new(2, 2).unwrap()).unwrap_err();
        assert!(matches!(err, WorldError::InsufficientCells { needed: 5, .. }));
        assert!(err.to_string().contains("insufficient cells"));
    }

    #[test]
    fn spawn_cells_distinct_over_many_seeds() {
        for seed in 0..1000 {
            let s = spawn(seed, grid()).unwrap();
            let mut cells: Vec<Cell> = s.apples.iter().chain(&s.pears).copied().collect();
            cells.push(s.actor.cell);
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 5, "seed {seed}");
        }
    }

    #[test]
    fn noop_is_identity() {
        let s = state_at(Pose::new(3, 3, Heading::EAST));
        let (n, touch) = step(&s, Action::Noop, grid());
        assert_eq!(n, s);
        assert_eq!(touch, None);
    }

    #[test]
    fn forward_into_wall_is_clamped() {
        let s = state_at(Pose::new(0, 0, Heading::WEST));
        let (n, touch) = step(&s, Action::Forward, grid());
        assert_eq!(n.actor, s.actor);
        assert_eq!(touch, None);
    }

    #[test]
    fn forward_onto_apple_touches() {
        let s = WorldState::new(
            Pose::new(2, 4, Heading::EAST),
            vec![Cell::new(2, 5), Cell::new(6, 24)],
            vec![Cell::new(1, 1), Cell::new(5, 5)],
        );
        let (n, touch) = step(&s, Action::Forward, grid());
        assert_eq!(n.actor.cell, Cell::new(2, 5));
        assert_eq!(touch, Some(FruitKind::Apple));
    }

    #[test]
    fn diagonal_and_turn_kinematics() {
        let p = Pose::new(3, 3, Heading::NORTH_EAST);
        assert_eq!(next_pose(p, Action::Forward, grid()).cell, Cell::new(2, 4));
        assert_eq!(next_pose(p, Action::Backward, grid()).cell, Cell::new(4, 2));
        assert_eq!(next_pose(p, Action::TurnCW, grid()).heading, Heading::EAST);
        assert_eq!(next_pose(p, Action::TurnCCW, grid()).heading, Heading::NORTH);
        let s = Pose::new(6, 0, Heading::SOUTH_WEST);
        assert_eq!(next_pose(s, Action::Forward, grid()).cell, s.cell);
    }

    #[test]
    fn zero_range_sees_only_own_cell() {
        let cone = FovCone::new(45.0, 0.0).unwrap();
        let cells = fov_cells(Pose::new(3, 3, Heading::EAST), cone, grid());
        assert_eq!(cells, BTreeSet::from([Cell::new(3, 3)]));
    }

    #[test]
    fn full_cone_sees_everything() {
        let cone = FovCone::new(180.0, f64::INFINITY).unwrap();
        let cells = fov_cells(Pose::new(3, 3, Heading::EAST), cone, grid());
        assert_eq!(cells.len(), grid().cell_count());
    }

    #[test]
    fn quarter_cone_matches_brute_force() {
        // Independent check: enumerate offsets and apply |atan2| <= 45 and r <= 2
        // with integer arithmetic (|d_row| <= d_col, d_row^2 + d_col^2 <= 4).
        let pose = Pose::new(3, 3, Heading::EAST);
        let cone = FovCone::new(45.0, 2.0).unwrap();
        let got = fov_cells(pose, cone, grid());
        let mut expected = BTreeSet::new();
        for r in 0..7i64 {
            for c in 0..25i64 {
                let (dr, dc) = (r - 3, c - 3);
                if (dr == 0 && dc == 0) || (dr.abs() <= dc && dr * dr + dc * dc <= 4) {
                    expected.insert(Cell::new(r as usize, c as usize));
                }
            }
        }
        assert_eq!(got, expected);
        assert_eq!(
            got,
            BTreeSet::from([
                Cell::new(3, 3),
                Cell::new(3, 4),
                Cell::new(3, 5),
                Cell::new(2, 4),
                Cell::new(4, 4),
            ])
        );
    }

    #[test]
    fn cone_validation() {
        assert!(FovCone::new(0.0, 3.0).is_err());
        assert!(FovCone::new(181.0, 3.0).is_err());
        assert!(FovCone::new(30.0, -1.0).is_err());
    }

    #[test]
    fn actor_view_reports_fruit_in_cone_only() {
        let s = WorldState::new(
            Pose::new(3, 3, Heading::EAST),
            vec![Cell::new(3, 6), Cell::new(6, 24)],
            vec![Cell::new(3, 0), Cell::new(5, 5)],
        );
        let obs = observe_actor_view(&s, FovCone::default(), grid());
        assert_eq!(obs.contents.get(&Cell::new(3, 6)), Some(&CellContent::Apple));
        // Pear behind the actor.
        assert!(!obs.contents.contains_key(&Cell::new(3, 0)));
        assert_eq!(obs.contents.get(&Cell::new(3, 4)), Some(&CellContent::Empty));
        assert!(obs.actor_pose_visible);
        assert_eq!(obs.visible_cells.len(), obs.contents.len());
    }

    #[test]
    fn observer_view_hides_actor_outside_region() {
        let region = ObserverRegion::default_for(grid());
        assert_eq!((region.col_lo, region.col_hi), (9, 15));
        let s = WorldState::new(
            Pose::new(3, 22, Heading::WEST),
            vec![Cell::new(3, 12), Cell::new(6, 24)],
            vec![Cell::new(1, 10), Cell::new(5, 2)],
        );
        let obs = observe_observer_view(&s, region);
        assert!(!obs.actor_pose_visible);
        assert_eq!(obs.actor_pose, None);
        assert_eq!(obs.contents.get(&Cell::new(3, 12)), Some(&CellContent::Apple));
        assert_eq!(obs.contents.get(&Cell::new(1, 10)), Some(&CellContent::Pear));
        assert!(!obs.contents.contains_key(&Cell::new(6, 24)));

        let full = observe_observer_view(&s, ObserverRegion::full(grid()));
        assert_eq!(full.contents.len(), 175);
        assert!(full.actor_pose_visible);
    }

    #[test]
    fn region_validation() {
        let g = grid();
        assert!(ObserverRegion::new(0, 6, 9, 15, g).is_ok());
        assert!(ObserverRegion::new(3, 2, 0, 1, g).is_err());
        assert!(ObserverRegion::new(0, 7, 0, 1, g).is_err());
    }
}
