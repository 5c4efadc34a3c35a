//! Grid-world simulator, knowledge beliefs, Boltzmann planner and the
//! attributed-intention filters, with episode generation and trace analysis.

pub mod analysis;
pub mod belief;
pub mod config;
pub mod filter;
pub mod oracle;
pub mod policy;
pub mod scenario;
pub mod world;

pub use analysis::{
    aggregate_frames, pearson, pooled_scatter, AnalysisError, FrameStats, JudgmentTrace, ParticipantR, Scatter, TraceSource,
};
pub use belief::{attributed_observation, AttributedObservation, BeliefError, KnowledgeBelief, Label};
pub use config::{ConfigError, FilterSettings, ModelConfig, ScenarioSettings};
pub use filter::{run_trace, run_trace_with, FilterError, FilterKind, FilterState, IntentFilter, IntentionPosterior, ModelTrace, TraceRow};
pub use oracle::{brute_force_posterior, OracleError};
pub use policy::{ActionDistribution, Intention, Planner, PolicyParams};
pub use scenario::{
    build, canonical_suite, read_episode, write_episode, Archetype, EpisodeFrame, EpisodeMeta, EpisodeRecord,
    RecordError, ScenarioError,
};
pub use world::{
    Action, Cell, CellContent, FovCone, FrameObservation, FruitCounts, FruitKind, GridSpec, Heading, ObserverRegion,
    Pose, WorldError, WorldState,
};
