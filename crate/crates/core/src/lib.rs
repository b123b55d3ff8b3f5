pub mod dataset;
pub mod flatten;
pub mod invariants;
pub mod markov;
pub mod ranking;
pub mod rational;
pub mod spectral;
pub mod tree;

pub use dataset::{BoundaryDistribution, PatternCounts, TraitTable, VariableWeighting};
pub use flatten::{Flattening, RatMatrix};
pub use invariants::InvariantScore;
pub use markov::TreeMarkovModel;
pub use ranking::{CandidateScore, Criterion, RankingReport};
pub use rational::Rat;
pub use spectral::{DistanceEstimate, SpectralResult};
pub use tree::{EdgeSplit, LeafLabel, PhyloTree, UnrootedTopology};
