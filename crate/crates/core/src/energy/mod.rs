//! Energy-controlled perspective loss: a frozen perspective classifier,
//! anchor/tone/perspective energies, their weighted combination and the
//! `exp(-1/E)` normalization.
//!
//! Note that under this normalization a *higher* combined energy gives a
//! higher probability, so training raises the true perspective's energy.

pub mod classifier;
pub mod components;
pub mod lexicon;

pub use classifier::{span_examples, train_classifier, BoundClassifier, ClassifierConfig, LabeledIds, PerspectiveClassifier};
pub use components::{
    anchor_energy, combine_energy, energy_softmax, energy_softmax_eps, perspective_energy, perspective_loss, tone_energy,
    total_loss, AnchorScore, EnergyBreakdown, EnergyComponent, EnergyScorer, EnergyWeights, PerspectiveVec, SoftEnergy,
    ENERGY_EPS, PROB_FLOOR,
};
pub use lexicon::ToneLexicon;
