//! Reward ensemble and data-curation funnel for decomposition-based claim
//! verification.
//!
//! The crate has two halves:
//!
//! * scoring: [`trace`] parses a policy's XML verification trace, [`rewards`]
//!   turns it into the seven-component [`rewards::RewardBreakdown`], pseudo-labels
//!   rollout groups and normalizes group advantages for an external GRPO trainer;
//! * curation: [`funnel`] distills claim corpora through rule filters, a
//!   difficulty band, MinHash and semantic dedup, decontamination, silver
//!   decomposition gating, square-root budgeted facility-location selection and
//!   long-evidence augmentation.
//!
//! External evaluators (LLM judges, embedders, the difficulty verifier, NER)
//! live behind the traits in [`backends`], all of which can run from on-disk
//! fixtures with zero network.

pub mod backends;
pub mod corpus;
pub mod funnel;
pub mod io;
pub mod metrics;
pub mod par;
pub mod rewards;
pub mod synth;
pub mod trace;

pub use corpus::{ClaimRecord, Label};
pub use trace::{parse_trace, render_trace, ParseReport, Trace};
