//! Verdicts, equivalent-model constructions and generic sample bounds.

pub mod construct;
pub mod generic;
pub mod verdict;

pub use construct::{
    construct_rank1_recombination, construct_rank1_recombination_multi, construct_state_inflation,
    inflate_quasi, recombine_joint, Recombination, RecombinationSide,
};
pub use generic::{binomial, n_star, vandermonde_witness, NStarBound, NStarVariant, WitnessReport};
pub use verdict::{
    check_minimality_necessary, verdict_heterogeneous, verdict_homogeneous, verdict_nonstationary,
    verdict_single, ScheduleVerdict, Setting, SumCheck, Verdict,
};
