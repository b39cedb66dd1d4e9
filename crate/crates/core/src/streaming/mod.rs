//! Streaming algorithms for fair matroid submodular maximization: first-pass
//! reservoirs, the two-pass extension pipeline, the one-pass heuristic, the
//! pluggable two-matroid routine, and the random baseline.

mod one_pass;
mod random;
mod reservoir;
mod routine_a;
mod two_pass;

pub use one_pass::greedy_fair_streaming;
pub use random::random_base;
pub use reservoir::{fair_reservoir, greedy_fair_reservoir, FirstPass, Reservoir};
pub use routine_a::{ExactRoutineA, RoutineA, SwapRoutineA, TwoMatroidRun};
pub use two_pass::{balanced_split, fair_streaming, fair_streaming_plus, RunCarry};

pub(crate) use reservoir::{collect_reservoirs, ReservoirMode};
