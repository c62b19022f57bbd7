//! Bounded model checking for MiniC with selectable SMT theory encodings and
//! a continuous-verification driver.
//!
//! The pipeline is `frontend` → `transform` → `vcgen` → `encode`/`solve`,
//! with `witness` providing concrete execution, counterexample replay and the
//! exhaustive reference oracle. `equiv` and `cv` build on the pipeline.

pub mod cli;
pub mod cv;
pub mod encode;
pub mod equiv;
pub mod frontend;
pub mod pipeline;
pub mod semantics;
pub mod solve;
pub mod transform;
pub mod vcgen;
pub mod witness;
