//! Dataset forge for function calling: single-turn corpus explosion, the
//! three-stage construction pipeline (reasoning generation, reasoning-
//! conditioned call generation, two-round filtering), a completion gateway
//! with deterministic record/replay, and benchmark suite scoring with file
//! I/O. The pure building blocks live in `toolforge-core`.

pub mod corpus;
pub mod gateway;
pub mod pipeline;
pub mod scorefiles;

pub use toolforge_core as core;
