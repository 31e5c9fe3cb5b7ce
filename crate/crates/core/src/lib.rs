//! Finite topological groupoids, inverse semigroup actions by partial
//! equivalences, and Fell bundles over inverse semigroups.

#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod action;
pub mod bibundle;
pub mod cstar;
pub mod fintop;
pub mod fixtures;
pub mod groupoid;
pub mod isg;
pub mod random;

/// Cap on exhaustive searches, from `PEQLIB_MAX_ENUM` (default one million).
pub fn max_enum() -> usize {
    std::env::var("PEQLIB_MAX_ENUM").ok().and_then(|v| v.parse().ok()).unwrap_or(1_000_000)
}
