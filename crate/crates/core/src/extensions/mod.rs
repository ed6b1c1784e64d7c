//! Variations on the base game.
//!
//! Four departures, each self-contained: stakes that flip sign with the
//! state, a policymaker who reads turnout before conceding, a search for
//! the similarity profile that maximizes turnout, and comparisons across
//! information structures whose marginals move.

pub mod aggregation;
pub mod optimal;
pub mod signed_state;
pub mod spread;
