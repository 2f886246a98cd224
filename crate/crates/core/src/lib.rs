//! First-order term rewriting with innermost dependency pairs, and the PVS0 mini-language.
//!
//! * [`term`], [`subst`]: terms, positions, substitutions, matching.
//! * [`rewriting`]: rules, the full/non-root/innermost relations, bounded searches.
//! * [`dp`]: dependency pairs, chains, and the chain/derivation and loop/chain constructions.
//! * [`pvs0`]: fuel-indexed evaluation, calling contexts, and a sample-based comparison of
//!   calling contexts with dependency pairs.
//! * [`syntax`]: file formats.

pub mod dp;
pub mod fixtures;
pub mod pvs0;
pub mod rewriting;
pub mod subst;
pub mod syntax;
pub mod term;

pub use rewriting::{DerivationTrace, RelationMode, Trs, DEFAULT_FUEL};
pub use subst::Substitution;
pub use term::{Position, Term};
