//! Baseline budget allocations and topological node rankings.
//!
//! Ranked strategies turn a ranking into controls by giving the top
//! `floor(B)` nodes a full unit and the next node the fractional remainder.
//! Every tie is broken by the lowest node index.

mod alloc;
mod centrality;

pub use alloc::{allocate_random, allocate_ranked, allocate_uniform, high_risk_scores, ranked_amounts};
pub use centrality::{
    collective_influence, kshell_order, rank_ci, rank_hda, rank_kshell, write_rankings_csv, RankedNode,
};
