//! Ground-truth oracles and reference policies.

pub mod classify;
pub mod distances;
pub mod oracle;
pub mod scripted;
pub mod sequences;

pub use classify::{classify, Class, Classification};
pub use distances::{bfs_from, DistanceTable, INF};
pub use oracle::{max_return, max_return_corner, max_return_dish, max_return_keys};
pub use scripted::{Goal, Scripted, StandStill, Uniform};
pub use sequences::{enumerate_collection_sequences, sequence_count, CollectionSequence, Item};

/// All-pairs shortest paths over the free cells of a wall layout.
pub fn all_pairs_distances(walls: &crate::env::Walls) -> DistanceTable {
    DistanceTable::floyd_warshall(walls)
}
