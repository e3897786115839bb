//! Placement properties on random maps and candidates.

mod common;

use common::placement;

#[test]
fn chain_matches_enumeration() {
    placement::chain_matches_enumeration();
}

#[test]
fn binary_search_satisfies_insertion_conditions() {
    placement::binary_search_satisfies_insertion_conditions();
}

#[test]
fn exhaustive_mode_checks_the_prefix_property() {
    placement::exhaustive_mode_checks_the_prefix_property();
}
