//! Symbolic analyses against brute-force enumeration on random configs.

mod common;

use common::oracle;

#[test]
fn overlap_census_agrees() {
    oracle::overlap_census_agrees();
}

#[test]
fn search_route_policies_agrees() {
    oracle::search_route_policies_agrees();
}

#[test]
fn compare_route_policies_agrees() {
    oracle::compare_route_policies_agrees();
}

#[test]
fn search_filters_agrees() {
    oracle::search_filters_agrees();
}
