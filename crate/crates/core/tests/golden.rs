mod common;

use std::fs;

use common::{golden_event_log, golden_grid_csv, GOLDEN_EVENTS, GOLDEN_GRID};

/// Compares against the pinned file; `EAVG_BLESS=1` rewrites it instead.
fn check(name: &str, actual: &str) {
    let path = common::golden_path(name);
    if std::env::var_os("EAVG_BLESS").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert!(expected == actual, "{name} differs from the pinned copy");
}

#[test]
fn stability_grid_matches_pinned_csv() {
    check(GOLDEN_GRID, &golden_grid_csv());
}

#[test]
fn event_log_matches_pinned_copy() {
    check(GOLDEN_EVENTS, &golden_event_log());
}
