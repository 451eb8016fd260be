#![allow(dead_code)]

use std::path::PathBuf;

use kmdesign::formats;
use kmdesign::PermutationGroup;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn group(name: &str) -> PermutationGroup {
    formats::parse_group(&read_fixture(&format!("{name}.grp"))).unwrap()
}

/// `(group, t, k)` for the systems that are solved with complete column sets.
pub const SYSTEMS: [(&str, usize, usize); 7] = [
    ("g_d38", 3, 5),
    ("g_a6", 3, 7),
    ("g_s6", 3, 7),
    ("g_z3s3", 4, 5),
    ("g_120", 4, 8),
    ("g_192", 5, 7),
    ("g_272", 5, 8),
];
