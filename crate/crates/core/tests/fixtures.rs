//! The checked-in fixtures are generated; set MEDIASERIES_BLESS=1 to rewrite them.

mod common;

use common::{fixture_files, fixtures_dir, read_tree, write_tree};

#[test]
fn fixtures_match_generator() {
    let files = fixture_files();
    let dir = fixtures_dir();
    if std::env::var_os("MEDIASERIES_BLESS").is_some() {
        write_tree(&dir, &files);
    }
    let on_disk = read_tree(&dir);
    for (rel, text) in &files {
        let got = on_disk.get(rel).unwrap_or_else(|| panic!("fixture {} missing; rerun with MEDIASERIES_BLESS=1", rel.display()));
        assert!(got == text.as_bytes(), "fixture {} is stale; rerun with MEDIASERIES_BLESS=1", rel.display());
    }
}
