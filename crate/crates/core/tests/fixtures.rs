//! The files under tests/data are generated; keep them in sync.
//! Set LEXDM_WRITE_FIXTURES=1 to rewrite them.

use std::path::PathBuf;

use lexdm::synthetic::{fixture_files, write_fixtures};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

#[test]
fn bundled_fixtures_match_generator() {
    if std::env::var_os("LEXDM_WRITE_FIXTURES").is_some() {
        write_fixtures(&data_dir()).unwrap();
    }
    for (name, expected) in fixture_files() {
        let actual = std::fs::read_to_string(data_dir().join(&name))
            .unwrap_or_else(|e| panic!("{name}: {e} (regenerate with LEXDM_WRITE_FIXTURES=1)"));
        assert!(actual == expected, "{name} is stale (regenerate with LEXDM_WRITE_FIXTURES=1)");
    }
}
