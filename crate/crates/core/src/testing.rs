use std::path::PathBuf;

use crate::corpus::Corpus;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn mini_corpus() -> Corpus {
    Corpus::load(fixtures_dir().join("mini-corpus")).expect("bundled mini-corpus loads")
}
