//! Experiment orchestration: config parsing, validation, deterministic
//! execution and report emission. Placeholder while the pipeline modules are
//! built; the CLI entry points are wired first so the binary always builds.

use std::path::Path;

use rayon::prelude::*;

/// Fan `jobs` independent, pure computations across the worker pool and
/// return their results indexed by job id. Collection preserves index order,
/// so reductions downstream are independent of the worker count — the
/// reproducibility contract every experiment relies on.
pub fn par_map<T, F>(jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..jobs).into_par_iter().map(f).collect()
}

pub fn cli_run(
    _config: &Path,
    _out: &Path,
    _workers: Option<usize>,
    _seed: Option<u64>,
) -> u8 {
    eprintln!("runner not yet wired");
    2
}

pub fn cli_validate(_config: &Path) -> u8 {
    eprintln!("runner not yet wired");
    2
}

pub fn cli_oracle_check(_out: &Path) -> u8 {
    eprintln!("runner not yet wired");
    2
}
