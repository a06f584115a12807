mod dewarp;
mod eval;
mod fit;
mod gradcheck;
mod synth;
mod train;

pub use dewarp::dewarp;
pub use eval::eval;
pub use fit::fit;
pub use gradcheck::gradcheck;
pub use synth::synth;
pub use train::train;

use crate::error::{CliError, CliResult};

/// Runs `f` on a worker pool of `jobs` threads, or every core when `0`.
fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::invalid(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}
