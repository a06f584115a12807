use polardoc_core::losses::{check_term, LossTerm};

use crate::args::GradcheckArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};

pub fn gradcheck(a: &GradcheckArgs) -> CliResult<()> {
    let mut s = Settings::load(a.common.config.as_deref())?;
    let seeds = s.value("seeds", a.seeds, 100)?;
    let eps = s.value("eps", a.eps, 1e-6)?;
    let tol = s.value("tol", a.tol, 1e-4)?;
    let resolved = s.finish()?;
    resolved.log("gradcheck");

    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    for term in LossTerm::ALL {
        let mut term_max = 0.0f64;
        for seed in 0..seeds {
            term_max = term_max.max(check_term(term, seed, eps)?.max_rel_error);
        }
        let verdict = if term_max < tol { "ok" } else { "FAIL" };
        println!("{:<14}max_rel_error={term_max:.3e} {verdict}", term.name());
        if term_max >= tol {
            failing.push(term.name());
        }
        worst = worst.max(term_max);
    }
    println!("max_rel_error={worst:e} seeds={seeds} tol={tol:e}");
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "gradient check failed for: {}",
            failing.join(", ")
        )))
    }
}
