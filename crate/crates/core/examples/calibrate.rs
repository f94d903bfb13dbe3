//! Error-vs-m sweep for rank-(1,1,1) 4×4×4 truths, plus the 3×3×3 RPP point.
//!
//! `cargo run --release -p tensense --example calibrate`

use tensense::harness::{run_experiment, summarize, ExperimentConfig};
use tensense::solvers::SolverKind;

fn main() -> tensense::Result<()> {
    let sweeps = [
        ExperimentConfig { m_values: (10..=50).step_by(5).collect(), ..Default::default() },
        ExperimentConfig { dims: vec![3, 3, 3], m_values: vec![18], solver: SolverKind::Rpp, ..Default::default() },
    ];
    for cfg in &sweeps {
        let start = std::time::Instant::now();
        let rows = run_experiment(cfg)?;
        println!("{} {:?} ranks {:?} ({:.1?})", cfg.solver, cfg.dims, cfg.ranks, start.elapsed());
        for s in summarize(&rows) {
            println!("  m={:>3} median {:.3e} mean {:.3e} converged {}/{}", s.m, s.median_rel_error, s.mean_rel_error, s.converged, s.trials);
        }
    }
    Ok(())
}
