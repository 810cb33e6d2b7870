//! Parallel execution of estimate jobs.

use rayon::prelude::*;
use sofic_core::entropy::{EntropyError, EntropyReport, EstimateProblem, VariationalProblem, VariationalScan};

/// Environment variable read for the worker count when no flag is given.
pub const WORKERS_ENV: &str = "SOFIC_WORKERS";

/// Worker count: explicit value, else `SOFIC_WORKERS`, else the number of CPUs.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Runs every job of every problem on one pool and assembles one report per problem.
pub fn run_problems(problems: &[&EstimateProblem], workers: usize) -> Result<Vec<EntropyReport>, EntropyError> {
    let mut tasks = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        for job in p.jobs()? {
            tasks.push((i, job));
        }
    }
    let done: Vec<_> = pool(workers).install(|| {
        tasks
            .par_iter()
            .map(|(i, job)| problems[*i].run_job(job).map(|cells| (*i, *job, cells)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut per_problem: Vec<Vec<_>> = vec![Vec::new(); problems.len()];
    for (i, job, cells) in done {
        per_problem[i].push((job, cells));
    }
    problems
        .iter()
        .zip(per_problem)
        .map(|(p, results)| p.assemble(results))
        .collect()
}

pub fn run_estimate(problem: &EstimateProblem, workers: usize) -> Result<EntropyReport, EntropyError> {
    Ok(run_problems(&[problem], workers)?.remove(0))
}

pub fn run_scan(problem: &VariationalProblem, workers: usize) -> Result<(VariationalScan, Vec<EntropyReport>), EntropyError> {
    let reports = run_problems(&problem.problems(), workers)?;
    Ok((problem.assemble(&reports)?, reports))
}
