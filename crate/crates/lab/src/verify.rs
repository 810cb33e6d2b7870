//! The invariant suite behind `sofic-lab verify`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sofic_core::entropy::{equidistribution_check, EstimateMode, EstimateProblem, Schedule};
use sofic_core::group::{check_ball_product, GroupModel, WeightedElementSet};
use sofic_core::microstate::{is_member, transport_to_target, Engine, MapSpaceSpec, MembershipMode, Microstate};
use sofic_core::model::{check_local_mp, sofic_quality};
use sofic_core::packing::{count_microstates, cov_exact, sep_exact, span_exact, transfer_matrix_count, CountLimits, DistanceMatrix};
use sofic_core::{LocalGSpace, ShiftSystem, Symbol};

use crate::config::Experiment;
use crate::report::to_json;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String), String>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check; the order of the returned rows is fixed.
pub fn run_suite(exp: &Experiment) -> Vec<CheckOutcome> {
    let seed = exp.seed;
    let trials = exp.verify.samples.max(1);
    let n = exp.verify.size.max(2);
    vec![
        outcome("ball-product", ball_product(seed, trials)),
        outcome("chain-inequality", chain_inequality(seed, trials)),
        outcome("map-in-map-avg", map_in_map_avg(n.min(16))),
        outcome("transport-exactness", transport(seed, trials, n)),
        outcome("local-measure-preservation", local_mp(exp, n)),
        outcome("relabeling-invariance", relabeling(exp, n)),
        outcome("equidistribution", equidistribution(exp, n)),
        outcome("trace-oracle", trace_oracle(n.min(40))),
    ]
}

fn ball_product(seed: u64, trials: usize) -> Result<(bool, String), String> {
    let z = GroupModel::integers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0);
    let mut checked = 0;
    let mut violations = 0;
    for _ in 0..trials {
        let r0 = rng.gen_range(1..=3) as f64;
        let r1 = r0 + rng.gen_range(1..=2) as f64;
        let r2 = r1 + rng.gen_range(1..=4) as f64;
        let delta = rng.gen_range(0.01..0.3);
        let thin = |r: f64, rng: &mut ChaCha8Rng| {
            let keep: Vec<_> = z.ball(r).iter().filter(|_| rng.gen_bool(0.9)).cloned().collect();
            WeightedElementSet::from_elements(&z, keep)
        };
        let w0 = thin(r0, &mut rng).map_err(|e| e.to_string())?;
        let w2 = thin(r2, &mut rng).map_err(|e| e.to_string())?;
        if w0.is_empty() || w2.is_empty() {
            continue;
        }
        let v = check_ball_product(&z, r0, r1, r2, delta, &w0, &w2).map_err(|e| e.to_string())?;
        if v.hypotheses_hold {
            checked += 1;
            violations += usize::from(!v.conclusion_holds);
        }
    }
    Ok((violations == 0, format!("{checked} instances met the hypotheses, {violations} violations")))
}

fn chain_inequality(seed: u64, trials: usize) -> Result<(bool, String), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4);
    let mut failures = 0;
    for _ in 0..trials {
        let k = rng.gen_range(1..=10);
        let pts: Vec<(f64, f64)> = (0..k).map(|_| (rng.gen(), rng.gen())).collect();
        let rows = pts
            .iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        let d = DistanceMatrix::new(rows);
        let eps = rng.gen_range(0.05..0.8);
        let budget = 1_000_000;
        let cov2 = cov_exact(&d, 2.0 * eps, budget).map_err(|e| e.to_string())?;
        let span = span_exact(&d, eps, budget).map_err(|e| e.to_string())?;
        let sep = sep_exact(&d, eps, budget).map_err(|e| e.to_string())?;
        let cov = cov_exact(&d, eps, budget).map_err(|e| e.to_string())?;
        if !(cov2 <= span && span <= sep && sep <= cov) {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{trials} random planar families, {failures} violations")))
}

fn labelings(n: usize) -> impl Iterator<Item = Vec<Symbol>> {
    (0..1u64 << n).map(move |bits| (0..n).map(|i| (bits >> i & 1) as Symbol).collect())
}

fn map_in_map_avg(n: usize) -> Result<(bool, String), String> {
    let sys = ShiftSystem::golden_mean();
    let m = LocalGSpace::interval(n).map_err(|e| e.to_string())?;
    let u = GroupModel::integers().ball(1.0);
    let strict = MapSpaceSpec::new(u.clone(), 0.2, MembershipMode::Strict, Engine::Soft);
    let avg = MapSpaceSpec::new(u, 0.2, MembershipMode::Averaged, Engine::Soft);
    let (mut in_strict, mut escaped) = (0, 0);
    for labels in labelings(n) {
        let omega = Microstate::new(labels);
        if is_member(&m, &omega, &strict, &sys).map_err(|e| e.to_string())? {
            in_strict += 1;
            if !is_member(&m, &omega, &avg, &sys).map_err(|e| e.to_string())? {
                escaped += 1;
            }
        }
    }
    Ok((escaped == 0, format!("interval n={n}: {in_strict} strict members, {escaped} outside the averaged space")))
}

fn transport(seed: u64, trials: usize, n: usize) -> Result<(bool, String), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a);
    let m = LocalGSpace::cyclic_quotient(n).map_err(|e| e.to_string())?;
    let mut failures = 0;
    for _ in 0..trials {
        let k = rng.gen_range(2..=4);
        let labels: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..k) as Symbol).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let target: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let t = match transport_to_target(&m, &Microstate::new(labels.clone()), &target) {
            Ok(t) => t,
            // renormalized targets can miss 1 by rounding; skip those draws
            Err(_) => continue,
        };
        let mut counts = vec![0u64; k];
        for &s in t.microstate.labels() {
            counts[s as usize] += 1;
        }
        let mut before = vec![0u64; k];
        for &s in &labels {
            before[s as usize] += 1;
        }
        let moved: u64 = before.iter().zip(&t.quantized).map(|(&b, &q)| b.saturating_sub(q)).sum();
        if counts != t.quantized || t.relabeled as u64 != moved {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{trials} random (labeling, target) pairs at n={n}, {failures} failures")))
}

/// The configured model at size `n`, corrupted on request: the first generator then
/// sends points 0 and 1 to the same place.
pub fn verify_model(exp: &Experiment, n: usize) -> Result<LocalGSpace, String> {
    let m = exp.family.build(n).map_err(|e| e.to_string())?;
    if !exp.verify.corrupt_action_table {
        return Ok(m);
    }
    let group = *m.group();
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for i in 0..group.generator_count() {
        let g = group.generator(i);
        forward.push(m.action_table(&g).map_err(|e| e.to_string())?);
        let inv = group.inverse(&g).map_err(|e| e.to_string())?;
        backward.push(m.action_table(&inv).map_err(|e| e.to_string())?);
    }
    if m.len() >= 2 {
        forward[0][0] = forward[0][1];
    }
    LocalGSpace::from_raw_tables(group, m.weight(), forward, backward, "corrupted").map_err(|e| e.to_string())
}

fn local_mp(exp: &Experiment, n: usize) -> Result<(bool, String), String> {
    let m = verify_model(exp, n)?;
    let group = *m.group();
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed ^ 0x1d);
    let mut failures = 0;
    let mut checked = 0;
    for i in 0..group.generator_count() {
        let g = group.generator(i);
        let table = m.action_table(&g).map_err(|e| e.to_string())?;
        let domain: Vec<usize> = (0..m.len()).filter(|&p| table[p].is_some()).collect();
        let mut subsets = vec![domain.clone()];
        for _ in 0..8 {
            let mut s = domain.clone();
            s.shuffle(&mut rng);
            s.truncate(rng.gen_range(0..=domain.len()));
            subsets.push(s);
        }
        for k in subsets {
            checked += 1;
            if !check_local_mp(&m, &g, &k).map_err(|e| e.to_string())? {
                failures += 1;
            }
        }
    }
    Ok((failures == 0, format!("{} ({} points): {checked} subsets, {failures} volume mismatches", m.label(), m.len())))
}

fn relabeling(exp: &Experiment, n: usize) -> Result<(bool, String), String> {
    let k = exp.system.alphabet().len();
    let perm: Vec<Symbol> = (0..k as Symbol).rev().collect();
    let schedule = Schedule {
        sizes: vec![n / 2, n].into_iter().filter(|&s| s > 0).collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
        radii: vec![1.0],
        deltas: vec![0.1, 0.0],
        epsilons: vec![0.5 / n as f64],
        etas: vec![],
        window: None,
        engines: vec![Engine::Strict, Engine::Soft],
    };
    let limits = CountLimits {
        max_nodes: 50_000_000,
        ..CountLimits::default()
    };
    let run = |sys: ShiftSystem| -> Result<String, String> {
        let p = EstimateProblem::new(sys, EstimateMode::Top, exp.family.clone(), schedule.clone())
            .map_err(|e| e.to_string())?
            .with_limits(limits);
        Ok(to_json(&p.run().map_err(|e| e.to_string())?))
    };
    let a = run(exp.system.clone())?;
    let b = run(exp.system.relabel(&perm).map_err(|e| e.to_string())?)?;
    Ok((a == b, format!("alphabet reversed, reports {}", if a == b { "identical" } else { "differ" })))
}

fn equidistribution(exp: &Experiment, n: usize) -> Result<(bool, String), String> {
    let m = verify_model(exp, n)?;
    let delta = exp.spec.map_or(0.05, |s| s.1);
    let u = m.group().ball(1.0);
    let spec = MapSpaceSpec::new(u.clone(), delta, MembershipMode::Strict, Engine::Soft);
    let window = vec![m.group().identity()];
    let r = equidistribution_check(&m, &spec, &exp.system, &window, exp.verify.samples, exp.seed, CountLimits::default())
        .map_err(|e| e.to_string())?;
    let quality = sofic_quality(&m, &u).map_err(|e| e.to_string())?;
    let bound = delta + (1.0 - quality) + 0.02;
    Ok((
        r.max_tv <= bound,
        format!("{} samples, max TV {:.4} against bound {bound:.4}", r.tvs.len(), r.max_tv),
    ))
}

fn trace_oracle(n: usize) -> Result<(bool, String), String> {
    let sys = ShiftSystem::golden_mean();
    let m = LocalGSpace::cyclic_quotient(n).map_err(|e| e.to_string())?;
    let spec = MapSpaceSpec::new(GroupModel::integers().ball(1.0), 0.0, MembershipMode::Strict, Engine::Strict);
    let count = count_microstates(&m, &spec, &sys, CountLimits::default()).map_err(|e| e.to_string())?;
    let trace = transfer_matrix_count(&sys, n).map_err(|e| e.to_string())?;
    let c = count.value.exact().unwrap_or(0);
    Ok((c == trace, format!("golden mean n={n}: count {c} ({}), trace {trace}", count.engine)))
}
