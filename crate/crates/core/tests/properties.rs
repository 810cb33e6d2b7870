use proptest::prelude::*;
use sofic_core::group::{haar, Letter};
use sofic_core::microstate::{
    empirical_measure, is_member, quantize_target, transport_to_target, CompiledProblem, Engine, MembershipMode,
};
use sofic_core::packing::count::{count_microstates, CountLimits, DfsCounter};
use sofic_core::packing::{cov_exact, greedy_sep_lower, sep_exact, span_exact, HammingFamily};
use sofic_core::shift::{Alphabet, Pattern};
use sofic_core::{GroupElement, GroupModel, LocalGSpace, MapSpaceSpec, Microstate, ShiftSystem, Symbol};

const BUDGET: u64 = 10_000_000;

fn letters() -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0u16..2, any::<bool>()).prop_map(|(g, inv)| Letter::new(g, inv)), 0..8)
}

/// Random nearest-neighbour or distance-two forbidden patterns over `{0, …, k-1}`.
fn forbidden(k: u16) -> impl Strategy<Value = Vec<(i64, Vec<Symbol>)>> {
    prop::collection::vec((0i64..2, prop::collection::vec(0..k, 2..=3)), 0..3)
}

fn system(k: u16, pats: &[(i64, Vec<Symbol>)]) -> ShiftSystem {
    let pats = pats.iter().map(|(s, w)| Pattern::on_interval(*s, w.clone())).collect();
    ShiftSystem::new(GroupModel::integers(), Alphabet::numbered(k as usize), pats).unwrap()
}

fn brute_force(model: &LocalGSpace, spec: &MapSpaceSpec, sys: &ShiftSystem) -> u128 {
    let n = model.len();
    let k = sys.alphabet().len() as u64;
    let mut total = 0;
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        let labels: Vec<Symbol> = (0..n)
            .map(|_| {
                let s = (c % k) as Symbol;
                c /= k;
                s
            })
            .collect();
        if is_member(model, &Microstate::new(labels), spec, sys).unwrap() {
            total += 1;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn words_times_inverse_is_identity(w in letters()) {
        let g = GroupModel::FreeGroup { rank: 2 };
        let x = GroupElement::word(w);
        let inv = g.inverse(&x).unwrap();
        prop_assert_eq!(g.multiply(&x, &inv).unwrap(), g.identity());
        prop_assert_eq!(g.multiply(&inv, &x).unwrap(), g.identity());
    }

    #[test]
    fn free_group_is_associative(a in letters(), b in letters(), c in letters()) {
        let g = GroupModel::FreeGroup { rank: 2 };
        let (a, b, c) = (GroupElement::word(a), GroupElement::word(b), GroupElement::word(c));
        let left = g.multiply(&g.multiply(&a, &b).unwrap(), &c).unwrap();
        let right = g.multiply(&a, &g.multiply(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn reduction_is_idempotent(w in letters()) {
        let once = GroupElement::word(w);
        let GroupElement::Word(ref letters) = once else { unreachable!() };
        prop_assert_eq!(GroupElement::word(letters.clone()), once.clone());
    }

    #[test]
    fn lattice_balls_have_odd_side(dim in 1usize..=3, r in 0u32..4) {
        let g = GroupModel::IntegerLattice { dim };
        let b = g.ball(r as f64);
        prop_assert_eq!(b.len(), (2 * r as usize + 1).pow(dim as u32));
        prop_assert_eq!(haar(&b), b.len() as f64);
    }

    #[test]
    fn real_ball_is_open(k in 1i64..40) {
        let step = 0.25;
        let g = GroupModel::RealLine { step };
        // radius on the grid: the endpoints are excluded
        let b = g.ball(k as f64 * step);
        prop_assert_eq!(b.len() as i64, 2 * k - 1);
        prop_assert!((haar(&b) - (2 * k - 1) as f64 * step).abs() < 1e-12);
    }

    #[test]
    fn counting_engines_agree_with_brute_force(
        n in 3usize..=9,
        k in 2u16..=3,
        pats in forbidden(3),
        delta in prop::sample::select(vec![0.0, 0.1, 0.25]),
        soft in any::<bool>(),
        interval in any::<bool>(),
    ) {
        let pats: Vec<_> = pats.into_iter().map(|(s, w)| (s, w.into_iter().map(|x| x % k).collect())).collect();
        let sys = system(k, &pats);
        let model = if interval { LocalGSpace::interval(n) } else { LocalGSpace::cyclic_quotient(n) }.unwrap();
        let engine = if soft { Engine::Soft } else { Engine::Strict };
        let spec = MapSpaceSpec::new(GroupModel::integers().ball(1.0), delta, MembershipMode::Strict, engine);
        let expected = brute_force(&model, &spec, &sys);
        let res = count_microstates(&model, &spec, &sys, CountLimits::default()).unwrap();
        prop_assert_eq!(res.value.exact(), Some(expected));
        let problem = CompiledProblem::new(&model, &spec, &sys).unwrap();
        prop_assert_eq!(DfsCounter::new(&model, &problem, CountLimits::default()).count().unwrap(), expected);
    }

    #[test]
    fn counts_survive_relabeling(n in 3usize..=10, pats in forbidden(2)) {
        let sys = system(2, &pats);
        let swapped = sys.relabel(&[1, 0]).unwrap();
        let model = LocalGSpace::cyclic_quotient(n).unwrap();
        let spec = MapSpaceSpec::new(GroupModel::integers().ball(1.0), 0.0, MembershipMode::Strict, Engine::Strict);
        let a = count_microstates(&model, &spec, &sys, CountLimits::default()).unwrap();
        let b = count_microstates(&model, &spec, &swapped, CountLimits::default()).unwrap();
        prop_assert_eq!(a.value, b.value);
    }

    #[test]
    fn empirical_measure_is_a_distribution(labels in prop::collection::vec(0u16..3, 2..30), interval in any::<bool>()) {
        let n = labels.len();
        let model = if interval { LocalGSpace::interval(n) } else { LocalGSpace::cyclic_quotient(n) }.unwrap();
        let window: Vec<GroupElement> = (0..2).map(|i| GroupElement::Lattice(vec![i])).collect();
        let m = empirical_measure(&model, &Microstate::new(labels), &window, 3).unwrap();
        prop_assert!((m.masses.iter().sum::<f64>() + m.undefined - 1.0).abs() < 1e-9);
        prop_assert!(m.masses.iter().all(|&x| x >= 0.0));
        if !interval {
            prop_assert_eq!(m.undefined, 0.0);
        }
    }

    #[test]
    fn quantization_rounds_each_entry(raw in prop::collection::vec(1u32..1000, 1..6), n in 1usize..200) {
        let total: u32 = raw.iter().sum();
        let target: Vec<f64> = raw.iter().map(|&x| x as f64 / total as f64).collect();
        let s: f64 = target.iter().sum();
        prop_assume!((s - 1.0).abs() <= 1e-12);
        let q = quantize_target(&target, n).unwrap();
        prop_assert_eq!(q.iter().sum::<u64>(), n as u64);
        for (&c, &p) in q.iter().zip(&target) {
            prop_assert!((c as f64 - p * n as f64).abs() < 1.0);
        }
    }

    #[test]
    fn transport_moves_only_surplus(labels in prop::collection::vec(0u16..2, 1..40), cut in 0u32..=64) {
        let n = labels.len();
        let model = LocalGSpace::cyclic_quotient(n).unwrap();
        let target = [cut as f64 / 64.0, (64 - cut) as f64 / 64.0];
        let t = transport_to_target(&model, &Microstate::new(labels.clone()), &target).unwrap();
        let ones_before = labels.iter().filter(|&&s| s == 1).count() as i64;
        let changed = labels.iter().zip(t.microstate.labels()).filter(|(a, b)| a != b).count() as i64;
        prop_assert_eq!(changed, (ones_before - t.quantized[1] as i64).abs());
        prop_assert_eq!(changed as usize, t.relabeled);
    }

    #[test]
    fn hamming_chain_inequality(
        members in prop::collection::btree_set(prop::collection::vec(0u16..2, 6), 1..12),
        eps in prop::sample::select(vec![0.1, 0.2, 0.3, 0.45]),
    ) {
        // distances are multiples of 1/6, never equal to these ε or 2ε
        let fam = HammingFamily::new(members.into_iter().collect());
        let sep = sep_exact(&fam, eps, BUDGET).unwrap();
        let span = span_exact(&fam, eps, BUDGET).unwrap();
        let cov = cov_exact(&fam, eps, BUDGET).unwrap();
        let cov2 = cov_exact(&fam, 2.0 * eps, BUDGET).unwrap();
        prop_assert!(cov2 <= span && span <= sep && sep <= cov);
        prop_assert!(greedy_sep_lower(&fam, eps) <= sep);
    }
}
