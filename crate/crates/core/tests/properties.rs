mod common;

use bergm::estimate::{contrast, mple};
use bergm::oracle::ExactModel;
use bergm::terms::{change_stats, eval_stats};
use bergm::{formula, Attributes, BipartiteNetwork, Execution, Exponent, Mode, ModelSpec, ModelTerm, TermKind};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use common::{random_attrs, random_net, rng};

const LEVELS: &[&str] = &["a", "b", "c"];

/// A random network, shape and density drawn from the seed.
fn net_from(seed: u64, max: usize) -> (BipartiteNetwork, Attributes) {
    let mut r = rng(seed);
    let n1 = r.random_range(1..=max);
    let n2 = r.random_range(1..=max);
    let p = r.random_range(0.05..0.9);
    let net = random_net(&mut r, n1, n2, p);
    let attrs = random_attrs(&mut r, &net, "g", LEVELS);
    (net, attrs)
}

fn exponent(alpha: bool, e: f64) -> Exponent {
    if alpha {
        Exponent::Alpha(e)
    } else {
        Exponent::Beta(e)
    }
}

fn mode(one: bool) -> Mode {
    if one {
        Mode::One
    } else {
        Mode::Two
    }
}

/// Every term kind, with random arguments.
fn any_term() -> impl Strategy<Value = ModelTerm> {
    prop_oneof![
        Just(ModelTerm::edges()),
        any::<bool>().prop_map(|one| ModelTerm::with_attr(if one { TermKind::B1Cov } else { TermKind::B2Cov }, "x")),
        any::<bool>().prop_map(|one| ModelTerm::with_attr(if one { TermKind::B1Factor } else { TermKind::B2Factor }, "g")),
        (any::<bool>(), any::<bool>(), 0.0..=1.0f64, any::<bool>()).prop_map(|(one, alpha, e, diff)| {
            ModelTerm::nodematch(mode(one), "g", exponent(alpha, e)).diff(diff)
        }),
        (2usize..5).prop_map(|k| ModelTerm::with_order(TermKind::B2Star, k)),
        (0usize..4).prop_map(|d| ModelTerm::with_order(TermKind::B2Degree, d)),
        Just(ModelTerm::new(TermKind::B2Sociality)),
    ]
}

fn any_spec() -> impl Strategy<Value = ModelSpec> {
    prop::collection::vec(any_term(), 1..5).prop_map(ModelSpec::new)
}

/// Drops terms whose statistic names collide.
fn dedup(spec: ModelSpec, net: &BipartiteNetwork, attrs: &Attributes) -> ModelSpec {
    let mut kept: Vec<ModelTerm> = Vec::new();
    for t in spec.terms {
        let mut trial = kept.clone();
        trial.push(t);
        if eval_stats(&ModelSpec::new(trial.clone()), net, attrs).is_ok() {
            kept = trial;
        }
    }
    ModelSpec::new(kept)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn toggle_twice_is_identity(seed in any::<u64>(), d in any::<prop::sample::Index>()) {
        let (net, _) = net_from(seed, 8);
        let (i, k) = net.dyad_at(d.index(net.dyad_count()));
        let mut t = net.clone();
        let was = t.contains(i, k);
        prop_assert_eq!(t.toggle_edge(i, k).unwrap(), !was);
        t.check_consistency().unwrap();
        t.toggle_edge(i, k).unwrap();
        t.check_consistency().unwrap();
        prop_assert_eq!(t.sorted_edges(), net.sorted_edges());
        prop_assert_eq!(t.edge_count(), net.edge_count());
    }

    #[test]
    fn projection_is_the_off_diagonal_of_y_yt(seed in any::<u64>()) {
        let (net, _) = net_from(seed, 9);
        let (n1, n2) = (net.n1(), net.n2());
        let y = DMatrix::from_fn(n1, n2, |r, c| if net.contains(r + 1, n1 + c + 1) { 1.0 } else { 0.0 });
        for (m, prod, first) in [(Mode::One, &y * y.transpose(), 1), (Mode::Two, y.transpose() * &y, n1 + 1)] {
            let p = net.project(m);
            let size = prod.nrows();
            let mut nonzero = 0;
            for a in 0..size {
                for b in a + 1..size {
                    let w = prod[(a, b)] as u32;
                    prop_assert_eq!(p.weight(first + a, first + b), w);
                    nonzero += (w > 0) as usize;
                }
            }
            prop_assert_eq!(p.len(), nonzero);
        }
    }

    #[test]
    fn two_paths_excluding_a_hub(seed in any::<u64>(), pick in any::<[prop::sample::Index; 3]>()) {
        let (net, _) = net_from(seed, 7);
        prop_assume!(net.n1() >= 2);
        let a = 1 + pick[0].index(net.n1());
        let b = 1 + (a + pick[1].index(net.n1() - 1)) % net.n1();
        let hub = net.n1() + 1 + pick[2].index(net.n2());
        let all = net.two_paths_between(a, b, None).unwrap();
        let through = (net.contains(a, hub) && net.contains(b, hub)) as usize;
        prop_assert_eq!(net.two_paths_between(a, b, Some(hub)).unwrap(), all - through);
        let brute = net.nodes(Mode::Two).filter(|&k| net.contains(a, k) && net.contains(b, k)).count();
        prop_assert_eq!(all, brute);
    }

    #[test]
    fn change_statistic_is_the_full_difference(seed in any::<u64>(), spec in any_spec(), d in any::<prop::sample::Index>()) {
        let (net, attrs) = net_from(seed, 7);
        let spec = dedup(spec, &net, &attrs);
        prop_assume!(!spec.terms.is_empty());
        let (i, k) = net.dyad_at(d.index(net.dyad_count()));
        let mut plus = net.clone();
        let mut minus = net.clone();
        if net.contains(i, k) {
            minus.toggle_edge(i, k).unwrap();
        } else {
            plus.toggle_edge(i, k).unwrap();
        }
        let sp = eval_stats(&spec, &plus, &attrs).unwrap();
        let sm = eval_stats(&spec, &minus, &attrs).unwrap();
        let delta = change_stats(&spec, &net, &attrs, i, k).unwrap();
        for j in 0..delta.len() {
            prop_assert!((delta[j] - (sp[j] - sm[j])).abs() <= 1e-10, "{} {:?} vs {}", j, delta, sp[j] - sm[j]);
        }
    }

    #[test]
    fn diff_levels_sum_to_the_pooled_statistic(seed in any::<u64>(), one in any::<bool>(), alpha in any::<bool>(), e in 0.0..=1.0f64) {
        let (net, attrs) = net_from(seed, 8);
        let t = ModelTerm::nodematch(mode(one), "g", exponent(alpha, e));
        let pooled = eval_stats(&ModelSpec::new(vec![t.clone()]), &net, &attrs).unwrap()[0];
        let split = eval_stats(&ModelSpec::new(vec![t.clone().diff(true)]), &net, &attrs).unwrap();
        prop_assert!((split.iter().sum::<f64>() - pooled).abs() <= 1e-9);
        // Keeping every level present changes nothing.
        let (levels, _) = attrs.get(mode(one)).categorical("g").unwrap();
        let kept = eval_stats(&ModelSpec::new(vec![t.keep(levels)]), &net, &attrs).unwrap()[0];
        prop_assert_eq!(kept, pooled);
    }

    #[test]
    fn alpha_zero_counts_connected_matching_pairs(seed in any::<u64>(), one in any::<bool>()) {
        let (net, attrs) = net_from(seed, 8);
        let m = mode(one);
        let v = eval_stats(&ModelSpec::new(vec![ModelTerm::nodematch(m, "g", Exponent::Alpha(0.0))]), &net, &attrs).unwrap()[0];
        let first = net.first_node(m);
        let mut count = 0;
        for a in net.nodes(m) {
            for b in a + 1..first + net.mode_count(m) {
                let same = attrs.get(m).code_of("g", a).unwrap() == attrs.get(m).code_of("g", b).unwrap();
                if same && net.shared_partners(a, b) > 0 {
                    count += 1;
                }
            }
        }
        prop_assert_eq!(v, count as f64);
    }

    #[test]
    fn formula_round_trip(spec in any_spec()) {
        let text = formula::format(&spec);
        let back = formula::parse(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(formula::format(&back), text.clone());
        // Whitespace does not matter.
        let squeezed: String = text.chars().filter(|c| *c != ' ').collect();
        prop_assert_eq!(formula::parse(&squeezed).unwrap(), spec);
    }
}

fn small_model(seed: u64) -> (ExactModel, BipartiteNetwork, Vec<f64>) {
    let mut r = rng(seed);
    let (n1, n2) = [(2, 2), (3, 2), (2, 4), (3, 3)][r.random_range(0..4)];
    let net = random_net(&mut r, n1, n2, 0.5);
    let attrs = random_attrs(&mut r, &net, "g", &["a", "b"]);
    let spec = ModelSpec::new(vec![
        ModelTerm::edges(),
        ModelTerm::nodematch(Mode::One, "g", Exponent::Alpha(r.random_range(0.0..1.0))),
        ModelTerm::nodematch(Mode::Two, "g", Exponent::Beta(r.random_range(0.0..1.0))),
    ]);
    let em = ExactModel::new(&spec, &attrs, n1, n2, Execution::Sequential).unwrap();
    let theta: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
    (em, net, theta)
}

#[test]
fn oracle_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (em, _, theta) = small_model(seed);
        let (mean, _) = em.moments(&theta).unwrap();
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (em.log_kappa(&up).unwrap() - em.log_kappa(&down).unwrap()) / (2.0 * h);
            let rel = (fd - mean[j]).abs() / mean[j].abs().max(1e-8);
            assert!(rel <= 1e-4, "seed {seed} coord {j}: fd {fd} vs mean {}", mean[j]);
        }
    }
}

#[test]
fn oracle_probabilities_sum_to_one() {
    for seed in 0..20 {
        let (em, net, theta) = small_model(seed);
        let d = em.dyad_distribution(&theta, Execution::Parallel).unwrap();
        assert_eq!(d.probs.len(), 1 << net.dyad_count());
        let total: f64 = d.probs.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12, "seed {seed}: {total}");
        let seq = em.dyad_distribution(&theta, Execution::Sequential).unwrap();
        assert_eq!(seq.probs, d.probs);
    }
}

/// Plain Newton–Raphson logistic regression on an explicit design matrix.
fn logistic_reference(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let p = x.ncols();
    let mut beta = nalgebra::DVector::zeros(p);
    for _ in 0..100 {
        let mut grad = nalgebra::DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for (r, yr) in y.iter().enumerate() {
            let row = x.row(r).transpose();
            let mu = 1.0 / (1.0 + (-row.dot(&beta)).exp());
            grad += &row * (yr - mu);
            hess += &row * row.transpose() * (mu * (1.0 - mu));
        }
        let step = hess.lu().solve(&grad).unwrap();
        beta += &step;
        if step.norm() < 1e-14 {
            break;
        }
    }
    beta.as_slice().to_vec()
}

#[test]
fn mple_matches_an_independent_logistic_fit() {
    let mut checked = 0;
    for seed in 0..60 {
        let mut r = rng(seed);
        let net = random_net(&mut r, 6, 4, 0.45);
        let attrs = random_attrs(&mut r, &net, "g", LEVELS);
        let (levels, codes) = attrs.one.categorical("g").unwrap();
        let spec = ModelSpec::new(vec![ModelTerm::edges(), ModelTerm::with_attr(TermKind::B1Factor, "g")]);
        // Design: intercept plus an indicator per non-baseline level.
        let p = levels.len();
        let mut x = DMatrix::zeros(net.dyad_count(), p);
        let mut y = Vec::new();
        for d in 0..net.dyad_count() {
            let (i, k) = net.dyad_at(d);
            x[(d, 0)] = 1.0;
            let c = codes[i - 1] as usize;
            if c > 0 {
                x[(d, c)] = 1.0;
            }
            y.push(net.contains(i, k) as u8 as f64);
        }
        // Skip separated designs: a level with all or none of its dyads tied.
        let separated = (0..p).any(|c| {
            let rows: Vec<usize> = (0..y.len()).filter(|&d| codes[net.dyad_at(d).0 - 1] as usize == c).collect();
            rows.is_empty() || rows.iter().all(|&d| y[d] == 1.0) || rows.iter().all(|&d| y[d] == 0.0)
        });
        if separated {
            continue;
        }
        let reference = logistic_reference(&x, &y);
        let fit = mple(&spec, &net, &attrs, Execution::Sequential).unwrap();
        for (a, b) in fit.theta.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-6, "seed {seed}: {:?} vs {reference:?}", fit.theta);
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} unseparated draws");
}

#[test]
fn contrasts() {
    let mut r = rng(5);
    let net = random_net(&mut r, 8, 6, 0.4);
    let mut attrs = Attributes::empty_for(&net);
    attrs.one.add_categorical("sex", &["F", "M", "F", "M", "F", "M", "F", "M"]).unwrap();
    let spec = ModelSpec::new(vec![
        ModelTerm::edges(),
        ModelTerm::nodematch(Mode::One, "sex", Exponent::Beta(0.5)).diff(true),
    ]);
    let fit = mple(&spec, &net, &attrs, Execution::Sequential).unwrap();
    let se = fit.std_errors();
    // A unit vector picks out one coefficient and its standard error.
    for j in 0..fit.dim() {
        let mut w = vec![0.0; fit.dim()];
        w[j] = 1.0;
        let (est, s) = contrast(&fit, &w).unwrap();
        assert_eq!(est, fit.theta[j]);
        assert!((s - se[j]).abs() < 1e-12);
    }
    // Female minus male homophily.
    let f = fit.index_of("b1nodematch.sex.F").unwrap();
    let m = fit.index_of("b1nodematch.sex.M").unwrap();
    let mut w = vec![0.0; fit.dim()];
    w[f] = 1.0;
    w[m] = -1.0;
    let (est, s) = fit.contrast(&w).unwrap();
    assert!((est - (fit.theta[f] - fit.theta[m])).abs() < 1e-12);
    let c = &fit.covariance;
    let var = c[(f, f)] + c[(m, m)] - 2.0 * c[(f, m)];
    assert!((s - var.sqrt()).abs() < 1e-12);
    // The zero contrast is exactly zero.
    assert_eq!(fit.contrast(&vec![0.0; fit.dim()]).unwrap(), (0.0, 0.0));
    assert!(fit.contrast(&[1.0]).is_err());
}
