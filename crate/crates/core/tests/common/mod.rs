#![allow(dead_code)]

use bergm::{Attributes, BipartiteNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Network with each dyad present independently with probability `p`.
pub fn random_net(rng: &mut impl Rng, n1: usize, n2: usize, p: f64) -> BipartiteNetwork {
    let mut net = BipartiteNetwork::new(n1, n2);
    for i in 1..=n1 {
        for k in n1 + 1..=n1 + n2 {
            if rng.random_bool(p) {
                net.toggle_edge(i, k).unwrap();
            }
        }
    }
    net
}

/// Categorical column `name` with `levels` on both modes, plus a numeric
/// column `x` on both modes.
pub fn random_attrs(rng: &mut impl Rng, net: &BipartiteNetwork, name: &str, levels: &[&str]) -> Attributes {
    let mut attrs = Attributes::empty_for(net);
    let v1: Vec<&str> = (0..net.n1()).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    let v2: Vec<&str> = (0..net.n2()).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    attrs.one.add_categorical(name, &v1).unwrap();
    attrs.two.add_categorical(name, &v2).unwrap();
    let x1: Vec<f64> = (0..net.n1()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = (0..net.n2()).map(|_| rng.random_range(-1.0..1.0)).collect();
    attrs.one.add_numeric("x", &x1).unwrap();
    attrs.two.add_numeric("x", &x2).unwrap();
    attrs
}

/// The five-edge network used throughout the documentation: three mode-1
/// nodes sharing one category, all tied to node 4, nodes 1 and 2 also to 5.
pub fn figure2() -> (BipartiteNetwork, Attributes) {
    let net = BipartiteNetwork::from_edge_list(3, 2, &[(1, 4), (2, 4), (3, 4), (1, 5), (2, 5)]).unwrap();
    let mut attrs = Attributes::empty_for(&net);
    attrs.one.add_categorical("c", &["x", "x", "x"]).unwrap();
    attrs.two.add_categorical("c", &["x", "x"]).unwrap();
    (net, attrs)
}
