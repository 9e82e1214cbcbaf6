#![allow(dead_code)]

use mrf_core::model::random_bounded_graph;
use mrf_core::{Model, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise model on a random graph with arbitrary edge tables and fields.
pub fn random_pairwise(n: usize, d: usize, alphabet: usize, scale: f64, seed: u64) -> Model {
    let graph = random_bounded_graph(n, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(7));
    let mut potentials: Vec<Potential> = graph
        .edges()
        .into_iter()
        .map(|(u, v)| {
            let table = (0..alphabet * alphabet).map(|_| rng.gen_range(-scale..scale)).collect();
            Potential::new(vec![u, v], table)
        })
        .collect();
    for v in 0..n {
        let table = (0..alphabet).map(|_| rng.gen_range(-scale..scale) / 2.0).collect();
        potentials.push(Potential::new(vec![v], table));
    }
    Model::with_graph(graph, alphabet, potentials).unwrap()
}

/// Parity potential on the triangle: weight `lambda` on even-parity states.
pub fn xor_triangle(lambda: f64) -> Model {
    let table = (0..8u32).map(|i| if i.count_ones() % 2 == 0 { lambda } else { 0.0 }).collect();
    Model::new(3, 2, vec![Potential::new(vec![0, 1, 2], table)]).unwrap()
}

/// All states of `vars`, most significant first.
pub fn assignments(len: usize, alphabet: usize) -> Vec<Vec<u8>> {
    (0..alphabet.pow(len as u32)).map(|i| mrf_core::model::index_assignment(i, len, alphabet)).collect()
}
