//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ebsp_core::gen::{random_graph, random_tree_of_size};
use ebsp_core::representations::{rep_by_name, Rep};
use ebsp_core::trees::Tree;
use ebsp_core::Structure;

pub const SEED: u64 = 17;

pub fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

pub fn graphs(count: usize, size: u32) -> Vec<Structure> {
    let mut rng = rng(size as u64);
    (0..count).map(|_| random_graph(&mut rng, size, 0.5)).collect()
}

pub fn rep(name: &str) -> Rep {
    rep_by_name(name, None).expect("known representation")
}

pub fn trees(rep: &Rep, count: usize, nodes: usize) -> Vec<Tree> {
    let mut rng = rng(nodes as u64);
    (0..count).map(|_| random_tree_of_size(&mut rng, rep.alphabet(), nodes)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(graphs(3, 5), graphs(3, 5));
        let words = rep("words");
        let t = trees(&words, 2, 20);
        assert_eq!(t, trees(&words, 2, 20));
        assert!(t.iter().all(|t| t.size() == 20));
    }
}
