//! Fixtures shared by the benchmarks in `benches/`.

use metafeat_core::protocol::{Family, MonomialTask, PolyTask, TreeTask};
use metafeat_core::streams::{gen_monomial_stream, gen_poly_stream, gen_tree_stream, StreamSpec, TreeStream};

pub fn tree_stream(k: usize, m: usize) -> TreeStream {
    let spec = StreamSpec { family: Family::Trees, n: 64, k, d: 5, s: 14, mf_depth: 2, m, samples: 64, seed: 1, ..StreamSpec::default() };
    gen_tree_stream(&spec, 0).expect("tree stream")
}

pub fn tree_tasks(k: usize, m: usize) -> Vec<TreeTask> {
    tree_stream(k, m).tasks
}

pub fn monomial_tasks(n: usize, m: usize) -> Vec<MonomialTask> {
    let spec = StreamSpec { family: Family::Monomials, n, k: 3, d: 6, m, samples: 16, seed: 2, ..StreamSpec::default() };
    gen_monomial_stream(&spec, 0).expect("monomial stream").tasks
}

pub fn poly_tasks(n: usize, m: usize) -> Vec<PolyTask> {
    let spec = StreamSpec { family: Family::Polynomials, n, k: 2, d: 4, t: 3, m, samples: 8, seed: 3, ..StreamSpec::default() };
    gen_poly_stream(&spec, 0).expect("polynomial stream").tasks
}
