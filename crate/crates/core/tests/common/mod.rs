#![allow(dead_code)]

use vqcount::counting::oracle::exact_count;
use vqcount::formula::Formula;
use vqcount::instances::{Alpha, EnsembleSpec, Problem};
use vqcount::seed;

/// First `count` satisfiable instances of the stream rooted at `root`, with
/// their exact counts and the number of unsatisfiable candidates skipped.
pub fn satisfiable(problem: Problem, alpha: Alpha, n: usize, count: usize, root: u64) -> (Vec<(Formula, u64)>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    let mut i = 0u64;
    while out.len() < count {
        assert!(i < 50 * count as u64, "too few satisfiable instances at n = {n}");
        let f = EnsembleSpec { problem, n_vars: n, alpha, seed: seed::derive(root, &[seed::INSTANCE, n as u64, i]) }
            .generate()
            .unwrap();
        let c = exact_count(&f).unwrap();
        if c > 0 {
            out.push((f, c));
        } else {
            skipped += 1;
        }
        i += 1;
    }
    (out, skipped)
}

pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {id:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
