//! Brute-force counting and enumeration over the free variables.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::Formula;

pub const COUNT_CAP: usize = 30;
pub const ENUMERATE_CAP: usize = 24;

/// Number of satisfying completions of the pinned prefix.
pub fn exact_count(f: &Formula) -> Result<u64> {
    let k = f.n_free();
    if k > COUNT_CAP {
        return Err(Error::Resource(format!("exact count over 2^{k} configurations, cap is 2^{COUNT_CAP}")));
    }
    let prefix = f.prefix_mask();
    let shift = f.n_pinned();
    Ok((0..1usize << k)
        .into_par_iter()
        .with_min_len(1 << 12)
        .filter(|&c| f.clauses_satisfied(prefix | ((c as u64) << shift)))
        .count() as u64)
}

/// Free-variable configurations (bit j = free variable j) that satisfy `f`,
/// in ascending order.
pub fn solution_configs(f: &Formula) -> Result<Vec<u64>> {
    let k = f.n_free();
    if k > ENUMERATE_CAP {
        return Err(Error::Resource(format!("enumeration over 2^{k} configurations, cap is 2^{ENUMERATE_CAP}")));
    }
    let prefix = f.prefix_mask();
    let shift = f.n_pinned();
    Ok((0..1usize << k)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(|c| c as u64)
        .filter(|&c| f.clauses_satisfied(prefix | (c << shift)))
        .collect())
}

/// Full packed assignments satisfying `f`, in ascending order.
pub fn enumerate_solutions(f: &Formula) -> Result<Vec<u64>> {
    let prefix = f.prefix_mask();
    let shift = f.n_pinned();
    Ok(solution_configs(f)?.into_iter().map(|c| prefix | (c << shift)).collect())
}

/// Indicator over free configurations.
pub fn solution_mask(f: &Formula) -> Result<Vec<bool>> {
    let k = f.n_free();
    if k > ENUMERATE_CAP {
        return Err(Error::Resource(format!("solution mask over 2^{k} configurations, cap is 2^{ENUMERATE_CAP}")));
    }
    let prefix = f.prefix_mask();
    let shift = f.n_pinned();
    Ok((0..1usize << k)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(|c| f.clauses_satisfied(prefix | ((c as u64) << shift)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Semantics;

    #[test]
    fn single_clause_counts() {
        let nae = Formula::new(3, vec![[0, 1, 2]], Semantics::Nae).unwrap();
        assert_eq!(exact_count(&nae).unwrap(), 6);
        let one = Formula::new(3, vec![[0, 1, 2]], Semantics::ExactlyOne).unwrap();
        assert_eq!(exact_count(&one).unwrap(), 3);
        assert_eq!(enumerate_solutions(&one).unwrap(), vec![0b001, 0b010, 0b100]);
    }

    #[test]
    fn counts_respect_prefix() {
        let nae = Formula::new(3, vec![[0, 1, 2]], Semantics::Nae).unwrap();
        let g = nae.fix_next(true).unwrap();
        assert_eq!(exact_count(&g).unwrap(), 3);
        assert_eq!(enumerate_solutions(&g).unwrap(), vec![0b001, 0b011, 0b101]);
    }

    #[test]
    fn caps() {
        let f = Formula::new(31, vec![[0, 1, 2]], Semantics::Nae).unwrap();
        assert!(matches!(exact_count(&f), Err(Error::Resource(_))));
        let f = Formula::new(25, vec![[0, 1, 2]], Semantics::Nae).unwrap();
        assert!(matches!(enumerate_solutions(&f), Err(Error::Resource(_))));
    }
}
