//! Random instance ensembles.
//!
//! Both generators use the configuration (pairing) model with whole-sample
//! rejection: a shuffled stub list is cut into clauses or edges and the sample
//! is discarded if it is not simple or not connected.

use std::fmt;
use std::str::FromStr;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Formula, Semantics};
use crate::seed;

pub const REJECTION_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Nae3sat,
    #[serde(rename = "one3sat")]
    OneIn3sat,
}

impl Problem {
    pub fn semantics(self) -> Semantics {
        match self {
            Problem::Nae3sat => Semantics::Nae,
            Problem::OneIn3sat => Semantics::ExactlyOne,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Problem::Nae3sat => "nae3sat",
            Problem::OneIn3sat => "one3sat",
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nae3sat" | "nae" => Ok(Problem::Nae3sat),
            "one3sat" | "1in3sat" | "one3" => Ok(Problem::OneIn3sat),
            other => Err(Error::input(format!("unknown problem `{other}`"))),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Clause density as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alpha {
    pub num: u32,
    pub den: u32,
}

impl Alpha {
    pub const ONE: Alpha = Alpha { num: 1, den: 1 };
    pub const TWO: Alpha = Alpha { num: 2, den: 1 };
    pub const TWO_THIRDS: Alpha = Alpha { num: 2, den: 3 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 {
            return Err(Error::input("alpha must be a positive fraction"));
        }
        let g = gcd(num, den);
        Ok(Alpha {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("bad alpha `{s}`, expected an integer or a/b"));
        match s.split_once('/') {
            Some((n, d)) => Alpha::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => Alpha::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnsembleSpec {
    pub problem: Problem,
    pub n_vars: usize,
    pub alpha: Alpha,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn generate(&self) -> Result<Formula> {
        match self.problem {
            Problem::Nae3sat => gen_nae3sat(self),
            Problem::OneIn3sat => gen_1in3sat(self),
        }
    }
}

/// Connected biregular NAE3SAT: clause degree 3, variable degree 3α.
pub fn gen_nae3sat(spec: &EnsembleSpec) -> Result<Formula> {
    let n = spec.n_vars;
    let Alpha { num, den } = spec.alpha;
    let (num, den) = (num as usize, den as usize);
    if n == 0 || (n * num) % den != 0 || (3 * num) % den != 0 {
        return Err(Error::input(format!(
            "alpha = {} with n = {n} does not give integral clause count and variable degree",
            spec.alpha
        )));
    }
    let m = n * num / den;
    let degree = 3 * num / den;
    if n < 3 {
        return Err(Error::input("need at least 3 variables"));
    }

    let mut rng = seed::rng(spec.seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    debug_assert_eq!(stubs.len(), 3 * m);

    for _ in 0..REJECTION_BUDGET {
        stubs.shuffle(&mut rng);
        let clauses: Vec<[usize; 3]> = stubs.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        if clauses.iter().any(|c| c[0] == c[1] || c[1] == c[2] || c[0] == c[2]) {
            continue;
        }
        if !clauses_connected(n, &clauses) {
            continue;
        }
        return Formula::new(n, clauses, Semantics::Nae);
    }
    Err(Error::Generation(format!(
        "no connected biregular NAE3SAT sample after {REJECTION_BUDGET} attempts (n = {n}, alpha = {})",
        spec.alpha
    )))
}

/// 1-in-3SAT on a random connected simple cubic graph: a clause per vertex,
/// a variable per edge.
pub fn gen_1in3sat(spec: &EnsembleSpec) -> Result<Formula> {
    let n = spec.n_vars;
    if spec.alpha != Alpha::TWO_THIRDS {
        return Err(Error::input(format!("1-in-3SAT ensemble is fixed at alpha = 2/3, got {}", spec.alpha)));
    }
    if n == 0 || n % 3 != 0 {
        return Err(Error::input(format!("n = {n} must be a positive multiple of 3 for a cubic graph")));
    }
    let m = 2 * n / 3;
    if m < 4 {
        return Err(Error::input("a simple cubic graph needs at least 4 vertices (n >= 6)"));
    }

    let mut rng = seed::rng(spec.seed);
    let mut stubs: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat_n(v, 3)).collect();

    'attempt: for _ in 0..REJECTION_BUDGET {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let mut uf = UnionFind::<usize>::new(m);
        for &(u, v) in &edges {
            uf.union(u, v);
        }
        if (1..m).any(|v| !uf.equiv(0, v)) {
            continue;
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::with_capacity(3); m];
        for (e, &(u, v)) in edges.iter().enumerate() {
            incident[u].push(e);
            incident[v].push(e);
        }
        let clauses = incident.into_iter().map(|es| [es[0], es[1], es[2]]).collect();
        return Formula::new(n, clauses, Semantics::ExactlyOne);
    }
    Err(Error::Generation(format!(
        "no connected simple cubic graph after {REJECTION_BUDGET} attempts (n = {n})"
    )))
}

/// Connectivity of the factor graph (every variable reachable from variable 0).
pub fn clauses_connected(n_vars: usize, clauses: &[[usize; 3]]) -> bool {
    if n_vars == 0 {
        return true;
    }
    let mut uf = UnionFind::<usize>::new(n_vars);
    for &[a, b, c] in clauses {
        uf.union(a, b);
        uf.union(b, c);
    }
    (1..n_vars).all(|v| uf.equiv(0, v))
}

/// Occurrences of each variable across clauses.
pub fn variable_degrees(f: &Formula) -> Vec<usize> {
    let mut deg = vec![0; f.n_vars()];
    for c in f.clauses() {
        for &v in c {
            deg[v] += 1;
        }
    }
    deg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nae(n: usize, alpha: Alpha, seed: u64) -> Result<Formula> {
        gen_nae3sat(&EnsembleSpec { problem: Problem::Nae3sat, n_vars: n, alpha, seed })
    }

    #[test]
    fn nae_alpha_one_degrees() {
        let f = nae(6, Alpha::ONE, 3).unwrap();
        assert_eq!(f.n_clauses(), 6);
        assert!(variable_degrees(&f).iter().all(|&d| d == 3));
        assert!(clauses_connected(6, f.clauses()));
    }

    #[test]
    fn nae_alpha_two_degrees() {
        let f = nae(6, Alpha::TWO, 3).unwrap();
        assert_eq!(f.n_clauses(), 12);
        assert!(variable_degrees(&f).iter().all(|&d| d == 6));
    }

    #[test]
    fn nae_is_deterministic() {
        assert_eq!(nae(10, Alpha::TWO, 42).unwrap(), nae(10, Alpha::TWO, 42).unwrap());
        assert_ne!(nae(10, Alpha::TWO, 42).unwrap(), nae(10, Alpha::TWO, 43).unwrap());
    }

    #[test]
    fn nae_rejects_fractional_degree() {
        assert!(matches!(nae(7, Alpha::new(1, 2).unwrap(), 1), Err(Error::Input(_))));
    }

    #[test]
    fn one_in_three_cubic_structure() {
        let spec = EnsembleSpec { problem: Problem::OneIn3sat, n_vars: 18, alpha: Alpha::TWO_THIRDS, seed: 5 };
        let f = gen_1in3sat(&spec).unwrap();
        assert_eq!(f.n_clauses(), 12);
        assert!(variable_degrees(&f).iter().all(|&d| d == 2));
        assert!(clauses_connected(18, f.clauses()));
        // no two clauses share two variables (simple graph: one edge per vertex pair)
        for (i, a) in f.clauses().iter().enumerate() {
            for b in &f.clauses()[i + 1..] {
                assert!(a.iter().filter(|v| b.contains(v)).count() <= 1);
            }
        }
    }

    #[test]
    fn one_in_three_rejects_bad_n() {
        let spec = EnsembleSpec { problem: Problem::OneIn3sat, n_vars: 13, alpha: Alpha::TWO_THIRDS, seed: 5 };
        assert!(matches!(gen_1in3sat(&spec), Err(Error::Input(_))));
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("2/3".parse::<Alpha>().unwrap(), Alpha::TWO_THIRDS);
        assert_eq!("4/6".parse::<Alpha>().unwrap(), Alpha::TWO_THIRDS);
        assert_eq!("1".parse::<Alpha>().unwrap(), Alpha::ONE);
        assert!("x".parse::<Alpha>().is_err());
    }
}
