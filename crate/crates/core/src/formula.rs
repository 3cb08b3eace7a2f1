//! Positive NAE3SAT / 1-in-3SAT formulas with a self-reduction prefix.
//!
//! Variables are fixed in ascending index order, so the partial assignment is
//! always a prefix `x_0 .. x_{k-1}`. Full assignments are packed into a `u64`
//! with bit `i` holding `x_i`, which caps formulas at 64 variables; the
//! enumerating oracles impose much tighter caps anyway.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 64;

/// Clause semantics shared by every clause of a formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Not-all-equal: the three bits are not all identical.
    Nae,
    /// Exactly one of the three bits is 1.
    #[serde(rename = "one3")]
    ExactlyOne,
}

impl Semantics {
    pub fn tag(self) -> &'static str {
        match self {
            Semantics::Nae => "nae",
            Semantics::ExactlyOne => "one3",
        }
    }

    #[inline]
    pub fn clause_satisfied(self, a: bool, b: bool, c: bool) -> bool {
        match self {
            Semantics::Nae => !(a == b && b == c),
            Semantics::ExactlyOne => (a as u8 + b as u8 + c as u8) == 1,
        }
    }
}

impl FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nae" => Ok(Semantics::Nae),
            "one3" => Ok(Semantics::ExactlyOne),
            other => Err(Error::input(format!("unknown semantics `{other}`"))),
        }
    }
}

/// A full assignment of `n_vars` bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_mask(mask: u64, n_vars: usize) -> Self {
        Self {
            bits: (0..n_vars).map(|i| (mask >> i) & 1 == 1).collect(),
        }
    }

    pub fn to_mask(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| m | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// An immutable formula over positive literals plus the pinned prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    n_vars: usize,
    clauses: Vec<[usize; 3]>,
    semantics: Semantics,
    pinned: Vec<bool>,
}

impl Formula {
    pub fn new(n_vars: usize, clauses: Vec<[usize; 3]>, semantics: Semantics) -> Result<Self> {
        if n_vars > MAX_VARS {
            return Err(Error::Resource(format!(
                "{n_vars} variables exceeds the packed-assignment limit of {MAX_VARS}"
            )));
        }
        for (ci, c) in clauses.iter().enumerate() {
            check_clause(c, n_vars).map_err(|msg| Error::input(format!("clause {ci}: {msg}")))?;
        }
        Ok(Self {
            n_vars,
            clauses,
            semantics,
            pinned: Vec::new(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[[usize; 3]] {
        &self.clauses
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    /// Bits of the pinned prefix, `pinned()[i]` is the value of `x_i`.
    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    pub fn n_pinned(&self) -> usize {
        self.pinned.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_vars - self.pinned.len()
    }

    pub fn free_vars(&self) -> std::ops::Range<usize> {
        self.pinned.len()..self.n_vars
    }

    /// Clause density m / n.
    pub fn alpha(&self) -> f64 {
        if self.n_vars == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.n_vars as f64
        }
    }

    /// Packed bits of the pinned prefix.
    pub fn prefix_mask(&self) -> u64 {
        self.pinned
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| m | ((b as u64) << i))
    }

    /// Full assignment for free-variable configuration `config`.
    #[inline]
    pub fn full_mask(&self, config: u64) -> u64 {
        self.prefix_mask() | (config << self.pinned.len())
    }

    /// Evaluate a packed full assignment. Assignments that disagree with the
    /// pinned prefix are not solutions of the reduced formula.
    pub fn satisfied_by_mask(&self, mask: u64) -> bool {
        let prefix_bits = self.pinned.len();
        if prefix_bits > 0 {
            let low = if prefix_bits == 64 { u64::MAX } else { (1u64 << prefix_bits) - 1 };
            if mask & low != self.prefix_mask() {
                return false;
            }
        }
        self.clauses_satisfied(mask)
    }

    /// Clause check ignoring the pinned prefix.
    #[inline]
    pub fn clauses_satisfied(&self, mask: u64) -> bool {
        let sem = self.semantics;
        self.clauses.iter().all(|&[a, b, c]| {
            sem.clause_satisfied((mask >> a) & 1 == 1, (mask >> b) & 1 == 1, (mask >> c) & 1 == 1)
        })
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<bool> {
        if a.len() != self.n_vars {
            return Err(Error::input(format!(
                "assignment has {} bits, formula has {} variables",
                a.len(),
                self.n_vars
            )));
        }
        Ok(self.satisfied_by_mask(a.to_mask()))
    }

    /// Pin `var` to `bit`. Only the next variable in ascending order may be fixed.
    pub fn fix_variable(&self, var: usize, bit: bool) -> Result<Formula> {
        if var < self.pinned.len() {
            return Err(Error::input(format!("variable {var} is already fixed")));
        }
        if var != self.pinned.len() {
            return Err(Error::input(format!(
                "variable {var} is out of order, next unfixed variable is {}",
                self.pinned.len()
            )));
        }
        if var >= self.n_vars {
            return Err(Error::input(format!("variable {var} out of range")));
        }
        let mut next = self.clone();
        next.pinned.push(bit);
        Ok(next)
    }

    pub fn fix_next(&self, bit: bool) -> Result<Formula> {
        self.fix_variable(self.pinned.len(), bit)
    }

    /// Instance-file text.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "p vqc {} {} {}\n",
            self.semantics.tag(),
            self.n_vars,
            self.clauses.len()
        );
        for [a, b, c] in &self.clauses {
            out.push_str(&format!("{a} {b} {c}\n"));
        }
        for (v, &bit) in self.pinned.iter().enumerate() {
            out.push_str(&format!("a {v} {}\n", bit as u8));
        }
        out
    }

    pub fn read_instance(path: impl AsRef<Path>) -> Result<Formula> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn write_instance(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn check_clause(c: &[usize; 3], n_vars: usize) -> std::result::Result<(), String> {
    if let Some(v) = c.iter().find(|&&v| v >= n_vars) {
        return Err(format!("variable index {v} out of range [0, {n_vars})"));
    }
    if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
        return Err(format!("repeated variable in clause {c:?}"));
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(text: &str) -> Result<Formula> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty instance".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "p" || fields[1] != "vqc" {
            return Err(perr(
                hline,
                format!("malformed header `{header}`, expected `p vqc <nae|one3> <n_vars> <n_clauses>`"),
            ));
        }
        let semantics: Semantics = fields[2].parse().map_err(|e: Error| perr(hline, e.to_string()))?;
        let n_vars: usize = fields[3]
            .parse()
            .map_err(|_| perr(hline, format!("bad variable count `{}`", fields[3])))?;
        let n_clauses: usize = fields[4]
            .parse()
            .map_err(|_| perr(hline, format!("bad clause count `{}`", fields[4])))?;
        if n_vars > MAX_VARS {
            return Err(Error::Resource(format!("{n_vars} variables exceeds {MAX_VARS}")));
        }

        let mut clauses = Vec::with_capacity(n_clauses);
        let mut pins: Vec<(usize, usize, bool)> = Vec::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "a" {
                if toks.len() != 3 {
                    return Err(perr(ln, "pin line must be `a <var> <bit>`".into()));
                }
                let var: usize = toks[1]
                    .parse()
                    .map_err(|_| perr(ln, format!("bad variable `{}`", toks[1])))?;
                let bit = match toks[2] {
                    "0" => false,
                    "1" => true,
                    other => return Err(perr(ln, format!("bad bit `{other}`"))),
                };
                pins.push((ln, var, bit));
                continue;
            }
            if !pins.is_empty() {
                return Err(perr(ln, "clause after pin lines".into()));
            }
            if toks.len() != 3 {
                return Err(perr(ln, format!("clause must have 3 variables, got {}", toks.len())));
            }
            let mut c = [0usize; 3];
            for (slot, tok) in c.iter_mut().zip(&toks) {
                if tok.starts_with('-') {
                    return Err(perr(ln, format!("negative literal `{tok}` not supported")));
                }
                *slot = tok
                    .parse()
                    .map_err(|_| perr(ln, format!("bad variable index `{tok}`")))?;
            }
            check_clause(&c, n_vars).map_err(|m| perr(ln, m))?;
            clauses.push(c);
        }
        if clauses.len() != n_clauses {
            return Err(perr(
                hline,
                format!("header declares {n_clauses} clauses, found {}", clauses.len()),
            ));
        }

        let mut formula = Formula::new(n_vars, clauses, semantics)?;
        for (ln, var, bit) in pins {
            formula = formula
                .fix_variable(var, bit)
                .map_err(|e| perr(ln, e.to_string()))?;
        }
        Ok(formula)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nae1() -> Formula {
        Formula::new(3, vec![[0, 1, 2]], Semantics::Nae).unwrap()
    }

    fn bits(s: &str) -> Assignment {
        Assignment::new(s.chars().map(|c| c == '1').collect())
    }

    #[test]
    fn nae_clause_semantics() {
        let f = nae1();
        assert!(f.evaluate(&bits("011")).unwrap());
        assert!(!f.evaluate(&bits("111")).unwrap());
        assert!(!f.evaluate(&bits("000")).unwrap());
    }

    #[test]
    fn exactly_one_clause_semantics() {
        let f = Formula::new(3, vec![[0, 1, 2]], Semantics::ExactlyOne).unwrap();
        assert!(f.evaluate(&bits("100")).unwrap());
        assert!(!f.evaluate(&bits("110")).unwrap());
        assert!(!f.evaluate(&bits("000")).unwrap());
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        assert!(matches!(nae1().evaluate(&bits("01")), Err(Error::Input(_))));
    }

    #[test]
    fn fix_variable_order_and_refix() {
        let f = nae1();
        let g = f.fix_variable(0, true).unwrap();
        assert!(matches!(g.fix_variable(0, false), Err(Error::Input(_))));
        assert!(matches!(g.fix_variable(2, false), Err(Error::Input(_))));
        let h = g.fix_next(false).unwrap().fix_next(false).unwrap();
        assert_eq!(h.n_free(), 0);
        // 1,0,0 is the only candidate left and it is NAE
        assert!(h.satisfied_by_mask(0b001));
        assert!(h.fix_next(true).is_err());
    }

    #[test]
    fn fixing_prefix_01_keeps_matching_solutions() {
        // two-variable-style tree: x0 x1 free, x2 tied in by one NAE clause
        let f = nae1();
        let g = f.fix_variable(0, false).unwrap().fix_variable(1, true).unwrap();
        let sols: Vec<u64> = (0..8).filter(|&m| g.satisfied_by_mask(m)).collect();
        let orig: Vec<u64> = (0..8)
            .filter(|&m| f.satisfied_by_mask(m) && m & 1 == 0 && (m >> 1) & 1 == 1)
            .collect();
        assert_eq!(sols, orig);
    }

    #[test]
    fn header_semantics_parsed() {
        let f: Formula = "p vqc nae 3 1\n0 1 2\n".parse().unwrap();
        assert_eq!(f.semantics(), Semantics::Nae);
        let f: Formula = "p vqc one3 3 1\n0 1 2\n".parse().unwrap();
        assert_eq!(f.semantics(), Semantics::ExactlyOne);
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "p vqc nae 3 1\n0 1 1\n",
            "p vqc nae 3 1\n0 1 3\n",
            "p cnf 3 1\n0 1 2\n",
            "p vqc xor 3 1\n0 1 2\n",
            "p vqc nae 3 2\n0 1 2\n",
            "p vqc nae 3 1\n0 -1 2\n",
            "p vqc nae 3 1\n0 1 2\na 1 0\n",
            "p vqc nae 3 1\n0 1 2\na 0 2\n",
            "",
        ] {
            assert!(bad.parse::<Formula>().is_err(), "accepted {bad:?}");
        }
        let e = "p vqc nae 3 1\n0 1 1\n".parse::<Formula>().unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn text_round_trip_with_pins() {
        let f = Formula::new(5, vec![[0, 1, 2], [2, 3, 4]], Semantics::ExactlyOne)
            .unwrap()
            .fix_next(true)
            .unwrap()
            .fix_next(false)
            .unwrap();
        let g: Formula = f.to_text().parse().unwrap();
        assert_eq!(f, g);
    }
}
