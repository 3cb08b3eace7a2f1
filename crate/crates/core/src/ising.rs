//! Ising encoding of NAE3SAT / 1-in-3SAT.
//!
//! H = - sum J_ij s_i s_j - sum h_i s_i + offset, with s = 2x - 1. Every clause
//! contributes an antiferromagnetic triangle (J = -1). For exactly-one clauses a
//! longitudinal field is added on every clause occurrence; its sign is not fixed
//! by hand but derived once by exhaustive validation on a single clause.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::oracle;
use crate::error::{Error, Result};
use crate::formula::{Formula, Semantics};

pub const DEFAULT_QUBIT_CAP: usize = 26;
pub const VALIDATION_CAP: usize = 16;

/// How the 1-in-3 longitudinal field is attached to variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldWeight {
    /// h_i = sign * (number of clauses containing i)
    PerOccurrence,
    /// h_i = sign for every variable appearing in at least one clause
    PerVariable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FieldConvention {
    pub sign: i8,
    pub weight: FieldWeight,
}

impl FieldConvention {
    pub const CANDIDATES: [FieldConvention; 4] = [
        FieldConvention { sign: -1, weight: FieldWeight::PerOccurrence },
        FieldConvention { sign: 1, weight: FieldWeight::PerOccurrence },
        FieldConvention { sign: -1, weight: FieldWeight::PerVariable },
        FieldConvention { sign: 1, weight: FieldWeight::PerVariable },
    ];
}

/// Per-occurrence field convention for exactly-one clauses, validated on a
/// lone clause the first time it is needed.
pub fn exactly_one_convention() -> FieldConvention {
    static CONVENTION: OnceLock<FieldConvention> = OnceLock::new();
    *CONVENTION.get_or_init(|| {
        let probe = Formula::new(3, vec![[0, 1, 2]], Semantics::ExactlyOne).expect("valid probe clause");
        FieldConvention::CANDIDATES
            .iter()
            .copied()
            .filter(|c| c.weight == FieldWeight::PerOccurrence)
            .find(|&c| ground_space_matches(&probe, Some(c)).unwrap_or(false))
            .expect("no per-occurrence field sign reproduces the 1-in-3 clause")
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    free_vars: Vec<usize>,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: BTreeMap<usize, f64>,
    offset: f64,
}

impl IsingModel {
    pub fn free_vars(&self) -> &[usize] {
        &self.free_vars
    }

    /// J_ij between free variables, keyed with i < j.
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplings
    }

    /// h_i on free variables (absent means zero).
    pub fn fields(&self) -> &BTreeMap<usize, f64> {
        &self.fields
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn n_free(&self) -> usize {
        self.free_vars.len()
    }

    /// Energy of a free-variable configuration (bit j of `config` is free var j).
    pub fn energy(&self, config: u64) -> f64 {
        let pos = self.positions();
        let spin = |v: usize| if (config >> pos[&v]) & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = self.offset;
        for (&(i, j), &jij) in &self.couplings {
            e -= jij * spin(i) * spin(j);
        }
        for (&i, &h) in &self.fields {
            e -= h * spin(i);
        }
        e
    }

    fn positions(&self) -> BTreeMap<usize, usize> {
        self.free_vars.iter().enumerate().map(|(p, &v)| (v, p)).collect()
    }

    pub fn energy_vector(&self) -> Result<EnergyVector> {
        self.energy_vector_capped(DEFAULT_QUBIT_CAP)
    }

    pub fn energy_vector_capped(&self, cap: usize) -> Result<EnergyVector> {
        let k = self.free_vars.len();
        if k > cap {
            return Err(Error::Resource(format!("{k} free qubits exceeds cap {cap}")));
        }
        let pos = self.positions();
        let pairs: Vec<(u32, u32, f64)> = self
            .couplings
            .iter()
            .map(|(&(i, j), &jij)| (pos[&i] as u32, pos[&j] as u32, jij))
            .collect();
        let fields: Vec<(u32, f64)> = self.fields.iter().map(|(&i, &h)| (pos[&i] as u32, h)).collect();
        let offset = self.offset;

        let values: Vec<f64> = (0..1usize << k)
            .into_par_iter()
            .with_min_len(1 << 12)
            .map(|c| {
                let s = |p: u32| (((c >> p) & 1) as f64) * 2.0 - 1.0;
                let mut e = offset;
                for &(a, b, jij) in &pairs {
                    e -= jij * s(a) * s(b);
                }
                for &(a, h) in &fields {
                    e -= h * s(a);
                }
                e
            })
            .collect();
        Ok(EnergyVector::new(values))
    }
}

/// Build the Ising model of `f`, folding pinned spins into fields and offset.
pub fn build_ising(f: &Formula) -> IsingModel {
    let convention = match f.semantics() {
        Semantics::Nae => None,
        Semantics::ExactlyOne => Some(exactly_one_convention()),
    };
    build_ising_with(f, convention)
}

/// Build with an explicit field convention (`None` means no field term).
pub fn build_ising_with(f: &Formula, convention: Option<FieldConvention>) -> IsingModel {
    let n = f.n_vars();
    let mut full_j: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut full_h = vec![0.0; n];
    let mut occurrences = vec![0usize; n];
    for &[a, b, c] in f.clauses() {
        for (i, j) in [(a, b), (b, c), (a, c)] {
            *full_j.entry((i.min(j), i.max(j))).or_insert(0.0) += -1.0;
        }
        for v in [a, b, c] {
            occurrences[v] += 1;
        }
    }
    if let Some(conv) = convention {
        let sign = conv.sign as f64;
        for (h, &occ) in full_h.iter_mut().zip(&occurrences) {
            *h = match conv.weight {
                FieldWeight::PerOccurrence => sign * occ as f64,
                FieldWeight::PerVariable if occ > 0 => sign,
                FieldWeight::PerVariable => 0.0,
            };
        }
    }

    let n_pinned = f.n_pinned();
    let pinned_spin = |v: usize| if f.pinned()[v] { 1.0 } else { -1.0 };
    let mut couplings = BTreeMap::new();
    let mut fields: BTreeMap<usize, f64> = BTreeMap::new();
    let mut offset = 0.0;
    for (&(i, j), &jij) in &full_j {
        match (i < n_pinned, j < n_pinned) {
            (true, true) => offset -= jij * pinned_spin(i) * pinned_spin(j),
            (true, false) => *fields.entry(j).or_insert(0.0) += jij * pinned_spin(i),
            (false, true) => *fields.entry(i).or_insert(0.0) += jij * pinned_spin(j),
            (false, false) => {
                couplings.insert((i, j), jij);
            }
        }
    }
    for (v, &h) in full_h.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        if v < n_pinned {
            offset -= h * pinned_spin(v);
        } else {
            *fields.entry(v).or_insert(0.0) += h;
        }
    }
    fields.retain(|_, h| *h != 0.0);

    IsingModel {
        free_vars: f.free_vars().collect(),
        couplings,
        fields,
        offset,
    }
}

/// Diagonal of H_P over the 2^k free configurations.
///
/// Energies are integers in practice, so the distinct levels are indexed once
/// and the phase kernel only evaluates one complex exponential per level.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyVector {
    values: Vec<f64>,
    levels: Vec<f64>,
    level_of: Vec<u32>,
}

impl EnergyVector {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len().is_power_of_two(), "energy vector length must be a power of two");
        let mut levels: Vec<f64> = values.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let level_of = values
            .iter()
            .map(|v| levels.binary_search_by(|l| l.total_cmp(v)).expect("level present") as u32)
            .collect();
        Self { values, levels, level_of }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    /// Distinct energies in ascending order.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_of(&self) -> &[u32] {
        &self.level_of
    }

    pub fn min(&self) -> f64 {
        self.levels[0]
    }

    /// Same diagonal plus a constant.
    pub fn shifted(&self, delta: f64) -> Self {
        Self::new(self.values.iter().map(|v| v + delta).collect())
    }
}

/// Outcome of [`validate_mapping`].
#[derive(Clone, Debug, Serialize)]
pub struct MappingReport {
    pub semantics: Semantics,
    /// Field convention that makes the ground space equal the solution set;
    /// `None` for NAE (no field) and for unsatisfiable formulas.
    pub convention: Option<FieldConvention>,
    pub satisfiable: bool,
    pub n_solutions: u64,
    pub ground_energy: f64,
    pub ground_degeneracy: u64,
    pub note: String,
}

/// Exhaustively confirm that the ground space of the Ising model equals the
/// solution set, searching the field conventions for exactly-one clauses.
pub fn validate_mapping(f: &Formula) -> Result<MappingReport> {
    if f.n_free() > VALIDATION_CAP {
        return Err(Error::Resource(format!(
            "mapping validation enumerates 2^{} configurations, cap is 2^{VALIDATION_CAP}",
            f.n_free()
        )));
    }
    let n_solutions = oracle::exact_count(f)?;
    let candidates: Vec<Option<FieldConvention>> = match f.semantics() {
        Semantics::Nae => vec![None],
        Semantics::ExactlyOne => {
            let preferred = exactly_one_convention();
            std::iter::once(preferred)
                .chain(FieldConvention::CANDIDATES.into_iter().filter(|c| *c != preferred))
                .map(Some)
                .collect()
        }
    };
    let default = candidates[0];
    let ev = build_ising_with(f, default).energy_vector()?;
    let ground_energy = ev.min();
    let ground_degeneracy = ev.values().iter().filter(|&&e| e == ground_energy).count() as u64;

    if n_solutions == 0 {
        return Ok(MappingReport {
            semantics: f.semantics(),
            convention: None,
            satisfiable: false,
            n_solutions,
            ground_energy,
            ground_degeneracy,
            note: "solution set is empty; ground space holds violating configurations".into(),
        });
    }
    for conv in candidates {
        if ground_space_matches(f, conv)? {
            let note = match conv {
                None => "no field term".to_string(),
                Some(c) => format!("field sign {} with {:?} weighting", c.sign, c.weight),
            };
            return Ok(MappingReport {
                semantics: f.semantics(),
                convention: conv,
                satisfiable: true,
                n_solutions,
                ground_energy,
                ground_degeneracy,
                note,
            });
        }
    }
    Err(Error::Mapping(
        "no field convention makes the ground space equal to the solution set".into(),
    ))
}

fn ground_space_matches(f: &Formula, conv: Option<FieldConvention>) -> Result<bool> {
    let ev = build_ising_with(f, conv).energy_vector()?;
    let min = ev.min();
    Ok(ev
        .values()
        .iter()
        .enumerate()
        .all(|(c, &e)| (e == min) == f.satisfied_by_mask(f.full_mask(c as u64))))
}
