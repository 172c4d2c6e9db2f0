//! Exact probability measures on `{0,1}^n`.

mod family;
mod function;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::{self, Bits};
use crate::error::{Error, Result};
use crate::limits;
use crate::rational::parse_rational;

pub use family::{
    family_anti_pair, family_balls_bins, family_conditioned_sum, family_hadamard,
    family_independent, family_nand, family_pos_pair, parse_family_spec, zoo, ZooEntry,
};
pub use function::{FunctionFile, TestFunction};

/// A probability mass function on `{0,1}^n` with exact rational atoms.
///
/// Atoms of mass zero are never stored and the stored masses sum to exactly one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitMeasure {
    n: usize,
    atoms: BTreeMap<u32, BigRational>,
}

/// A partial assignment `X_K = a_K`, kept in the order the variables were given.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    indices: Vec<usize>,
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(indices: Vec<usize>, values: Vec<bool>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "assignment has {} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex(w[0]));
            }
        }
        if let Some(&i) = seen.first() {
            if i == 0 {
                return Err(Error::InvalidIndex { index: 0, n: 0 });
            }
        }
        Ok(Assignment { indices, values })
    }

    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn single(index: usize, value: bool) -> Self {
        Assignment {
            indices: vec![index],
            values: vec![value],
        }
    }

    /// Builds the assignment of the variables in `mask` to the corresponding bits of `point`.
    pub fn from_mask(n: usize, mask: u32, point: u32) -> Self {
        let indices = bits::indices_of(n, mask);
        let values = indices.iter().map(|&i| bits::get(point, n, i)).collect();
        Assignment { indices, values }
    }

    pub fn with(&self, index: usize, value: bool) -> Result<Self> {
        let mut indices = self.indices.clone();
        let mut values = self.values.clone();
        indices.push(index);
        values.push(value);
        Assignment::new(indices, values)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn value_of(&self, index: usize) -> Option<bool> {
        self.iter().find(|&(i, _)| i == index).map(|(_, v)| v)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i == 0 || i > n) {
            Some(&index) => Err(Error::InvalidIndex { index, n }),
            None => Ok(()),
        }
    }

    /// Mask of assigned variables and the assigned bits, both packed for width `n`.
    pub fn masks(&self, n: usize) -> (u32, u32) {
        self.iter().fold((0, 0), |(mask, vals), (i, v)| {
            let b = bits::var_bit(n, i);
            (mask | b, if v { vals | b } else { vals })
        })
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self
            .iter()
            .map(|(i, v)| format!("x{}={}", i, u8::from(v)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl ExplicitMeasure {
    /// Builds a measure from `(point, mass)` pairs, summing duplicates.
    pub fn new(n: usize, atoms: impl IntoIterator<Item = (u32, BigRational)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        limits::ensure("measure", n, limits::MEASURE)?;
        let mut map: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (x, p) in atoms {
            if x & !bits::full_mask(n) != 0 {
                return Err(Error::BadWidth {
                    point: format!("{x:#b}"),
                    expected: n,
                    got: 32 - x.leading_zeros() as usize,
                });
            }
            if p.is_negative() {
                return Err(Error::NegativeMass {
                    point: bits::format_point(x, n),
                    mass: p,
                });
            }
            *map.entry(x).or_insert_with(BigRational::zero) += p;
        }
        map.retain(|_, p| !p.is_zero());
        let total: BigRational = map.values().sum();
        if !total.is_one() {
            return Err(Error::MassNotOne { total });
        }
        Ok(ExplicitMeasure { n, atoms: map })
    }

    /// Builds a measure from bitstring atoms such as `("101", 1/4)`.
    pub fn from_bitstrings<S: AsRef<str>>(
        n: usize,
        atoms: impl IntoIterator<Item = (S, BigRational)>,
    ) -> Result<Self> {
        let mut parsed = Vec::new();
        for (s, p) in atoms {
            let s = s.as_ref();
            let (x, width) = bits::parse_point(s)?;
            if width != n {
                return Err(Error::BadWidth {
                    point: s.to_string(),
                    expected: n,
                    got: width,
                });
            }
            parsed.push((x, p));
        }
        ExplicitMeasure::new(n, parsed)
    }

    /// Normalizes nonnegative weights; fails if they are all zero.
    pub(crate) fn from_weights(
        n: usize,
        weights: impl IntoIterator<Item = (u32, BigRational)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<u32, BigRational> = BTreeMap::new();
        for (x, w) in weights {
            if !w.is_zero() {
                *map.entry(x).or_insert_with(BigRational::zero) += w;
            }
        }
        let total: BigRational = map.values().sum();
        if total.is_zero() {
            return Err(Error::ZeroProbabilityEvent);
        }
        for p in map.values_mut() {
            *p /= &total;
        }
        Ok(ExplicitMeasure { n, atoms: map })
    }

    pub fn point_mass(n: usize, x: u32) -> Result<Self> {
        ExplicitMeasure::new(n, [(x, BigRational::one())])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> impl Iterator<Item = (u32, &BigRational)> + '_ {
        self.atoms.iter().map(|(&x, p)| (x, p))
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, x: u32) -> BigRational {
        self.atoms
            .get(&x)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// `Pr[X_K = a_K]`.
    pub fn probability(&self, on: &Assignment) -> Result<BigRational> {
        on.validate(self.n)?;
        let (mask, vals) = on.masks(self.n);
        Ok(self
            .atoms()
            .filter(|(x, _)| x & mask == vals)
            .map(|(_, p)| p)
            .sum())
    }

    /// `E[X_i]`.
    pub fn mean(&self, i: usize) -> BigRational {
        let b = bits::var_bit(self.n, i);
        self.atoms()
            .filter(|(x, _)| x & b != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Law of the remaining variables given `on`, relabeled in ascending original order.
    ///
    /// Conditioning on every variable is rejected, since the result would have no variables.
    pub fn condition(&self, on: &Assignment) -> Result<ExplicitMeasure> {
        on.validate(self.n)?;
        let (mask, vals) = on.masks(self.n);
        let keep = bits::full_mask(self.n) & !mask;
        if !self.atoms.keys().any(|x| x & mask == vals) {
            return Err(Error::ZeroProbabilityEvent);
        }
        if keep == 0 {
            return Err(Error::InvalidParameter(
                "conditioning on every variable leaves an empty measure".into(),
            ));
        }
        let width = keep.count_ones() as usize;
        let weights = self
            .atoms()
            .filter(|(x, _)| x & mask == vals)
            .map(|(x, p)| (bits::compress(x, keep), p.clone()));
        ExplicitMeasure::from_weights(width, weights)
    }

    /// Pushforward onto `subset`, with coordinates in ascending index order.
    pub fn marginal(&self, subset: &[usize]) -> Result<ExplicitMeasure> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let probe = Assignment::new(subset.to_vec(), vec![false; subset.len()])?;
        probe.validate(self.n)?;
        let keep = bits::mask_of(self.n, subset);
        let width = keep.count_ones() as usize;
        let weights = self
            .atoms()
            .map(|(x, p)| (bits::compress(x, keep), p.clone()));
        ExplicitMeasure::from_weights(width, weights)
    }

    pub fn expectation(&self, f: &TestFunction) -> Result<BigRational> {
        if f.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: f.n(),
            });
        }
        Ok(self.atoms().map(|(x, p)| p * f.value(x)).sum())
    }

    /// Dense table of masses indexed by point, for `n` small enough to enumerate.
    pub(crate) fn dense(&self) -> Vec<BigRational> {
        let mut table = vec![BigRational::zero(); 1usize << self.n];
        for (x, p) in self.atoms() {
            table[x as usize] = p.clone();
        }
        table
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            n: self.n,
            atoms: self
                .atoms()
                .map(|(x, p)| AtomEntry {
                    x: Bits::new(x, self.n).to_string(),
                    p: p.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &MeasureFile) -> Result<Self> {
        let mut atoms = Vec::with_capacity(file.atoms.len());
        for a in &file.atoms {
            atoms.push((a.x.as_str(), parse_rational(&a.p)?));
        }
        ExplicitMeasure::from_bitstrings(file.n, atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("measure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        ExplicitMeasure::from_file(&file)
    }
}

impl Serialize for ExplicitMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExplicitMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = MeasureFile::deserialize(d)?;
        ExplicitMeasure::from_file(&file).map_err(serde::de::Error::custom)
    }
}

/// On-disk layout: `{"n": 3, "atoms": [{"x": "100", "p": "1/4"}, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub n: usize,
    pub atoms: Vec<AtomEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomEntry {
    pub x: String,
    pub p: String,
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::testutil;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_roundtrip(m in testutil::measure(5)) {
            prop_assert_eq!(ExplicitMeasure::from_json(&m.to_json()).unwrap(), m);
        }

        #[test]
        fn total_expectation((m, f) in (1usize..=5).prop_flat_map(|n| (testutil::measure_on(n), testutil::function(n))), i in 1usize..=5) {
            let n = m.n();
            let i = (i - 1) % n + 1;
            if n == 1 {
                return Ok(());
            }
            let mut total = BigRational::zero();
            for v in [false, true] {
                let on = Assignment::single(i, v);
                let p = m.probability(&on).unwrap();
                if p.is_zero() {
                    continue;
                }
                let inner = m.condition(&on).unwrap().expectation(&f.restrict(&on).unwrap()).unwrap();
                total += p * inner;
            }
            prop_assert_eq!(total, m.expectation(&f).unwrap());
        }

        #[test]
        fn condition_commutes_with_marginal(m in (3usize..=5).prop_flat_map(testutil::measure_on), v in any::<bool>()) {
            let on = Assignment::single(1, v);
            if m.probability(&on).unwrap().is_zero() {
                return Ok(());
            }
            let a = m.condition(&on).unwrap().marginal(&[1]).unwrap();
            let b = m.marginal(&[1, 2]).unwrap().condition(&on).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn expectation_is_linear(m in testutil::measure(5), seed in prop::collection::vec(-4i64..=4, 5)) {
            let n = m.n();
            let w: Vec<BigRational> = seed[..n].iter().map(|&k| crate::rational::rat(k, 4)).collect();
            let f = TestFunction::linear(&w).unwrap();
            let direct: BigRational = (1..=n).map(|i| &w[i - 1] * m.mean(i)).sum();
            prop_assert_eq!(m.expectation(&f).unwrap(), direct);
        }

        #[test]
        fn random_functions_respect_declarations(f in (1usize..=6).prop_flat_map(testutil::function)) {
            prop_assert!(TestFunction::new(f.n(), f.values().to_vec(), f.is_monotone()).is_ok());
        }
    }
}
