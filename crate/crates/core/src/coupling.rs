//! Monotone couplings between two laws on `{0,1}^L`.
//!
//! `lower` is coupled below `upper`: every pair `(x, y)` in the support has
//! `x <= y` coordinatewise. Such a coupling exists exactly when
//! `lower(M) >= upper(M)` for every down-closed `M`; the check is an exact
//! bipartite max-flow and a failed flow yields the violating down-set from
//! its minimum cut.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bits::{self, Bits};
use crate::error::{Error, Result};
use crate::flow::Network;
use crate::measure::ExplicitMeasure;
use crate::rational::serde_rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    lower: ExplicitMeasure,
    upper: ExplicitMeasure,
    covering: bool,
    mass: BTreeMap<(u32, u32), BigRational>,
}

/// A down-closed set `M` with `lower(M) < upper(M)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceCertificate {
    pub down_set: Vec<Bits>,
    #[serde(with = "serde_rational")]
    pub lower_mass: BigRational,
    #[serde(with = "serde_rational")]
    pub upper_mass: BigRational,
}

/// A set of `lower` atoms whose admissible partners carry too little `upper` mass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityCut {
    pub sources: Vec<Bits>,
    pub neighbours: Vec<Bits>,
    #[serde(with = "serde_rational")]
    pub source_mass: BigRational,
    #[serde(with = "serde_rational")]
    pub neighbour_mass: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingFailure {
    NotDominated(DominanceCertificate),
    Infeasible(InfeasibilityCut),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dominance {
    Dominates,
    Fails(DominanceCertificate),
}

impl fmt::Display for CouplingFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingFailure::NotDominated(c) => write!(
                f,
                "down-closed set of {} points has lower mass {} < upper mass {}",
                c.down_set.len(),
                c.lower_mass,
                c.upper_mass
            ),
            CouplingFailure::Infeasible(c) => write!(
                f,
                "{} lower atoms of mass {} can only reach upper mass {}",
                c.sources.len(),
                c.source_mass,
                c.neighbour_mass
            ),
        }
    }
}

#[inline]
pub(crate) fn admissible(x: u32, y: u32, covering: bool) -> bool {
    bits::leq(x, y) && (!covering || (y & !x).count_ones() <= 1)
}

pub(crate) enum Transport {
    Plan(Vec<((u32, u32), BigRational)>),
    Feasible,
    Failed(CouplingFailure),
}

/// Solves the transport problem between two unnormalized laws given as sorted,
/// strictly positive atom lists. Masses in the plan and certificates are normalized.
pub(crate) fn transport(
    width: usize,
    lower: &[(u32, BigRational)],
    upper: &[(u32, BigRational)],
    covering: bool,
    want_plan: bool,
) -> Transport {
    let lower_total: BigRational = lower.iter().map(|(_, p)| p).sum();
    let upper_total: BigRational = upper.iter().map(|(_, p)| p).sum();
    let target = &lower_total * &upper_total;
    // source, sink, lower atoms, upper atoms
    let (s, t) = (0, 1);
    let left = |k: usize| 2 + k;
    let right = |k: usize| 2 + lower.len() + k;
    let mut net = Network::new(2 + lower.len() + upper.len());
    let src_edges: Vec<usize> = lower
        .iter()
        .enumerate()
        .map(|(k, (_, p))| net.add_edge(s, left(k), p * &upper_total))
        .collect();
    let sink_edges: Vec<usize> = upper
        .iter()
        .enumerate()
        .map(|(k, (_, p))| net.add_edge(right(k), t, p * &lower_total))
        .collect();
    let unbounded = BigRational::from_integer(BigInt::from(2)) * &target;
    let mut pair_edges = Vec::new();
    let mut seeds = Vec::new();
    for (a, (x, _)) in lower.iter().enumerate() {
        for (b, (y, _)) in upper.iter().enumerate() {
            if admissible(*x, *y, covering) {
                let e = net.add_edge(left(a), right(b), unbounded.clone());
                pair_edges.push((a, b, e));
                seeds.push(vec![src_edges[a], e, sink_edges[b]]);
            }
        }
    }
    let sol = net.solve_seeded(s, t, &seeds);
    if sol.value == target {
        if !want_plan {
            return Transport::Feasible;
        }
        let plan = pair_edges
            .iter()
            .filter(|(_, _, e)| !sol.flows[*e].is_zero())
            .map(|&(a, b, e)| ((lower[a].0, upper[b].0), &sol.flows[e] / &target))
            .collect();
        return Transport::Plan(plan);
    }
    let reached: Vec<u32> = (0..lower.len())
        .filter(|&k| sol.source_side[left(k)])
        .map(|k| lower[k].0)
        .collect();
    if covering {
        let neighbours: Vec<(u32, &BigRational)> = upper
            .iter()
            .filter(|(y, _)| reached.iter().any(|&x| admissible(x, *y, true)))
            .map(|(y, p)| (*y, p))
            .collect();
        let source_mass: BigRational = lower
            .iter()
            .filter(|(x, _)| reached.contains(x))
            .map(|(_, p)| p)
            .sum::<BigRational>()
            / &lower_total;
        let neighbour_mass = neighbours.iter().map(|(_, p)| *p).sum::<BigRational>() / &upper_total;
        return Transport::Failed(CouplingFailure::Infeasible(InfeasibilityCut {
            sources: reached.iter().map(|&x| Bits::new(x, width)).collect(),
            neighbours: neighbours
                .iter()
                .map(|(y, _)| Bits::new(*y, width))
                .collect(),
            source_mass,
            neighbour_mass,
        }));
    }
    // The complement of the up-closure is a violating down-set; shrinking it to the
    // down-closure of the upper atoms it holds keeps upper(M) and cannot raise lower(M).
    let up = up_closure(width, &reached);
    let kept: Vec<u32> = upper
        .iter()
        .map(|(y, _)| *y)
        .filter(|y| !up[*y as usize])
        .collect();
    let down = down_closure(width, &kept);
    let down_set: Vec<Bits> = (0..(1u32 << width))
        .filter(|&x| down[x as usize])
        .map(|x| Bits::new(x, width))
        .collect();
    let mass_in = |law: &[(u32, BigRational)], total: &BigRational| {
        law.iter()
            .filter(|(x, _)| down[*x as usize])
            .map(|(_, p)| p)
            .sum::<BigRational>()
            / total
    };
    Transport::Failed(CouplingFailure::NotDominated(DominanceCertificate {
        lower_mass: mass_in(lower, &lower_total),
        upper_mass: mass_in(upper, &upper_total),
        down_set,
    }))
}

/// Indicator table of the up-closure of `seeds` in `{0,1}^width`.
pub(crate) fn up_closure(width: usize, seeds: &[u32]) -> Vec<bool> {
    let mut up = vec![false; 1usize << width];
    for &x in seeds {
        up[x as usize] = true;
    }
    for x in 0..(1u32 << width) {
        if !up[x as usize] {
            let mut rest = x;
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                if up[(x ^ b) as usize] {
                    up[x as usize] = true;
                    break;
                }
                rest ^= b;
            }
        }
    }
    up
}

/// Indicator table of the down-closure of `seeds` in `{0,1}^width`.
fn down_closure(width: usize, seeds: &[u32]) -> Vec<bool> {
    let full = bits::full_mask(width);
    let mut down = vec![false; 1usize << width];
    for &x in seeds {
        down[x as usize] = true;
    }
    for x in (0..=full).rev() {
        if !down[x as usize] {
            let mut rest = full & !x;
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                if down[(x | b) as usize] {
                    down[x as usize] = true;
                    break;
                }
                rest ^= b;
            }
        }
    }
    down
}

fn atom_list(m: &ExplicitMeasure) -> Vec<(u32, BigRational)> {
    m.atoms().map(|(x, p)| (x, p.clone())).collect()
}

fn same_width(lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> Result<()> {
    if lower.n() != upper.n() {
        return Err(Error::DimensionMismatch {
            expected: lower.n(),
            got: upper.n(),
        });
    }
    Ok(())
}

/// Decides whether `upper` stochastically dominates `lower`.
pub fn check_dominance(lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> Result<Dominance> {
    same_width(lower, upper)?;
    match transport(
        lower.n(),
        &atom_list(lower),
        &atom_list(upper),
        false,
        false,
    ) {
        Transport::Failed(CouplingFailure::NotDominated(c)) => Ok(Dominance::Fails(c)),
        Transport::Failed(CouplingFailure::Infeasible(_)) => unreachable!("monotone mode"),
        _ => Ok(Dominance::Dominates),
    }
}

/// Builds a coupling of `lower` below `upper`; in covering mode pairs are also
/// restricted to Hamming distance at most one.
pub fn build_monotone_coupling(
    lower: &ExplicitMeasure,
    upper: &ExplicitMeasure,
    covering_mode: bool,
) -> Result<Coupling> {
    same_width(lower, upper)?;
    match transport(
        lower.n(),
        &atom_list(lower),
        &atom_list(upper),
        covering_mode,
        true,
    ) {
        Transport::Plan(plan) => Ok(Coupling {
            lower: lower.clone(),
            upper: upper.clone(),
            covering: covering_mode,
            mass: plan.into_iter().collect(),
        }),
        Transport::Failed(failure) => Err(Error::DominanceFails(Box::new(failure))),
        Transport::Feasible => unreachable!("plan requested"),
    }
}

/// `sum nu(x,y) (|y| - |x|)`.
pub fn coupling_displacement(c: &Coupling) -> BigRational {
    c.mass
        .iter()
        .map(|(&(x, y), p)| {
            p * BigRational::from_integer(BigInt::from(
                i64::from(y.count_ones()) - i64::from(x.count_ones()),
            ))
        })
        .sum()
}

impl Coupling {
    pub fn lower(&self) -> &ExplicitMeasure {
        &self.lower
    }

    pub fn upper(&self) -> &ExplicitMeasure {
        &self.upper
    }

    pub fn covering(&self) -> bool {
        self.covering
    }

    pub fn width(&self) -> usize {
        self.lower.n()
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((u32, u32), &BigRational)> + '_ {
        self.mass.iter().map(|(&k, p)| (k, p))
    }

    pub fn mass(&self, x: u32, y: u32) -> BigRational {
        self.mass
            .get(&(x, y))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Re-checks both marginals and the support constraint exactly.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let mut rows: BTreeMap<u32, BigRational> = BTreeMap::new();
        let mut cols: BTreeMap<u32, BigRational> = BTreeMap::new();
        let n = self.width();
        for (&(x, y), p) in &self.mass {
            if *p <= BigRational::zero() {
                return Err(format!(
                    "non-positive mass at ({}, {})",
                    bits::format_point(x, n),
                    bits::format_point(y, n)
                ));
            }
            if !admissible(x, y, self.covering) {
                return Err(format!(
                    "inadmissible pair ({}, {})",
                    bits::format_point(x, n),
                    bits::format_point(y, n)
                ));
            }
            *rows.entry(x).or_insert_with(BigRational::zero) += p;
            *cols.entry(y).or_insert_with(BigRational::zero) += p;
        }
        let matches = |sums: &BTreeMap<u32, BigRational>, m: &ExplicitMeasure| {
            sums.len() == m.support_size() && m.atoms().all(|(x, p)| sums.get(&x) == Some(p))
        };
        if !matches(&rows, &self.lower) {
            return Err("row sums differ from the lower law".into());
        }
        if !matches(&cols, &self.upper) {
            return Err("column sums differ from the upper law".into());
        }
        Ok(())
    }

    pub fn to_file(&self) -> CouplingFile {
        let n = self.width();
        CouplingFile {
            covering: self.covering,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            pairs: self
                .mass
                .iter()
                .map(|(&(x, y), p)| PairEntry {
                    x: Bits::new(x, n),
                    y: Bits::new(y, n),
                    p: p.clone(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: CouplingFile) -> Result<Self> {
        same_width(&file.lower, &file.upper)?;
        let n = file.lower.n();
        let mut mass = BTreeMap::new();
        for pair in file.pairs {
            if pair.x.width != n || pair.y.width != n {
                return Err(Error::BadWidth {
                    point: pair.x.to_string(),
                    expected: n,
                    got: pair.x.width,
                });
            }
            *mass
                .entry((pair.x.value, pair.y.value))
                .or_insert_with(BigRational::zero) += pair.p;
        }
        let c = Coupling {
            lower: file.lower,
            upper: file.upper,
            covering: file.covering,
            mass,
        };
        c.verify().map_err(Error::InvalidParameter)?;
        Ok(c)
    }
}

impl DominanceCertificate {
    /// Recomputes both masses over `down_set` and checks down-closure and the strict inequality.
    pub fn verify(&self, lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> bool {
        self.reproduces(lower, upper) && self.lower_mass < self.upper_mass
    }

    /// Down-closure and both quoted masses, without the strict inequality.
    pub fn reproduces(&self, lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> bool {
        let n = lower.n();
        if self.down_set.iter().any(|b| b.width != n) {
            return false;
        }
        let members: std::collections::HashSet<u32> =
            self.down_set.iter().map(|b| b.value).collect();
        let closed = members.iter().all(|&x| {
            let mut rest = x;
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                if !members.contains(&(x ^ b)) {
                    return false;
                }
                rest ^= b;
            }
            true
        });
        let mass = |m: &ExplicitMeasure| -> BigRational {
            m.atoms()
                .filter(|(x, _)| members.contains(x))
                .map(|(_, p)| p)
                .sum()
        };
        closed && mass(lower) == self.lower_mass && mass(upper) == self.upper_mass
    }
}

impl InfeasibilityCut {
    /// Checks that every admissible partner of the sources is listed and that the
    /// sources outweigh their partners.
    pub fn verify(&self, lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> bool {
        self.reproduces(lower, upper) && self.source_mass > self.neighbour_mass
    }

    /// Completeness of the neighbour list and both quoted masses.
    pub fn reproduces(&self, lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> bool {
        let listed: std::collections::HashSet<u32> =
            self.neighbours.iter().map(|b| b.value).collect();
        let complete = upper
            .atoms()
            .filter(|(y, _)| self.sources.iter().any(|x| admissible(x.value, *y, true)))
            .all(|(y, _)| listed.contains(&y));
        let source_mass: BigRational = self.sources.iter().map(|x| lower.mass(x.value)).sum();
        let neighbour_mass: BigRational = self.neighbours.iter().map(|y| upper.mass(y.value)).sum();
        complete && source_mass == self.source_mass && neighbour_mass == self.neighbour_mass
    }
}

impl CouplingFailure {
    pub fn verify(&self, lower: &ExplicitMeasure, upper: &ExplicitMeasure) -> bool {
        match self {
            CouplingFailure::NotDominated(c) => c.verify(lower, upper),
            CouplingFailure::Infeasible(c) => c.verify(lower, upper),
        }
    }
}

/// `{"covering": false, "lower": {...}, "upper": {...}, "pairs": [{"x": "01", "y": "11", "p": "1/2"}]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingFile {
    pub covering: bool,
    pub lower: ExplicitMeasure,
    pub upper: ExplicitMeasure,
    pub pairs: Vec<PairEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairEntry {
    pub x: Bits,
    pub y: Bits,
    #[serde(with = "serde_rational")]
    pub p: BigRational,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{family_anti_pair, family_independent, family_nand, Assignment};
    use crate::rational::{int, rat};

    fn law(n: usize, atoms: &[(&str, BigRational)]) -> ExplicitMeasure {
        ExplicitMeasure::from_bitstrings(n, atoms.iter().map(|(s, p)| (*s, p.clone()))).unwrap()
    }

    #[test]
    fn identical_laws_dominate() {
        let m = family_nand(4).unwrap();
        assert_eq!(check_dominance(&m, &m).unwrap(), Dominance::Dominates);
        let c = build_monotone_coupling(&m, &m, false).unwrap();
        c.verify().unwrap();
        assert_eq!(coupling_displacement(&c), int(0));
    }

    #[test]
    fn point_masses_in_the_wrong_order_fail() {
        let ones = law(3, &[("111", int(1))]);
        let zeros = law(3, &[("000", int(1))]);
        match check_dominance(&ones, &zeros).unwrap() {
            Dominance::Fails(cert) => {
                assert!(cert.verify(&ones, &zeros));
                assert_eq!(cert.lower_mass, int(0));
                assert_eq!(cert.upper_mass, int(1));
                assert_eq!(cert.down_set, vec!["000".parse().unwrap()]);
            }
            Dominance::Dominates => panic!("must fail"),
        }
        assert_eq!(
            check_dominance(&zeros, &ones).unwrap(),
            Dominance::Dominates
        );
    }

    #[test]
    fn nand3_coupling_on_second_variable() {
        let nand = family_nand(3).unwrap();
        let lower = nand.condition(&Assignment::single(2, true)).unwrap();
        let upper = nand.condition(&Assignment::single(2, false)).unwrap();
        assert_eq!(lower, law(2, &[("10", rat(1, 2)), ("01", rat(1, 2))]));
        assert_eq!(upper, law(2, &[("10", rat(1, 2)), ("11", rat(1, 2))]));
        assert_eq!(
            check_dominance(&lower, &upper).unwrap(),
            Dominance::Dominates
        );
        let c = build_monotone_coupling(&lower, &upper, false).unwrap();
        c.verify().unwrap();
        let pairs: Vec<(String, String, BigRational)> = c
            .pairs()
            .map(|((x, y), p)| {
                (
                    bits::format_point(x, 2),
                    bits::format_point(y, 2),
                    p.clone(),
                )
            })
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("01".to_string(), "11".to_string(), rat(1, 2)),
                ("10".to_string(), "10".to_string(), rat(1, 2)),
            ]
        );
        assert_eq!(coupling_displacement(&c), rat(1, 2));
    }

    #[test]
    fn covering_mode_fails_on_nand3_first_variable() {
        let nand = family_nand(3).unwrap();
        let lower = nand.condition(&Assignment::single(1, true)).unwrap();
        let upper = nand.condition(&Assignment::single(1, false)).unwrap();
        // plain dominance holds
        assert!(build_monotone_coupling(&lower, &upper, false).is_ok());
        match build_monotone_coupling(&lower, &upper, true) {
            Err(Error::DominanceFails(failure)) => {
                assert!(failure.verify(&lower, &upper));
                match *failure {
                    CouplingFailure::Infeasible(cut) => {
                        assert!(cut.sources.contains(&"00".parse().unwrap()));
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn anti_pair_displacement_is_one() {
        let anti = family_anti_pair();
        let lower = anti.condition(&Assignment::single(1, true)).unwrap();
        let upper = anti.condition(&Assignment::single(1, false)).unwrap();
        let c = build_monotone_coupling(&lower, &upper, true).unwrap();
        assert_eq!(coupling_displacement(&c), int(1));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let a = family_independent(&[rat(1, 2)]).unwrap();
        let b = family_anti_pair();
        assert!(matches!(
            check_dominance(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coupling_json_roundtrip() {
        let nand = family_nand(3).unwrap();
        let lower = nand.condition(&Assignment::single(2, true)).unwrap();
        let upper = nand.condition(&Assignment::single(2, false)).unwrap();
        let c = build_monotone_coupling(&lower, &upper, false).unwrap();
        let json = serde_json::to_string(&c.to_file()).unwrap();
        let back = Coupling::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
