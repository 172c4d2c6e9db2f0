//! Decision procedures for the negative-dependence notions, each returning a
//! [`NotionReport`] whose certificate can be re-checked against the raw measure.

mod association;
mod correlation;
mod rayleigh;
mod regression;

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::{self, Bits};
use crate::coupling::{DominanceCertificate, InfeasibilityCut};
use crate::measure::{Assignment, ExplicitMeasure};
use crate::rational::{serde_rational, serde_rational_vec};
use crate::upset;

pub use association::{check_cna, check_neg_association};
pub use correlation::{check_cylinder, check_pairwise_nc};
pub use rayleigh::{default_rayleigh_grid, rayleigh_falsify, GeneratingPolynomial};
pub use regression::{check_neg_regression, check_stochastic_covering};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Notion {
    PairwiseNC,
    CylinderDep,
    NegAssociation,
    NegRegression,
    CondNegAssociation,
    StochasticCovering,
    RayleighFalsifier,
}

impl Notion {
    pub const ALL: [Notion; 7] = [
        Notion::PairwiseNC,
        Notion::CylinderDep,
        Notion::NegAssociation,
        Notion::NegRegression,
        Notion::CondNegAssociation,
        Notion::StochasticCovering,
        Notion::RayleighFalsifier,
    ];

    /// Short command-line name.
    pub fn short(&self) -> &'static str {
        match self {
            Notion::PairwiseNC => "nc",
            Notion::CylinderDep => "cyl",
            Notion::NegAssociation => "na",
            Notion::NegRegression => "nr",
            Notion::CondNegAssociation => "cna",
            Notion::StochasticCovering => "sc",
            Notion::RayleighFalsifier => "rayleigh",
        }
    }

    pub fn from_short(s: &str) -> Option<Notion> {
        Notion::ALL.into_iter().find(|n| n.short() == s)
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    ViolationFound,
    NoViolationFound,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStats {
    pub pairs_checked: u64,
    pub subsets_checked: u64,
    pub flows_run: u64,
    pub conditionals_checked: u64,
    pub points_evaluated: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotionReport {
    pub notion: Notion,
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    pub stats: WorkStats,
}

/// Evidence attached to a report. Failures always carry one; a passing
/// pairwise check carries its extremal pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `Cov[X_i, X_j]`.
    Covariance {
        i: usize,
        j: usize,
        #[serde(with = "serde_rational")]
        covariance: BigRational,
    },
    /// `E[prod_S X_i]` (or of `1 - X_i` when complemented) against the product of marginals.
    Cylinder {
        subset: Vec<usize>,
        complemented: bool,
        #[serde(with = "serde_rational")]
        joint: BigRational,
        #[serde(with = "serde_rational")]
        product: BigRational,
    },
    /// Up-sets `A` of `{0,1}^I` and `B` of `{0,1}^J` with `Cov[1_A, 1_B]` as stated.
    UpSets {
        part_i: Vec<usize>,
        part_j: Vec<usize>,
        up_set_a: Vec<Bits>,
        up_set_b: Vec<Bits>,
        #[serde(with = "serde_rational")]
        covariance: BigRational,
    },
    /// Law of `X_I` given `X_J = b` fails to lie below the law given `X_J = a`, with `a <= b`.
    Regression {
        conditioned: Vec<usize>,
        a: Bits,
        b: Bits,
        down_set: DominanceCertificate,
    },
    /// No distance-one monotone coupling between the laws given `a` and `a'`.
    Covering {
        conditioned: Vec<usize>,
        a: Bits,
        a_prime: Bits,
        cut: InfeasibilityCut,
    },
    /// A certificate for the conditional law given `given`; indices refer to the original variables.
    Conditional {
        given: Assignment,
        inner: Box<Certificate>,
    },
    /// Rayleigh difference `dF/dz_i * dF/dz_j - F * d2F/dz_i dz_j` at `point`.
    Rayleigh {
        i: usize,
        j: usize,
        #[serde(with = "serde_rational_vec")]
        point: Vec<BigRational>,
        #[serde(with = "serde_rational")]
        difference: BigRational,
    },
}

impl NotionReport {
    pub(crate) fn new(
        notion: Notion,
        verdict: Verdict,
        certificate: Option<Certificate>,
        stats: WorkStats,
    ) -> Self {
        NotionReport {
            notion,
            verdict,
            certificate,
            stats,
        }
    }

    /// `Holds` or `NoViolationFound`.
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Holds | Verdict::NoViolationFound)
    }

    /// Recomputes the certificate from the raw measure; failing verdicts also
    /// require the certificate to exhibit an actual violation.
    pub fn certificate_verifies(&self, m: &ExplicitMeasure) -> bool {
        match (&self.certificate, self.verdict) {
            (None, Verdict::Fails | Verdict::ViolationFound) => false,
            (None, _) => true,
            (Some(c), Verdict::Fails | Verdict::ViolationFound) => {
                c.reproduces(m) && c.is_violation()
            }
            (Some(c), _) => c.reproduces(m),
        }
    }
}

impl Certificate {
    /// Whether the quoted quantities constitute a violation of the notion.
    pub fn is_violation(&self) -> bool {
        match self {
            Certificate::Covariance { covariance, .. } | Certificate::UpSets { covariance, .. } => {
                *covariance > BigRational::zero()
            }
            Certificate::Cylinder { joint, product, .. } => joint > product,
            Certificate::Regression { down_set, .. } => down_set.lower_mass < down_set.upper_mass,
            Certificate::Covering { cut, .. } => cut.source_mass > cut.neighbour_mass,
            Certificate::Conditional { inner, .. } => inner.is_violation(),
            Certificate::Rayleigh { difference, .. } => *difference < BigRational::zero(),
        }
    }

    /// Recomputes every quoted quantity from `m` through the public measure operations.
    pub fn reproduces(&self, m: &ExplicitMeasure) -> bool {
        let n = m.n();
        match self {
            Certificate::Covariance { i, j, covariance } => {
                let Ok(both) = Assignment::new(vec![*i, *j], vec![true, true]) else {
                    return false;
                };
                let (Ok(pij), Ok(pi), Ok(pj)) = (
                    m.probability(&both),
                    m.probability(&Assignment::single(*i, true)),
                    m.probability(&Assignment::single(*j, true)),
                ) else {
                    return false;
                };
                pij - pi * pj == *covariance
            }
            Certificate::Cylinder {
                subset,
                complemented,
                joint,
                product,
            } => {
                let value = !*complemented;
                let Ok(event) = Assignment::new(subset.clone(), vec![value; subset.len()]) else {
                    return false;
                };
                let Ok(p) = m.probability(&event) else {
                    return false;
                };
                let mut prod = BigRational::one();
                for &i in subset {
                    match m.probability(&Assignment::single(i, value)) {
                        Ok(q) => prod *= q,
                        Err(_) => return false,
                    }
                }
                p == *joint && prod == *product
            }
            Certificate::UpSets {
                part_i,
                part_j,
                up_set_a,
                up_set_b,
                covariance,
            } => {
                let (ki, kj) = (part_i.len(), part_j.len());
                if ki == 0 || kj == 0 || part_i.iter().any(|i| part_j.contains(i)) {
                    return false;
                }
                if !part_i.windows(2).all(|w| w[0] < w[1])
                    || !part_j.windows(2).all(|w| w[0] < w[1])
                {
                    return false;
                }
                if up_set_a.iter().any(|p| p.width != ki) || up_set_b.iter().any(|p| p.width != kj)
                {
                    return false;
                }
                let a: Vec<u32> = up_set_a.iter().map(|b| b.value).collect();
                let b: Vec<u32> = up_set_b.iter().map(|b| b.value).collect();
                if !upset::is_up_closed(&a, ki) || !upset::is_up_closed(&b, kj) {
                    return false;
                }
                let (Ok(mi), Ok(mj)) = (m.marginal(part_i), m.marginal(part_j)) else {
                    return false;
                };
                let mask_i = bits::mask_of(n, part_i);
                let mask_j = bits::mask_of(n, part_j);
                let pa: BigRational = a.iter().map(|&x| mi.mass(x)).sum();
                let pb: BigRational = b.iter().map(|&y| mj.mass(y)).sum();
                let pab: BigRational = m
                    .atoms()
                    .filter(|(x, _)| {
                        a.contains(&bits::compress(*x, mask_i))
                            && b.contains(&bits::compress(*x, mask_j))
                    })
                    .map(|(_, p)| p)
                    .sum();
                pab - pa * pb == *covariance
            }
            Certificate::Regression {
                conditioned,
                a,
                b,
                down_set,
            } => {
                if a.width != conditioned.len()
                    || b.width != conditioned.len()
                    || !bits::leq(a.value, b.value)
                {
                    return false;
                }
                let (Ok(ga), Ok(gb)) =
                    (assignment_of(conditioned, a), assignment_of(conditioned, b))
                else {
                    return false;
                };
                let (Ok(upper), Ok(lower)) = (m.condition(&ga), m.condition(&gb)) else {
                    return false;
                };
                down_set.reproduces(&lower, &upper)
            }
            Certificate::Covering {
                conditioned,
                a,
                a_prime,
                cut,
            } => {
                if a.width != conditioned.len()
                    || a_prime.width != conditioned.len()
                    || !bits::leq(a_prime.value, a.value)
                    || (a.value ^ a_prime.value).count_ones() != 1
                {
                    return false;
                }
                let (Ok(ga), Ok(gp)) = (
                    assignment_of(conditioned, a),
                    assignment_of(conditioned, a_prime),
                ) else {
                    return false;
                };
                let (Ok(lower), Ok(upper)) = (m.condition(&ga), m.condition(&gp)) else {
                    return false;
                };
                cut.reproduces(&lower, &upper)
            }
            Certificate::Conditional { given, inner } => {
                let Ok(cond) = m.condition(given) else {
                    return false;
                };
                let (mask, _) = given.masks(n);
                let remaining = bits::indices_of(n, bits::full_mask(n) & !mask);
                match inner.relabel(&remaining) {
                    Some(local) => local.reproduces(&cond),
                    None => false,
                }
            }
            Certificate::Rayleigh {
                i,
                j,
                point,
                difference,
            } => {
                let poly = GeneratingPolynomial::from_measure(m);
                point.len() == n
                    && *i >= 1
                    && i < j
                    && *j <= n
                    && poly.rayleigh_difference(*i, *j, point) == *difference
            }
        }
    }

    /// Maps original variable indices to positions within `remaining` (1-based).
    fn relabel(&self, remaining: &[usize]) -> Option<Certificate> {
        let local = |i: usize| remaining.iter().position(|&r| r == i).map(|p| p + 1);
        let locals = |v: &[usize]| v.iter().map(|&i| local(i)).collect::<Option<Vec<_>>>();
        Some(match self {
            Certificate::UpSets {
                part_i,
                part_j,
                up_set_a,
                up_set_b,
                covariance,
            } => Certificate::UpSets {
                part_i: locals(part_i)?,
                part_j: locals(part_j)?,
                up_set_a: up_set_a.clone(),
                up_set_b: up_set_b.clone(),
                covariance: covariance.clone(),
            },
            _ => return None,
        })
    }

    /// Inverse of [`relabel`](Self::relabel): positions within `remaining` become original indices.
    pub(crate) fn globalize(self, remaining: &[usize]) -> Certificate {
        let map = |v: Vec<usize>| v.into_iter().map(|p| remaining[p - 1]).collect();
        match self {
            Certificate::UpSets {
                part_i,
                part_j,
                up_set_a,
                up_set_b,
                covariance,
            } => Certificate::UpSets {
                part_i: map(part_i),
                part_j: map(part_j),
                up_set_a,
                up_set_b,
                covariance,
            },
            other => other,
        }
    }
}

fn assignment_of(indices: &[usize], values: &Bits) -> crate::error::Result<Assignment> {
    Assignment::new(
        indices.to_vec(),
        (1..=values.width).map(|i| values.get(i)).collect(),
    )
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Covariance { i, j, covariance } => write!(f, "Cov[X{i}, X{j}] = {covariance}"),
            Certificate::Cylinder { subset, complemented, joint, product } => {
                let what = if *complemented { "1-X" } else { "X" };
                write!(f, "S = {subset:?}: E[prod {what}_i] = {joint} vs product of marginals {product}")
            }
            Certificate::UpSets { part_i, part_j, up_set_a, up_set_b, covariance } => write!(
                f,
                "I = {part_i:?}, J = {part_j:?}: up-sets A = {{{}}}, B = {{{}}} have Cov = {covariance}",
                join(up_set_a),
                join(up_set_b)
            ),
            Certificate::Regression { conditioned, a, b, down_set } => write!(
                f,
                "J = {conditioned:?}, a = {a}, b = {b}: down-closed M of {} points has Pr[M | b] = {} < Pr[M | a] = {}",
                down_set.down_set.len(),
                down_set.lower_mass,
                down_set.upper_mass
            ),
            Certificate::Covering { conditioned, a, a_prime, cut } => write!(
                f,
                "I = {conditioned:?}, a = {a}, a' = {a_prime}: atoms {{{}}} of mass {} reach only {{{}}} of mass {}",
                join(&cut.sources),
                cut.source_mass,
                join(&cut.neighbours),
                cut.neighbour_mass
            ),
            Certificate::Conditional { given, inner } => write!(f, "given {given}: {inner}"),
            Certificate::Rayleigh { i, j, point, difference } => {
                let z: Vec<String> = point.iter().map(|v| v.to_string()).collect();
                write!(f, "Delta_{i}{j}({}) = {difference}", z.join(", "))
            }
        }
    }
}

fn join(points: &[Bits]) -> String {
    points
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Nonempty proper subsets of `[n]` as masks, ordered lexicographically by their index lists.
pub(crate) fn subsets_lex(n: usize, min: usize, max: usize) -> Vec<u32> {
    let mut sets: Vec<(Vec<usize>, u32)> = (1..bits::full_mask(n))
        .filter(|m| (min..=max).contains(&(m.count_ones() as usize)))
        .map(|m| (bits::indices_of(n, m), m))
        .collect();
    sets.sort();
    sets.into_iter().map(|(_, m)| m).collect()
}

/// Runs the requested notions in order.
pub fn check_all(
    m: &ExplicitMeasure,
    notions: &[Notion],
) -> crate::error::Result<Vec<NotionReport>> {
    notions
        .iter()
        .map(|notion| match notion {
            Notion::PairwiseNC => check_pairwise_nc(m),
            Notion::CylinderDep => check_cylinder(m),
            Notion::NegAssociation => check_neg_association(m),
            Notion::NegRegression => check_neg_regression(m),
            Notion::CondNegAssociation => check_cna(m),
            Notion::StochasticCovering => check_stochastic_covering(m),
            Notion::RayleighFalsifier => rayleigh_falsify(m, &default_rayleigh_grid(m.n())),
        })
        .collect()
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::testutil;
    use proptest::prelude::*;

    fn holds(reports: &[NotionReport], notion: Notion) -> bool {
        reports
            .iter()
            .find(|r| r.notion == notion)
            .is_some_and(NotionReport::passed)
    }

    fn implications(m: &ExplicitMeasure) -> std::result::Result<(), TestCaseError> {
        let reports = check_all(m, &Notion::ALL).unwrap();
        for r in &reports {
            prop_assert!(
                r.certificate_verifies(m),
                "{:?} certificate does not verify",
                r.notion
            );
        }
        let h = |n| holds(&reports, n);
        use Notion::*;
        prop_assert!(!h(StochasticCovering) || h(NegRegression));
        prop_assert!(!h(NegRegression) || h(CylinderDep));
        prop_assert!(!h(CylinderDep) || h(PairwiseNC));
        prop_assert!(!h(NegAssociation) || h(CylinderDep));
        prop_assert!(!h(CondNegAssociation) || (h(NegAssociation) && h(NegRegression)));
        Ok(())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hierarchy_on_arbitrary_measures(m in testutil::measure(4)) {
            implications(&m)?;
        }

        #[test]
        fn strongly_rayleigh_families_pass_everything(m in testutil::strongly_rayleigh(5)) {
            let reports = check_all(&m, &Notion::ALL).unwrap();
            for r in &reports {
                prop_assert!(r.passed(), "{:?} failed with {:?}", r.notion, r.certificate);
            }
        }
    }
}
