//! Negative regression and stochastic covering, both decided by exact monotone
//! transport between conditional laws.

use num_rational::BigRational;

use super::{subsets_lex, Certificate, Notion, NotionReport, Verdict, WorkStats};
use crate::bits::{self, Bits};
use crate::coupling::{transport, CouplingFailure, Transport};
use crate::error::Result;
use crate::limits;
use crate::measure::ExplicitMeasure;

/// Unnormalized laws of `X_I` given each assignment of `X_J`, indexed by the packed assignment.
struct Conditionals {
    width_i: usize,
    width_j: usize,
    laws: Vec<Vec<(u32, BigRational)>>,
    totals: Vec<BigRational>,
}

impl Conditionals {
    fn new(m: &ExplicitMeasure, jmask: u32) -> Self {
        let n = m.n();
        let imask = bits::full_mask(n) & !jmask;
        let width_j = jmask.count_ones() as usize;
        let mut laws = vec![Vec::new(); 1 << width_j];
        for (x, p) in m.atoms() {
            laws[bits::compress(x, jmask) as usize].push((bits::compress(x, imask), p.clone()));
        }
        for law in &mut laws {
            law.sort_by_key(|(x, _)| *x);
        }
        let totals = laws
            .iter()
            .map(|l| l.iter().map(|(_, p)| p).sum())
            .collect();
        Conditionals {
            width_i: imask.count_ones() as usize,
            width_j,
            laws,
            totals,
        }
    }

    fn positive(&self, a: u32) -> bool {
        !self.laws[a as usize].is_empty()
    }

    /// Whether the two conditional laws coincide after normalization.
    fn same_law(&self, a: u32, b: u32) -> bool {
        let (la, lb) = (&self.laws[a as usize], &self.laws[b as usize]);
        let (ta, tb) = (&self.totals[a as usize], &self.totals[b as usize]);
        la.len() == lb.len()
            && la
                .iter()
                .zip(lb)
                .all(|((x, p), (y, q))| x == y && p * tb == q * ta)
    }
}

/// For every `J`, `I = [n] \ J` and `a <= b` in `{0,1}^J` of positive probability,
/// the law of `X_I` given `X_J = a` must dominate the law given `X_J = b`.
///
/// Covering pairs are always tested; a longer pair is tested directly only when no
/// chain of covering pairs with positive probability connects it.
pub fn check_neg_regression(m: &ExplicitMeasure) -> Result<NotionReport> {
    let n = m.n();
    limits::ensure("negative regression", n, limits::REGRESSION)?;
    let mut stats = WorkStats::default();
    if n >= 2 {
        for jmask in subsets_lex(n, 1, n - 1) {
            let cond = Conditionals::new(m, jmask);
            let kj = cond.width_j;
            let reach = up_reachability(&cond);
            for a in 0..(1u32 << kj) {
                if !cond.positive(a) {
                    continue;
                }
                for b in (a + 1)..(1u32 << kj) {
                    if !bits::leq(a, b) || !cond.positive(b) {
                        continue;
                    }
                    let covering = (a ^ b).count_ones() == 1;
                    if !covering && reach[a as usize][b as usize] {
                        continue;
                    }
                    stats.pairs_checked += 1;
                    if cond.same_law(a, b) {
                        continue;
                    }
                    stats.flows_run += 1;
                    let outcome = transport(
                        cond.width_i,
                        &cond.laws[b as usize],
                        &cond.laws[a as usize],
                        false,
                        false,
                    );
                    if let Transport::Failed(CouplingFailure::NotDominated(down_set)) = outcome {
                        let cert = Certificate::Regression {
                            conditioned: bits::indices_of(n, jmask),
                            a: Bits::new(a, kj),
                            b: Bits::new(b, kj),
                            down_set,
                        };
                        return Ok(NotionReport::new(
                            Notion::NegRegression,
                            Verdict::Fails,
                            Some(cert),
                            stats,
                        ));
                    }
                }
            }
        }
    }
    Ok(NotionReport::new(
        Notion::NegRegression,
        Verdict::Holds,
        None,
        stats,
    ))
}

/// `reach[a][b]`: `b` is reachable from `a` by raising one coordinate at a time
/// through assignments of positive probability.
fn up_reachability(cond: &Conditionals) -> Vec<Vec<bool>> {
    let size = 1usize << cond.width_j;
    let mut reach = vec![vec![false; size]; size];
    // process from the top so that successors are complete
    for a in (0..size).rev() {
        if !cond.positive(a as u32) {
            continue;
        }
        reach[a][a] = true;
        for bit in 0..cond.width_j {
            let c = a | (1 << bit);
            if c != a && cond.positive(c as u32) {
                let (lo, hi) = reach.split_at_mut(c);
                let (row_a, row_c) = (&mut lo[a], &hi[0]);
                for (r, &v) in row_a.iter_mut().zip(row_c) {
                    *r |= v;
                }
            }
        }
    }
    reach
}

/// For every conditioning set, every pair `a' <= a` at distance one with positive
/// probability needs a coupling of the two conditionals that only moves mass up by at most
/// one coordinate.
pub fn check_stochastic_covering(m: &ExplicitMeasure) -> Result<NotionReport> {
    let n = m.n();
    limits::ensure("stochastic covering", n, limits::COVERING)?;
    let mut stats = WorkStats::default();
    if n >= 2 {
        for kmask in subsets_lex(n, 1, n - 1) {
            let cond = Conditionals::new(m, kmask);
            let kk = cond.width_j;
            for lower_assignment in 0..(1u32 << kk) {
                if !cond.positive(lower_assignment) {
                    continue;
                }
                for bit in (0..kk).rev() {
                    let raised = lower_assignment | (1 << bit);
                    if raised == lower_assignment || !cond.positive(raised) {
                        continue;
                    }
                    stats.pairs_checked += 1;
                    if cond.same_law(lower_assignment, raised) {
                        continue;
                    }
                    stats.flows_run += 1;
                    let outcome = transport(
                        cond.width_i,
                        &cond.laws[raised as usize],
                        &cond.laws[lower_assignment as usize],
                        true,
                        false,
                    );
                    if let Transport::Failed(CouplingFailure::Infeasible(cut)) = outcome {
                        let cert = Certificate::Covering {
                            conditioned: bits::indices_of(n, kmask),
                            a: Bits::new(raised, kk),
                            a_prime: Bits::new(lower_assignment, kk),
                            cut,
                        };
                        return Ok(NotionReport::new(
                            Notion::StochasticCovering,
                            Verdict::Fails,
                            Some(cert),
                            stats,
                        ));
                    }
                }
            }
        }
    }
    Ok(NotionReport::new(
        Notion::StochasticCovering,
        Verdict::Holds,
        None,
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{
        family_anti_pair, family_conditioned_sum, family_hadamard, family_independent, family_nand,
        family_pos_pair,
    };
    use crate::rational::rat;

    #[test]
    fn nand_satisfies_regression() {
        for n in 3..=6 {
            let r = check_neg_regression(&family_nand(n).unwrap()).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "nand({n})");
        }
    }

    #[test]
    fn pos_pair_fails_regression_at_first_variable() {
        let m = family_pos_pair();
        let r = check_neg_regression(&m).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        match r.certificate.as_ref().unwrap() {
            Certificate::Regression {
                conditioned, a, b, ..
            } => {
                assert_eq!(conditioned, &vec![1]);
                assert_eq!(a.to_string(), "0");
                assert_eq!(b.to_string(), "1");
            }
            other => panic!("{other:?}"),
        }
        assert!(r.certificate_verifies(&m));
    }

    #[test]
    fn conditioned_sum_satisfies_regression() {
        let m = family_conditioned_sum(&[rat(1, 2), rat(1, 2), rat(1, 2)], 1, 2).unwrap();
        assert_eq!(check_neg_regression(&m).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn hadamard_fails_regression() {
        let m = family_hadamard(4).unwrap();
        let r = check_neg_regression(&m).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.certificate_verifies(&m));
    }

    #[test]
    fn covering_examples() {
        let nand = family_nand(3).unwrap();
        let r = check_stochastic_covering(&nand).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        match r.certificate.as_ref().unwrap() {
            Certificate::Covering {
                conditioned,
                a,
                a_prime,
                cut,
            } => {
                assert_eq!(conditioned, &vec![1]);
                assert_eq!(
                    (a.to_string().as_str(), a_prime.to_string().as_str()),
                    ("1", "0")
                );
                assert!(cut.sources.contains(&"00".parse().unwrap()));
            }
            other => panic!("{other:?}"),
        }
        assert!(r.certificate_verifies(&nand));

        let ind = family_independent(&[rat(1, 3), rat(1, 2), rat(2, 5)]).unwrap();
        assert_eq!(
            check_stochastic_covering(&ind).unwrap().verdict,
            Verdict::Holds
        );
        assert_eq!(
            check_stochastic_covering(&family_anti_pair())
                .unwrap()
                .verdict,
            Verdict::Holds
        );
    }

    #[test]
    fn zero_probability_gap_breaks_chains() {
        // Pr[X1 X2 = 10] = Pr[X1 X2 = 01] = 0, so 00 and 11 are not linked by covering pairs.
        let m =
            ExplicitMeasure::from_bitstrings(3, [("000", rat(1, 2)), ("111", rat(1, 2))]).unwrap();
        let cond = Conditionals::new(&m, bits::mask_of(3, &[1, 2]));
        let reach = up_reachability(&cond);
        assert!(reach[0][0] && reach[3][3]);
        assert!(!reach[0][3]);

        let chained = family_independent(&[rat(1, 2), rat(1, 2), rat(1, 2)]).unwrap();
        let cond = Conditionals::new(&chained, bits::mask_of(3, &[1, 2]));
        assert!(up_reachability(&cond)[0][3]);

        let r = check_neg_regression(&m).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.certificate_verifies(&m));
    }
}
