use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{Certificate, Notion, NotionReport, Verdict, WorkStats};
use crate::bits;
use crate::error::Result;
use crate::limits;
use crate::measure::ExplicitMeasure;
use crate::rational::scale_to_integers;

/// `Cov[X_i, X_j] <= 0` for every pair. The report always names the pair with the
/// largest covariance (the first such pair in `(i, j)` order on ties).
pub fn check_pairwise_nc(m: &ExplicitMeasure) -> Result<NotionReport> {
    let n = m.n();
    let mut stats = WorkStats::default();
    if n < 2 {
        return Ok(NotionReport::new(
            Notion::PairwiseNC,
            Verdict::Holds,
            None,
            stats,
        ));
    }
    let means: Vec<BigRational> = (1..=n).map(|i| m.mean(i)).collect();
    let mut worst: Option<(usize, usize, BigRational)> = None;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let both = bits::var_bit(n, i) | bits::var_bit(n, j);
            let joint: BigRational = m
                .atoms()
                .filter(|(x, _)| x & both == both)
                .map(|(_, p)| p)
                .sum();
            let cov = joint - &means[i - 1] * &means[j - 1];
            stats.pairs_checked += 1;
            if worst.as_ref().is_none_or(|(_, _, w)| cov > *w) {
                worst = Some((i, j, cov));
            }
        }
    }
    let (i, j, covariance) = worst.expect("n >= 2");
    let verdict = if covariance > BigRational::from_integer(0.into()) {
        Verdict::Fails
    } else {
        Verdict::Holds
    };
    Ok(NotionReport::new(
        Notion::PairwiseNC,
        verdict,
        Some(Certificate::Covariance { i, j, covariance }),
        stats,
    ))
}

/// For every `S` with `|S| >= 2`: `E[prod_S X_i] <= prod_S E[X_i]` and the same for `1 - X_i`.
///
/// Masses are scaled to integers so the `2^n` superset sums stay cheap.
pub fn check_cylinder(m: &ExplicitMeasure) -> Result<NotionReport> {
    let n = m.n();
    limits::ensure("cylinder dependence", n, limits::CYLINDER)?;
    let mut stats = WorkStats::default();
    let dense = m.dense();
    let (ints, scale) = scale_to_integers(&dense);
    let size = 1usize << n;
    // sup[S] = scale * Pr[X_S = 1], sub[T] = scale * Pr[X outside T = 0]
    let mut sup = ints.clone();
    let mut sub = ints;
    for b in 0..n {
        let bit = 1usize << b;
        for s in 0..size {
            if s & bit == 0 {
                let hi = sup[s | bit].clone();
                sup[s] += hi;
            } else {
                let lo = sub[s ^ bit].clone();
                sub[s] += lo;
            }
        }
    }
    let ones: Vec<BigInt> = (1..=n)
        .map(|i| sup[bits::var_bit(n, i) as usize].clone())
        .collect();
    let zeros: Vec<BigInt> = ones.iter().map(|c| &scale - c).collect();
    let full = bits::full_mask(n) as usize;
    let mut scale_pow = vec![BigInt::one()];
    for k in 1..=n {
        let next = &scale_pow[k - 1] * &scale;
        scale_pow.push(next);
    }
    for s in 1..size {
        let k = s.count_ones() as usize;
        if k < 2 {
            continue;
        }
        stats.subsets_checked += 1;
        let members = bits::indices_of(n, s as u32);
        for complemented in [false, true] {
            let (joint, marg) = if complemented {
                (&sub[full ^ s], &zeros)
            } else {
                (&sup[s], &ones)
            };
            // joint/scale <= prod(marg_i/scale)  <=>  joint * scale^(k-1) <= prod(marg_i)
            let product: BigInt = members.iter().map(|&i| marg[i - 1].clone()).product();
            if joint * &scale_pow[k - 1] > product {
                let cert = Certificate::Cylinder {
                    subset: members.clone(),
                    complemented,
                    joint: BigRational::new(joint.clone(), scale.clone()),
                    product: BigRational::new(product, scale_pow[k].clone()),
                };
                return Ok(NotionReport::new(
                    Notion::CylinderDep,
                    Verdict::Fails,
                    Some(cert),
                    stats,
                ));
            }
        }
    }
    Ok(NotionReport::new(
        Notion::CylinderDep,
        Verdict::Holds,
        None,
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{
        family_anti_pair, family_hadamard, family_independent, family_nand, family_pos_pair,
    };
    use crate::rational::rat;

    #[test]
    fn anti_pair_worst_covariance() {
        let r = check_pairwise_nc(&family_anti_pair()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(
            r.certificate,
            Some(Certificate::Covariance {
                i: 1,
                j: 2,
                covariance: rat(-1, 4)
            })
        );
    }

    #[test]
    fn pos_pair_fails_pairwise() {
        let m = family_pos_pair();
        let r = check_pairwise_nc(&m).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(
            r.certificate,
            Some(Certificate::Covariance {
                i: 1,
                j: 2,
                covariance: rat(1, 4)
            })
        );
        assert!(r.certificate_verifies(&m));
    }

    #[test]
    fn hadamard_covariances_vanish() {
        let r = check_pairwise_nc(&family_hadamard(4).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        match r.certificate {
            Some(Certificate::Covariance { covariance, .. }) => assert_eq!(covariance, rat(0, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cylinder_examples() {
        let nand = family_nand(3).unwrap();
        assert_eq!(check_cylinder(&nand).unwrap().verdict, Verdict::Holds);

        let pos = family_pos_pair();
        let r = check_cylinder(&pos).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(
            r.certificate,
            Some(Certificate::Cylinder {
                subset: vec![1, 2],
                complemented: false,
                joint: rat(1, 2),
                product: rat(1, 4)
            })
        );
        assert!(r.certificate_verifies(&pos));

        let ind = family_independent(&[rat(1, 3), rat(1, 5), rat(3, 4)]).unwrap();
        assert_eq!(check_cylinder(&ind).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn hadamard_fails_cylinder_on_the_triple() {
        let m = family_hadamard(4).unwrap();
        let r = check_cylinder(&m).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.certificate_verifies(&m));
    }
}
