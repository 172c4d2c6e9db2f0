//! Negative association via up-set indicators.
//!
//! Monotone functions are nonnegative combinations of up-set indicators plus a
//! constant, so it suffices to test `Cov[1_A(X_I), 1_B(X_J)] <= 0` for up-sets.
//! Only complementary bipartitions are needed. For each up-set `B` on the
//! smaller side the worst `A` is a maximum-weight closure, found by a min cut.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{subsets_lex, Certificate, Notion, NotionReport, Verdict, WorkStats};
use crate::bits::{self, Bits};
use crate::error::Result;
use crate::flow::Network;
use crate::limits;
use crate::measure::{Assignment, ExplicitMeasure};
use crate::rational::scale_to_integers;
use crate::upset;

pub fn check_neg_association(m: &ExplicitMeasure) -> Result<NotionReport> {
    limits::ensure("negative association", m.n(), limits::ASSOCIATION)?;
    let mut stats = WorkStats::default();
    let found = na_violation(m.n(), &atom_list(m), &mut stats);
    Ok(match found {
        Some(cert) => NotionReport::new(Notion::NegAssociation, Verdict::Fails, Some(cert), stats),
        None => NotionReport::new(Notion::NegAssociation, Verdict::Holds, None, stats),
    })
}

/// Negative association of `m` and of every conditional on a partial assignment
/// of positive probability.
pub fn check_cna(m: &ExplicitMeasure) -> Result<NotionReport> {
    let n = m.n();
    limits::ensure("conditional negative association", n, limits::ASSOCIATION)?;
    let mut stats = WorkStats::default();
    let atoms = atom_list(m);
    let mut masks = vec![0u32];
    masks.extend(subsets_lex(n, 1, n.saturating_sub(2)));
    for mask in masks {
        let keep = bits::full_mask(n) & !mask;
        let width = keep.count_ones() as usize;
        let k = mask.count_ones() as usize;
        for a in 0..(1u32 << k) {
            let vals = bits::expand(a, mask);
            let local: Vec<(u32, BigRational)> = atoms
                .iter()
                .filter(|(x, _)| x & mask == vals)
                .map(|(x, p)| (bits::compress(*x, keep), p.clone()))
                .collect();
            if local.is_empty() {
                continue;
            }
            stats.conditionals_checked += 1;
            if let Some(cert) = na_violation(width, &local, &mut stats) {
                let remaining = bits::indices_of(n, keep);
                let cert = cert.globalize(&remaining);
                let cert = if mask == 0 {
                    cert
                } else {
                    Certificate::Conditional {
                        given: Assignment::from_mask(n, mask, vals),
                        inner: Box::new(cert),
                    }
                };
                return Ok(NotionReport::new(
                    Notion::CondNegAssociation,
                    Verdict::Fails,
                    Some(cert),
                    stats,
                ));
            }
        }
    }
    Ok(NotionReport::new(
        Notion::CondNegAssociation,
        Verdict::Holds,
        None,
        stats,
    ))
}

fn atom_list(m: &ExplicitMeasure) -> Vec<(u32, BigRational)> {
    m.atoms().map(|(x, p)| (x, p.clone())).collect()
}

/// Searches for up-sets with positive covariance in an unnormalized law on `{0,1}^n`.
/// Certificates use the local variable numbering `1..=n`.
fn na_violation(
    n: usize,
    atoms: &[(u32, BigRational)],
    stats: &mut WorkStats,
) -> Option<Certificate> {
    if n < 2 {
        return None;
    }
    let masses: Vec<BigRational> = atoms.iter().map(|(_, p)| p.clone()).collect();
    let (ints, _) = scale_to_integers(&masses);
    let scaled_total: BigInt = ints.iter().sum();
    for jmask in subsets_lex(n, 1, n / 2) {
        let imask = bits::full_mask(n) & !jmask;
        let (ki, kj) = (imask.count_ones() as usize, jmask.count_ones() as usize);
        // joint[x][y] = scaled mass of X_I = x, X_J = y
        let mut joint = vec![vec![BigInt::zero(); 1 << kj]; 1 << ki];
        for ((x, _), w) in atoms.iter().zip(&ints) {
            joint[bits::compress(*x, imask) as usize][bits::compress(*x, jmask) as usize] += w;
        }
        let row: Vec<BigInt> = joint.iter().map(|r| r.iter().sum()).collect();
        let col: Vec<BigInt> = (0..(1usize << kj))
            .map(|y| joint.iter().map(|r| &r[y]).sum())
            .collect();
        for b in upset::nontrivial_upsets(kj) {
            stats.pairs_checked += 1;
            let pb: BigInt = (0..(1usize << kj))
                .filter(|&y| upset::contains(b, y as u32))
                .map(|y| &col[y])
                .sum();
            // weight(x) * total^2 = total * joint(x, B) - row(x) * pb
            let weights: Vec<BigInt> = (0..(1usize << ki))
                .map(|x| {
                    let in_b: BigInt = (0..(1usize << kj))
                        .filter(|&y| upset::contains(b, y as u32))
                        .map(|y| &joint[x][y])
                        .sum();
                    &scaled_total * in_b - &row[x] * &pb
                })
                .collect();
            if weights.iter().all(|w| !w.is_positive()) {
                continue;
            }
            stats.flows_run += 1;
            let (value, closure) = max_weight_upset(ki, &weights);
            if value.is_positive() {
                // normalized covariance = value / scaled_total^2
                let covariance = BigRational::new(value, &scaled_total * &scaled_total);
                return Some(Certificate::UpSets {
                    part_i: bits::indices_of(n, imask),
                    part_j: bits::indices_of(n, jmask),
                    up_set_a: closure.into_iter().map(|x| Bits::new(x, ki)).collect(),
                    up_set_b: upset::members(b, kj)
                        .into_iter()
                        .map(|y| Bits::new(y, kj))
                        .collect(),
                    covariance,
                });
            }
        }
    }
    None
}

/// Maximum of `sum_{x in A} w(x)` over up-sets `A` of `{0,1}^k`, with a maximizer.
fn max_weight_upset(k: usize, weights: &[BigInt]) -> (BigInt, Vec<u32>) {
    let size = 1usize << k;
    let (s, t) = (size, size + 1);
    let mut net = Network::new(size + 2);
    let positive: BigInt = weights.iter().filter(|w| w.is_positive()).sum();
    let unbounded: BigInt = weights.iter().map(|w| w.abs()).sum::<BigInt>() + 1;
    for (x, w) in weights.iter().enumerate() {
        if w.is_positive() {
            net.add_edge(s, x, BigRational::from_integer(w.clone()));
        } else if w.is_negative() {
            net.add_edge(x, t, BigRational::from_integer(-w));
        }
        for i in 1..=k {
            let b = bits::var_bit(k, i) as usize;
            if x & b == 0 {
                net.add_edge(x, x | b, BigRational::from_integer(unbounded.clone()));
            }
        }
    }
    let sol = net.solve(s, t);
    debug_assert!(sol.value.is_integer());
    let value = positive - sol.value.to_integer();
    let closure = (0..size)
        .filter(|&x| sol.source_side[x])
        .map(|x| x as u32)
        .collect();
    (value, closure)
}
