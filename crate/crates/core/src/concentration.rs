//! Tail bounds `e^{-t^2/(2n)}` (and `e^{-2t^2/n}` for monotone `f`) against exact tails,
//! plus the exponential-moment steps of their proof.
//!
//! Probabilities and differences are exact; only the final exponentials are doubles, and
//! every comparison allows a relative slack of [`TOLERANCE`].

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::MartingaleTree;
use crate::measure::{ExplicitMeasure, TestFunction};
use crate::rational::{rat, serde_rational, to_f64};

pub const TOLERANCE: f64 = 1e-12;

/// `value <= bound` up to the relative tolerance.
pub fn within(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + TOLERANCE)
}

pub fn theorem_bound(n: usize, t: &BigRational, monotone: bool) -> f64 {
    let t = to_f64(t);
    let n = n as f64;
    if monotone {
        (-2.0 * t * t / n).exp()
    } else {
        (-t * t / (2.0 * n)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Upper,
    Lower,
}

/// `Pr[f >= mu + t]` or `Pr[f <= mu - t]`, exactly.
pub fn exact_tail(
    m: &ExplicitMeasure,
    f: &TestFunction,
    t: &BigRational,
    side: TailSide,
) -> Result<BigRational> {
    let mu = m.expectation(f)?;
    Ok(tail_given_mean(m, f, &mu, t, side))
}

fn tail_given_mean(
    m: &ExplicitMeasure,
    f: &TestFunction,
    mu: &BigRational,
    t: &BigRational,
    side: TailSide,
) -> BigRational {
    let upper = mu + t;
    let lower = mu - t;
    m.atoms()
        .filter(|(x, _)| match side {
            TailSide::Upper => *f.value(*x) >= upper,
            TailSide::Lower => *f.value(*x) <= lower,
        })
        .map(|(_, p)| p)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    #[serde(with = "serde_rational")]
    pub t: BigRational,
    #[serde(with = "serde_rational")]
    pub upper_exact: BigRational,
    #[serde(with = "serde_rational")]
    pub lower_exact: BigRational,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone_bound: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub mu: BigRational,
    pub monotone: bool,
    pub rows: Vec<TailRow>,
    pub verdict: bool,
}

impl TailReport {
    pub fn first_failure(&self) -> Option<&TailRow> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,upper_exact,lower_exact,bound,monotone_bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:e},{},{}\n",
                r.t,
                r.upper_exact,
                r.lower_exact,
                r.bound,
                r.monotone_bound
                    .map(|b| format!("{b:e}"))
                    .unwrap_or_default(),
                r.pass
            ));
        }
        out
    }
}

/// Quarter steps from 0 up to the width of the range of `f`.
pub fn default_t_grid(f: &TestFunction) -> Vec<BigRational> {
    let (lo, hi) = f.range();
    let width = hi - lo;
    let mut grid = Vec::new();
    let mut k = 0;
    loop {
        let t = rat(k, 4);
        if t > width {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid
}

/// Compares both exact tails with the applicable bound at every `t` (sorted ascending).
pub fn verify_theorem(
    m: &ExplicitMeasure,
    f: &TestFunction,
    t_grid: &[BigRational],
) -> Result<TailReport> {
    let mu = m.expectation(f)?;
    if let Some(t) = t_grid.iter().find(|t| **t < BigRational::zero()) {
        return Err(Error::InvalidParameter(format!("negative deviation {t}")));
    }
    let mut grid = t_grid.to_vec();
    grid.sort();
    grid.dedup();
    let n = m.n();
    let monotone = f.is_monotone();
    let rows: Vec<TailRow> = grid
        .into_iter()
        .map(|t| {
            let upper_exact = tail_given_mean(m, f, &mu, &t, TailSide::Upper);
            let lower_exact = tail_given_mean(m, f, &mu, &t, TailSide::Lower);
            let bound = theorem_bound(n, &t, false);
            let monotone_bound = monotone.then(|| theorem_bound(n, &t, true));
            let applicable = monotone_bound.unwrap_or(bound);
            let pass = within(to_f64(&upper_exact), applicable)
                && within(to_f64(&lower_exact), applicable);
            TailRow {
                t,
                upper_exact,
                lower_exact,
                bound,
                monotone_bound,
                pass,
            }
        })
        .collect();
    let verdict = rows.iter().all(|r| r.pass);
    Ok(TailReport {
        n,
        mu,
        monotone,
        rows,
        verdict,
    })
}

fn exp_step(lambda: f64, to: &BigRational, from: &BigRational) -> f64 {
    (lambda * to_f64(&(to - from))).exp()
}

/// `E[e^{lambda (Y_{k+1} - Y_k)} | node]` at a node with two live branches.
pub fn node_exponential_moment(tree: &MartingaleTree, node: usize, lambda: f64) -> Result<f64> {
    let nd = tree.node(node);
    let [Some(c0), Some(c1)] = nd.children else {
        return Err(Error::NodeIsLeaf);
    };
    let p0 = to_f64(nd.p0.as_ref().expect("internal node"));
    let p1 = to_f64(nd.p1.as_ref().expect("internal node"));
    Ok(p0 * exp_step(lambda, &tree.node(c0).y, &nd.y)
        + p1 * exp_step(lambda, &tree.node(c1).y, &nd.y))
}

/// Hoeffding's lemma at a node: `e^{lambda^2 (beta - alpha)^2 / 8}`.
pub fn hoeffding_bound(tree: &MartingaleTree, node: usize, lambda: f64) -> f64 {
    let gap = to_f64(&tree.node(node).gap());
    (lambda * lambda * gap * gap / 8.0).exp()
}

/// `E[e^{lambda (Y_n - Y_0)}]`, folded up the tree one conditional step at a time.
pub fn chain_exponential_moment(tree: &MartingaleTree, lambda: f64) -> f64 {
    let nodes = tree.nodes();
    let mut value = vec![1.0f64; nodes.len()];
    for id in (0..nodes.len()).rev() {
        let nd = &nodes[id];
        if nd.is_leaf() {
            continue;
        }
        value[id] = nd
            .children
            .iter()
            .zip([&nd.p0, &nd.p1])
            .filter_map(|(c, p)| c.map(|c| (c, p)))
            .map(|(c, p)| {
                to_f64(p.as_ref().expect("internal node"))
                    * exp_step(lambda, &nodes[c].y, &nd.y)
                    * value[c]
            })
            .sum();
    }
    value[0]
}

/// `sum_x m(x) e^{lambda (f(x) - mu)}`, computed straight from the atoms.
pub fn leaf_sum_moment(m: &ExplicitMeasure, f: &TestFunction, lambda: f64) -> Result<f64> {
    let mu = m.expectation(f)?;
    Ok(m.atoms()
        .map(|(x, p)| to_f64(p) * exp_step(lambda, f.value(x), &mu))
        .sum())
}

/// `e^{n lambda^2 / 2}`, or `e^{n lambda^2 / 8}` for monotone `f`.
pub fn chain_bound(n: usize, lambda: f64, monotone: bool) -> f64 {
    chain_exponent(n, lambda, monotone).exp()
}

fn chain_exponent(n: usize, lambda: f64, monotone: bool) -> f64 {
    let denom = if monotone { 8.0 } else { 2.0 };
    n as f64 * lambda * lambda / denom
}

/// The Markov step `chain_bound / e^{lambda t}`, combined in the exponent.
pub fn markov_bound(n: usize, t: f64, lambda: f64, monotone: bool) -> f64 {
    (chain_exponent(n, lambda, monotone) - lambda * t).exp()
}

/// The minimizing `lambda`: `t/n`, or `4t/n` for monotone `f`.
pub fn optimal_lambda(n: usize, t: f64, monotone: bool) -> f64 {
    if monotone {
        4.0 * t / n as f64
    } else {
        t / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::build_adaptive_tree;
    use crate::measure::{family_independent, family_nand};
    use crate::rational::int;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn bound_values() {
        assert_eq!(theorem_bound(7, &int(0), false), 1.0);
        assert_eq!(theorem_bound(7, &int(0), true), 1.0);
        assert!(close(
            theorem_bound(3, &rat(1, 4), true),
            (-1.0f64 / 24.0).exp()
        ));
        assert!(close(
            theorem_bound(3, &rat(1, 4), false),
            (-1.0f64 / 96.0).exp()
        ));
        assert!((theorem_bound(3, &rat(1, 4), true) - 0.959189).abs() < 1e-6);
        assert!((theorem_bound(3, &rat(1, 4), false) - 0.989637).abs() < 1e-6);
    }

    #[test]
    fn nand3_tails() {
        let m = family_nand(3).unwrap();
        let f = TestFunction::sum(3);
        assert_eq!(
            exact_tail(&m, &f, &rat(1, 4), TailSide::Upper).unwrap(),
            rat(3, 4)
        );
        assert_eq!(
            exact_tail(&m, &f, &rat(1, 4), TailSide::Lower).unwrap(),
            rat(1, 4)
        );
        let c = TestFunction::constant(3, int(5));
        assert!(exact_tail(&m, &c, &rat(1, 8), TailSide::Upper)
            .unwrap()
            .is_zero());
        assert!(exact_tail(&m, &c, &rat(1, 8), TailSide::Lower)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn nand3_theorem_rows() {
        let m = family_nand(3).unwrap();
        let f = TestFunction::sum(3);
        let r = verify_theorem(&m, &f, &[int(1), int(0), rat(1, 4), rat(1, 2)]).unwrap();
        assert!(r.verdict);
        assert_eq!(r.mu, rat(7, 4));
        assert_eq!(r.rows[0].t, int(0));
        assert_eq!(r.rows[1].upper_exact, rat(3, 4));
        assert!(r.rows[1].monotone_bound.is_some());
        assert_eq!(r.to_csv().lines().count(), 5);
    }

    #[test]
    fn binomial_upper_tail() {
        let m = family_independent(&vec![rat(1, 2); 4]).unwrap();
        let f = TestFunction::sum(4);
        assert_eq!(
            exact_tail(&m, &f, &int(2), TailSide::Upper).unwrap(),
            rat(1, 16)
        );
        let r = verify_theorem(&m, &f, &default_t_grid(&f)).unwrap();
        assert!(r.verdict);
        assert_eq!(r.rows.len(), 17);
    }

    #[test]
    fn two_point_node_moment() {
        let m = family_independent(&[rat(1, 2)]).unwrap();
        let f = TestFunction::linear(&[int(1)]).unwrap();
        let tree = build_adaptive_tree(&m, &f).unwrap();
        let v = node_exponential_moment(&tree, 0, 1.0).unwrap();
        assert!(close(v, 0.5f64.cosh()));
        assert!(v <= (1.0f64 / 8.0).exp());
        assert_eq!(node_exponential_moment(&tree, 0, 0.0).unwrap(), 1.0);
        assert!(matches!(
            node_exponential_moment(&tree, 1, 1.0),
            Err(Error::NodeIsLeaf)
        ));
    }

    #[test]
    fn nand3_root_moment() {
        let m = family_nand(3).unwrap();
        let tree = build_adaptive_tree(&m, &TestFunction::sum(3)).unwrap();
        let v = node_exponential_moment(&tree, 0, 2.0).unwrap();
        assert!(close(v, 0.5f64.cosh()));
        assert!(v <= 0.5f64.exp());
    }

    #[test]
    fn chain_matches_leaf_sum() {
        let m = family_nand(3).unwrap();
        let f = TestFunction::sum(3);
        let tree = build_adaptive_tree(&m, &f).unwrap();
        assert_eq!(chain_exponential_moment(&tree, 0.0), 1.0);
        let v = chain_exponential_moment(&tree, 1.0);
        assert!(close(v, leaf_sum_moment(&m, &f, 1.0).unwrap()));
        assert!(v <= (3.0f64 / 8.0).exp());
    }

    #[test]
    fn markov_step_reproduces_bound() {
        for (n, t) in [(3usize, 0.25f64), (10, 2.0), (5, 3.5)] {
            let tr = BigRational::from_float(t).unwrap();
            let plain = markov_bound(n, t, optimal_lambda(n, t, false), false);
            assert!(close(plain, theorem_bound(n, &tr, false)));
            let mono = markov_bound(n, t, optimal_lambda(n, t, true), true);
            assert!(close(mono, theorem_bound(n, &tr, true)));
        }
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::martingale::build_adaptive_tree;
    use crate::testutil;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn moments_and_tails(
            (m, f) in testutil::strongly_rayleigh(5).prop_flat_map(|m| { let n = m.n(); (Just(m), testutil::function(n)) }),
            lambda in prop::sample::select(vec![-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0]),
        ) {
            let tree = build_adaptive_tree(&m, &f).unwrap();
            for id in 0..tree.len() {
                if let Ok(v) = node_exponential_moment(&tree, id, lambda) {
                    prop_assert!(within(v, hoeffding_bound(&tree, id, lambda)));
                }
            }
            let chain = chain_exponential_moment(&tree, lambda);
            let leaves = leaf_sum_moment(&m, &f, lambda).unwrap();
            prop_assert!((chain - leaves).abs() <= TOLERANCE * leaves);
            prop_assert!(within(chain, chain_bound(m.n(), lambda, f.is_monotone())));
            let report = verify_theorem(&m, &f, &default_t_grid(&f)).unwrap();
            prop_assert!(report.verdict, "{:?}", report.first_failure());
            for w in report.rows.windows(2) {
                prop_assert!(w[1].upper_exact <= w[0].upper_exact);
            }
        }

        #[test]
        fn markov_minimum_is_at_t_over_n(n in 1usize..20, t in 0.1f64..10.0, monotone in any::<bool>()) {
            let best = optimal_lambda(n, t, monotone);
            let at_best = markov_bound(n, t, best, monotone);
            for k in 1..=40 {
                let lambda = best * k as f64 / 20.0;
                prop_assert!(at_best <= markov_bound(n, t, lambda, monotone) * (1.0 + TOLERANCE));
            }
        }
    }
}
