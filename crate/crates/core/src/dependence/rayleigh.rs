//! Numeric falsification of the strong Rayleigh property.
//!
//! For a multi-affine `F`, write `F = A + z_i B + z_j C + z_i z_j D` with
//! `A, B, C, D` free of `z_i, z_j`. Then the Rayleigh difference
//! `dF/dz_i * dF/dz_j - F * d2F/dz_i dz_j` equals `BC - AD`. A negative value at
//! any real point refutes the property; the absence of one proves nothing.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Certificate, Notion, NotionReport, Verdict, WorkStats};
use crate::bits;
use crate::error::{Error, Result};
use crate::measure::ExplicitMeasure;
use crate::rational::{int, rat};

const RANDOM_GRID_SEED: u64 = 0x5eed_0001;
const RANDOM_GRID_POINTS: usize = 1000;

/// `F(z) = E[prod_j z_j^{X_j}]`, with coefficients equal to the atom masses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingPolynomial {
    n: usize,
    coefficients: BTreeMap<u32, BigRational>,
}

impl GeneratingPolynomial {
    pub fn from_measure(m: &ExplicitMeasure) -> Self {
        GeneratingPolynomial {
            n: m.n(),
            coefficients: m.atoms().map(|(x, p)| (x, p.clone())).collect(),
        }
    }

    pub fn coefficient(&self, x: u32) -> BigRational {
        self.coefficients
            .get(&x)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Sum of `c_x * prod z_k` over monomials containing every variable of `required`,
    /// with those variables dropped from the product.
    fn evaluate_reduced(&self, required: u32, z: &[BigRational]) -> BigRational {
        let n = self.n;
        self.coefficients
            .iter()
            .filter(|(x, _)| *x & required == required)
            .map(|(x, c)| {
                (1..=n)
                    .filter(|&k| bits::get(*x & !required, n, k))
                    .fold(c.clone(), |acc, k| acc * &z[k - 1])
            })
            .sum()
    }

    pub fn evaluate(&self, z: &[BigRational]) -> BigRational {
        self.evaluate_reduced(0, z)
    }

    pub fn derivative(&self, i: usize, z: &[BigRational]) -> BigRational {
        self.evaluate_reduced(bits::var_bit(self.n, i), z)
    }

    pub fn second_derivative(&self, i: usize, j: usize, z: &[BigRational]) -> BigRational {
        if i == j {
            return BigRational::zero();
        }
        self.evaluate_reduced(bits::var_bit(self.n, i) | bits::var_bit(self.n, j), z)
    }

    /// `dF/dz_i * dF/dz_j - F * d2F/dz_i dz_j`, straight from the definition.
    pub fn rayleigh_difference(&self, i: usize, j: usize, z: &[BigRational]) -> BigRational {
        self.derivative(i, z) * self.derivative(j, z)
            - self.evaluate(z) * self.second_derivative(i, j, z)
    }
}

/// `{0, 1, -1, 2, -2}^n` for `n <= 5` (origin first), otherwise 1000 seeded points with
/// coordinates in `{-2, -7/4, ..., 2}`.
pub fn default_rayleigh_grid(n: usize) -> Vec<Vec<BigRational>> {
    if n <= 5 {
        let values = [int(0), int(1), int(-1), int(2), int(-2)];
        let count = values.len().pow(n as u32);
        (0..count)
            .map(|mut code| {
                let mut point = vec![BigRational::zero(); n];
                for k in (0..n).rev() {
                    point[k] = values[code % values.len()].clone();
                    code /= values.len();
                }
                point
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_GRID_SEED);
        (0..RANDOM_GRID_POINTS)
            .map(|_| (0..n).map(|_| rat(rng.gen_range(-8..=8), 4)).collect())
            .collect()
    }
}

/// Evaluates every Rayleigh difference on `grid`; reports the first negative one.
pub fn rayleigh_falsify(m: &ExplicitMeasure, grid: &[Vec<BigRational>]) -> Result<NotionReport> {
    let n = m.n();
    if let Some(bad) = grid.iter().find(|z| z.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    let mut stats = WorkStats::default();
    let atoms: Vec<(u32, &BigRational)> = m.atoms().collect();
    for z in grid {
        stats.points_evaluated += 1;
        let zero_mask = (1..=n)
            .filter(|&k| z[k - 1].is_zero())
            .fold(0u32, |acc, k| acc | bits::var_bit(n, k));
        // product of the nonzero coordinates in each monomial's support
        let products: Vec<BigRational> = atoms
            .iter()
            .map(|(x, c)| {
                (1..=n)
                    .filter(|&k| bits::get(*x & !zero_mask, n, k))
                    .fold((*c).clone(), |acc, k| acc * &z[k - 1])
            })
            .collect();
        for i in 1..=n {
            for j in (i + 1)..=n {
                stats.pairs_checked += 1;
                let (bi, bj) = (bits::var_bit(n, i), bits::var_bit(n, j));
                let mut parts = [
                    BigRational::zero(),
                    BigRational::zero(),
                    BigRational::zero(),
                    BigRational::zero(),
                ];
                for ((x, _), prod) in atoms.iter().zip(&products) {
                    if x & zero_mask & !(bi | bj) != 0 {
                        continue;
                    }
                    let mut value = prod.clone();
                    for (b, k) in [(bi, i), (bj, j)] {
                        if x & b != 0 && zero_mask & b == 0 {
                            value /= &z[k - 1];
                        }
                    }
                    let slot = usize::from(x & bi != 0) | (usize::from(x & bj != 0) << 1);
                    parts[slot] += value;
                }
                let [a, b, c, d] = parts;
                let difference = &b * &c - &a * &d;
                if difference < BigRational::zero() {
                    let cert = Certificate::Rayleigh {
                        i,
                        j,
                        point: z.clone(),
                        difference,
                    };
                    return Ok(NotionReport::new(
                        Notion::RayleighFalsifier,
                        Verdict::ViolationFound,
                        Some(cert),
                        stats,
                    ));
                }
            }
        }
    }
    Ok(NotionReport::new(
        Notion::RayleighFalsifier,
        Verdict::NoViolationFound,
        None,
        stats,
    ))
}
