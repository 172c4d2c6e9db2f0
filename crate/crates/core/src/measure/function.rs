use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Assignment;
use crate::bits;
use crate::error::{Error, Result};
use crate::limits;
use crate::rational::{parse_rational, rat};

/// A function `f: {0,1}^n -> Q` with Lipschitz constant 1, optionally monotone.
///
/// Both properties are verified on construction over all single-bit flips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestFunction {
    n: usize,
    values: Vec<BigRational>,
    monotone: bool,
}

impl TestFunction {
    pub fn new(n: usize, values: Vec<BigRational>, monotone: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        limits::ensure("test function", n, limits::MEASURE)?;
        if values.len() != 1usize << n {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for n = {n}, got {}",
                1usize << n,
                values.len()
            )));
        }
        let one = BigRational::one();
        for x in 0..(1u32 << n) {
            for i in 1..=n {
                let b = bits::var_bit(n, i);
                if x & b != 0 {
                    continue;
                }
                let lo = &values[x as usize];
                let hi = &values[(x | b) as usize];
                let change = hi - lo;
                if change.abs() > one {
                    return Err(Error::NotLipschitz {
                        point: bits::format_point(x, n),
                        bit: i,
                        change,
                    });
                }
                if monotone && change.is_negative() {
                    return Err(Error::NotMonotone {
                        from: bits::format_point(x, n),
                        to: bits::format_point(x | b, n),
                    });
                }
            }
        }
        Ok(TestFunction {
            n,
            values,
            monotone,
        })
    }

    pub fn from_fn(n: usize, monotone: bool, f: impl Fn(u32) -> BigRational) -> Result<Self> {
        let values = (0..(1u32 << n)).map(f).collect();
        TestFunction::new(n, values, monotone)
    }

    /// `x1 + ... + xn`.
    pub fn sum(n: usize) -> Self {
        TestFunction::from_fn(n, true, |x| {
            BigRational::from_integer(x.count_ones().into())
        })
        .expect("sum is monotone and 1-Lipschitz")
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        TestFunction::from_fn(n, true, |_| c.clone()).expect("constants are monotone")
    }

    /// Parity of the bits.
    pub fn parity(n: usize) -> Self {
        TestFunction::from_fn(n, false, |x| {
            BigRational::from_integer((x.count_ones() % 2).into())
        })
        .expect("parity is 1-Lipschitz")
    }

    /// Indicator that at least one bit is set.
    pub fn or(n: usize) -> Self {
        TestFunction::from_fn(n, true, |x| {
            if x != 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .expect("or is monotone and 1-Lipschitz")
    }

    /// Indicator that every bit is set.
    pub fn and(n: usize) -> Self {
        let full = bits::full_mask(n);
        TestFunction::from_fn(n, true, |x| {
            if x == full {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .expect("and is monotone and 1-Lipschitz")
    }

    /// `sum_i w_i x_i`; requires `|w_i| <= 1`. Monotone when every weight is nonnegative.
    pub fn linear(weights: &[BigRational]) -> Result<Self> {
        let n = weights.len();
        let monotone = weights.iter().all(|w| !w.is_negative());
        TestFunction::from_fn(n, monotone, |x| {
            (1..=n)
                .filter(|&i| bits::get(x, n, i))
                .map(|i| weights[i - 1].clone())
                .sum()
        })
    }

    /// A seeded random 1-Lipschitz function.
    ///
    /// Monotone draws are maxima of nonnegative linear forms with weights in `[0,1]`;
    /// the others are scaled minima of shifted Hamming distances to random anchors,
    /// or linear forms with weights in `[-1,1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, monotone: bool, rng: &mut R) -> Self {
        let full = bits::full_mask(n);
        let quarter = |rng: &mut R, lo: i64, hi: i64| rat(rng.gen_range(lo..=hi), 4);
        if monotone {
            let pieces = rng.gen_range(1..=3);
            let forms: Vec<(BigRational, Vec<BigRational>)> = (0..pieces)
                .map(|_| {
                    (
                        quarter(rng, 0, 8),
                        (0..n).map(|_| quarter(rng, 0, 4)).collect(),
                    )
                })
                .collect();
            TestFunction::from_fn(n, true, |x| {
                forms
                    .iter()
                    .map(|(c, w)| {
                        c + (1..=n)
                            .filter(|&i| bits::get(x, n, i))
                            .map(|i| &w[i - 1])
                            .sum::<BigRational>()
                    })
                    .max()
                    .unwrap()
            })
            .expect("max of monotone 1-Lipschitz forms")
        } else if rng.gen_bool(0.5) {
            let weights: Vec<BigRational> = (0..n).map(|_| quarter(rng, -4, 4)).collect();
            TestFunction::linear(&weights).expect("weights are bounded by 1")
        } else {
            let anchors: Vec<(u32, BigRational)> = (0..rng.gen_range(1..=3))
                .map(|_| (rng.gen_range(0..=full), quarter(rng, 0, 8)))
                .collect();
            let scale = quarter(rng, 1, 4);
            TestFunction::from_fn(n, false, |x| {
                let d = anchors
                    .iter()
                    .map(|(z, c)| c + BigRational::from_integer((x ^ z).count_ones().into()))
                    .min()
                    .unwrap();
                &scale * d
            })
            .expect("scaled min of distances is 1-Lipschitz")
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: u32) -> &BigRational {
        &self.values[x as usize]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn lipschitz_constant(&self) -> BigRational {
        BigRational::one()
    }

    /// Smallest and largest value over the whole cube.
    pub fn range(&self) -> (BigRational, BigRational) {
        let lo = self.values.iter().min().unwrap().clone();
        let hi = self.values.iter().max().unwrap().clone();
        (lo, hi)
    }

    /// `f` with the variables of `on` fixed, as a function of the remaining ones in ascending order.
    pub fn restrict(&self, on: &Assignment) -> Result<TestFunction> {
        on.validate(self.n)?;
        let (mask, vals) = on.masks(self.n);
        let keep = bits::full_mask(self.n) & !mask;
        let width = keep.count_ones() as usize;
        if width == 0 {
            return Err(Error::InvalidParameter(
                "restriction leaves no variables".into(),
            ));
        }
        let values = (0..(1u32 << width))
            .map(|y| self.value(bits::expand(y, keep) | vals).clone())
            .collect();
        Ok(TestFunction {
            n: width,
            values,
            monotone: self.monotone,
        })
    }

    /// Pointwise sum; the result is only kept when it remains 1-Lipschitz.
    pub fn try_add(&self, other: &TestFunction) -> Result<TestFunction> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        TestFunction::new(self.n, values, self.monotone && other.monotone)
    }

    pub fn to_file(&self) -> FunctionFile {
        FunctionFile {
            n: self.n,
            monotone: self.monotone,
            values: (0..(1u32 << self.n))
                .map(|x| (bits::format_point(x, self.n), self.value(x).to_string()))
                .collect(),
        }
    }

    pub fn from_file(file: &FunctionFile) -> Result<Self> {
        let n = file.n;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        limits::ensure("test function", n, limits::MEASURE)?;
        let mut values = vec![None; 1usize << n];
        for (s, v) in &file.values {
            let (x, width) = bits::parse_point(s)?;
            if width != n {
                return Err(Error::BadWidth {
                    point: s.clone(),
                    expected: n,
                    got: width,
                });
            }
            values[x as usize] = Some(parse_rational(v)?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(x, v)| {
                v.ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "missing value at {}",
                        bits::format_point(x as u32, n)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TestFunction::new(n, values, file.monotone)
    }
}

/// `{"n": 2, "monotone": true, "values": {"00": "0", "01": "1", ...}}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionFile {
    pub n: usize,
    #[serde(default)]
    pub monotone: bool,
    pub values: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Assignment;
    use crate::rational::int;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_lipschitz_and_false_monotone_claims() {
        let double = TestFunction::from_fn(2, true, |x| int(2 * x.count_ones() as i64));
        assert!(matches!(double, Err(Error::NotLipschitz { .. })));
        let neg = TestFunction::from_fn(2, true, |x| int(-(x.count_ones() as i64)));
        assert!(matches!(neg, Err(Error::NotMonotone { .. })));
        assert!(TestFunction::from_fn(2, false, |x| int(-(x.count_ones() as i64))).is_ok());
    }

    #[test]
    fn restriction_relabels_remaining_variables() {
        let f = TestFunction::linear(&[int(1), rat(1, 2), rat(1, 4)]).unwrap();
        let g = f.restrict(&Assignment::single(2, true)).unwrap();
        assert_eq!(g.n(), 2);
        // g(x1, x3) = x1 + 1/2 + x3/4
        assert_eq!(g.value(0b00), &rat(1, 2));
        assert_eq!(g.value(0b10), &rat(3, 2));
        assert_eq!(g.value(0b01), &rat(3, 4));
    }

    #[test]
    fn random_functions_satisfy_their_declarations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for k in 0..20 {
                let f = TestFunction::random(n, k % 2 == 0, &mut rng);
                // re-validate through the checked constructor
                TestFunction::new(n, f.values().to_vec(), f.is_monotone()).unwrap();
            }
        }
    }

    #[test]
    fn file_roundtrip() {
        let f = TestFunction::parity(3);
        let back = TestFunction::from_file(&f.to_file()).unwrap();
        assert_eq!(back, f);
    }
}
