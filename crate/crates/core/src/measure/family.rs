//! Named measure families and the fixed catalog of test measures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ExplicitMeasure;
use crate::bits;
use crate::error::{Error, Result};
use crate::limits;
use crate::rational::{parse_rational, rat};

/// `X2..Xn` i.i.d. fair bits and `X1 = 1 - X2 * ... * Xn`.
pub fn family_nand(n: usize) -> Result<ExplicitMeasure> {
    if n < 2 {
        return Err(Error::InvalidParameter("nand needs n >= 2".into()));
    }
    limits::ensure("nand", n, limits::MEASURE)?;
    let rest = n - 1;
    let mass = BigRational::new(BigInt::one(), BigInt::one() << rest);
    let atoms = (0..(1u32 << rest)).map(|g| {
        let x1 = if g == bits::full_mask(rest) { 0 } else { 1 };
        ((x1 << rest) | g, mass.clone())
    });
    ExplicitMeasure::new(n, atoms)
}

/// Independent bits with `Pr[X_i = 1] = p[i-1]`.
pub fn family_independent(p: &[BigRational]) -> Result<ExplicitMeasure> {
    let n = p.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "need at least one probability".into(),
        ));
    }
    limits::ensure("independent", n, limits::MEASURE)?;
    if let Some(bad) = p
        .iter()
        .find(|q| q.is_negative() || **q > BigRational::one())
    {
        return Err(Error::InvalidParameter(format!(
            "probability {bad} outside [0,1]"
        )));
    }
    ExplicitMeasure::new(n, product_atoms(p))
}

fn product_atoms(p: &[BigRational]) -> Vec<(u32, BigRational)> {
    let n = p.len();
    let mut atoms = vec![(0u32, BigRational::one())];
    for (k, q) in p.iter().enumerate() {
        let b = bits::var_bit(n, k + 1);
        let mut next = Vec::with_capacity(atoms.len() * 2);
        for (x, m) in atoms {
            let one = &m * q;
            let zero = &m * (BigRational::one() - q);
            if !zero.is_zero() {
                next.push((x, zero));
            }
            if !one.is_zero() {
                next.push((x | b, one));
            }
        }
        atoms = next;
    }
    atoms
}

/// Independent bits conditioned on `lo <= X1 + ... + Xn <= hi`.
///
/// Strongly Rayleigh when `hi - lo <= 1`; wider windows need not be.
pub fn family_conditioned_sum(p: &[BigRational], lo: usize, hi: usize) -> Result<ExplicitMeasure> {
    let base = family_independent(p)?;
    let weights = base
        .atoms()
        .filter(|(x, _)| (lo..=hi).contains(&(x.count_ones() as usize)))
        .map(|(x, m)| (x, m.clone()))
        .collect::<Vec<_>>();
    ExplicitMeasure::from_weights(base.n(), weights).map_err(|_| Error::EmptyConditioningEvent)
}

/// Indicators `B_{ij}` that ball `i` lands in bin `j`, each ball placed uniformly and
/// independently. Variable index is `(i - 1) * bins + j` (ball-major).
pub fn family_balls_bins(balls: usize, bins: usize) -> Result<ExplicitMeasure> {
    if balls == 0 || bins == 0 {
        return Err(Error::InvalidParameter(
            "balls and bins must be positive".into(),
        ));
    }
    let n = balls * bins;
    limits::ensure("balls and bins", n, limits::MEASURE)?;
    let outcomes = bins.pow(balls as u32);
    let mass = rat(1, outcomes as i64);
    let atoms = (0..outcomes).map(|mut code| {
        let mut x = 0u32;
        for ball in 0..balls {
            let bin = code % bins;
            code /= bins;
            x |= bits::var_bit(n, ball * bins + bin + 1);
        }
        (x, mass.clone())
    });
    ExplicitMeasure::new(n, atoms)
}

/// Uniform column of the Sylvester Hadamard matrix of the given order; rows `2..=order`
/// become `order - 1` pairwise independent fair bits via `(1 + h) / 2`.
pub fn family_hadamard(order: usize) -> Result<ExplicitMeasure> {
    if order < 2 || !order.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "hadamard order {order} is not a power of two >= 2"
        )));
    }
    let n = order - 1;
    limits::ensure("hadamard", n, limits::MEASURE)?;
    let mass = rat(1, order as i64);
    let atoms = (0..order).map(|col| {
        let x = (1..order).fold(0u32, |x, row| {
            if (row & col).count_ones() % 2 == 0 {
                x | bits::var_bit(n, row)
            } else {
                x
            }
        });
        (x, mass.clone())
    });
    ExplicitMeasure::new(n, atoms)
}

/// Uniform on `{01, 10}`.
pub fn family_anti_pair() -> ExplicitMeasure {
    ExplicitMeasure::new(2, [(0b01, rat(1, 2)), (0b10, rat(1, 2))]).expect("valid measure")
}

/// Uniform on `{00, 11}`.
pub fn family_pos_pair() -> ExplicitMeasure {
    ExplicitMeasure::new(2, [(0b00, rat(1, 2)), (0b11, rat(1, 2))]).expect("valid measure")
}

/// Parses a family spec such as `nand:5`, `indep:1/3,0.5`, `condsum:1/2x4:1:2`,
/// `balls:3:2`, `hadamard:4`, `anti` or `pos`. In probability lists `pxk` repeats `p`
/// `k` times.
pub fn parse_family_spec(spec: &str) -> Result<ExplicitMeasure> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let count = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::parse(s, "expected a nonnegative integer"))
    };
    let arity = |k: usize| -> Result<()> {
        if parts.len() == k + 1 {
            Ok(())
        } else {
            Err(Error::parse(
                spec,
                format!("{} takes {k} argument(s)", parts[0]),
            ))
        }
    };
    match parts[0] {
        "nand" => {
            arity(1)?;
            family_nand(count(parts[1])?)
        }
        "indep" => {
            arity(1)?;
            family_independent(&probability_list(parts[1])?)
        }
        "condsum" => {
            arity(3)?;
            family_conditioned_sum(
                &probability_list(parts[1])?,
                count(parts[2])?,
                count(parts[3])?,
            )
        }
        "balls" => {
            arity(2)?;
            family_balls_bins(count(parts[1])?, count(parts[2])?)
        }
        "hadamard" => {
            arity(1)?;
            family_hadamard(count(parts[1])?)
        }
        "anti" => {
            arity(0)?;
            Ok(family_anti_pair())
        }
        "pos" => {
            arity(0)?;
            Ok(family_pos_pair())
        }
        other => Err(Error::parse(
            other,
            "unknown family (expected nand, indep, condsum, balls, hadamard, anti or pos)",
        )),
    }
}

fn probability_list(list: &str) -> Result<Vec<BigRational>> {
    let mut out = Vec::new();
    for item in list.split(',') {
        match item.split_once('x') {
            Some((p, k)) => {
                let p = parse_rational(p)?;
                let k = k
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(item, "bad repeat count"))?;
                out.extend(std::iter::repeat_n(p, k));
            }
            None => out.push(parse_rational(item)?),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: String,
    pub measure: ExplicitMeasure,
}

/// The catalog of test measures used throughout the test suites.
pub fn zoo() -> Vec<ZooEntry> {
    let half = rat(1, 2);
    let mut out = Vec::new();
    let mut push = |name: String, measure: ExplicitMeasure| out.push(ZooEntry { name, measure });
    for n in 3..=8 {
        push(format!("nand:{n}"), family_nand(n).unwrap());
    }
    push(
        "indep:1/2,1/2".into(),
        family_independent(&[half.clone(), half.clone()]).unwrap(),
    );
    push(
        "indep:1/3,2/3,1/4".into(),
        family_independent(&[rat(1, 3), rat(2, 3), rat(1, 4)]).unwrap(),
    );
    push("anti".into(), family_anti_pair());
    push("pos".into(), family_pos_pair());
    push(
        "condsum:1/2x3:1:2".into(),
        family_conditioned_sum(&vec![half.clone(); 3], 1, 2).unwrap(),
    );
    push(
        "condsum:1/2x4:2:2".into(),
        family_conditioned_sum(&vec![half.clone(); 4], 2, 2).unwrap(),
    );
    push(
        "condsum:1/3,1/2,2/3,1/4,1/2:1:3".into(),
        family_conditioned_sum(
            &[rat(1, 3), half.clone(), rat(2, 3), rat(1, 4), half.clone()],
            1,
            3,
        )
        .unwrap(),
    );
    push(
        "condsum:2/3x6:2:3".into(),
        family_conditioned_sum(&vec![rat(2, 3); 6], 2, 3).unwrap(),
    );
    push(
        "condsum:1/2x8:3:5".into(),
        family_conditioned_sum(&vec![half; 8], 3, 5).unwrap(),
    );
    push("balls:2:2".into(), family_balls_bins(2, 2).unwrap());
    push("balls:3:2".into(), family_balls_bins(3, 2).unwrap());
    push("hadamard:4".into(), family_hadamard(4).unwrap());
    push("hadamard:8".into(), family_hadamard(8).unwrap());
    out
}
