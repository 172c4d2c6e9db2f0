//! Points of the Boolean cube `{0,1}^n`.
//!
//! A point is packed into a `u32` with variable `i` (1-based) stored at bit
//! `n - i`, so integer order on points coincides with lexicographic order on
//! the bitstrings `x1 x2 ... xn`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard ceiling imposed by the `u32` packing.
pub const MAX_WIDTH: usize = 30;

#[inline]
pub fn var_bit(n: usize, i: usize) -> u32 {
    debug_assert!(i >= 1 && i <= n);
    1u32 << (n - i)
}

#[inline]
pub fn get(x: u32, n: usize, i: usize) -> bool {
    x & var_bit(n, i) != 0
}

#[inline]
pub fn full_mask(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        u32::MAX >> (32 - n)
    }
}

#[inline]
pub fn leq(x: u32, y: u32) -> bool {
    x & !y == 0
}

#[inline]
pub fn weight(x: u32) -> u32 {
    x.count_ones()
}

/// Mask of the given 1-based variables.
pub fn mask_of(n: usize, indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, &i| m | var_bit(n, i))
}

/// 1-based variables present in `mask`, ascending.
pub fn indices_of(n: usize, mask: u32) -> Vec<usize> {
    (1..=n).filter(|&i| get(mask, n, i)).collect()
}

/// Extracts the bits of `x` selected by `keep`, preserving variable order.
/// The result is a point of width `keep.count_ones()`.
#[inline]
pub fn compress(x: u32, keep: u32) -> u32 {
    let mut out = 0u32;
    let mut k = keep;
    // walk from the most significant selected bit down
    while k != 0 {
        let top = 31 - k.leading_zeros();
        out = (out << 1) | ((x >> top) & 1);
        k &= !(1 << top);
    }
    out
}

/// Inverse of [`compress`]: spreads the low bits of `packed` onto the positions of `keep`.
#[inline]
pub fn expand(packed: u32, keep: u32) -> u32 {
    let width = keep.count_ones();
    let mut out = 0u32;
    let mut k = keep;
    let mut pos = width;
    while k != 0 {
        let top = 31 - k.leading_zeros();
        pos -= 1;
        if (packed >> pos) & 1 == 1 {
            out |= 1 << top;
        }
        k &= !(1 << top);
    }
    out
}

pub fn format_point(x: u32, n: usize) -> String {
    (1..=n)
        .map(|i| if get(x, n, i) { '1' } else { '0' })
        .collect()
}

pub fn parse_point(s: &str) -> Result<(u32, usize)> {
    let width = s.len();
    if width > MAX_WIDTH {
        return Err(Error::parse(s, format!("more than {MAX_WIDTH} bits")));
    }
    let mut x = 0u32;
    for c in s.chars() {
        x <<= 1;
        match c {
            '0' => {}
            '1' => x |= 1,
            _ => return Err(Error::parse(s, "bitstrings may only contain 0 and 1")),
        }
    }
    Ok((x, width))
}

/// A point together with its width; serializes as its bitstring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits {
    pub value: u32,
    pub width: usize,
}

impl Bits {
    pub fn new(value: u32, width: usize) -> Self {
        debug_assert!(value & !full_mask(width) == 0);
        Bits { value, width }
    }

    pub fn get(&self, i: usize) -> bool {
        get(self.value, self.width, i)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_point(self.value, self.width))
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (value, width) = parse_point(s)?;
        Ok(Bits { value, width })
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}
