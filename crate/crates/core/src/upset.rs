//! Enumeration of up-sets of the Boolean cube `{0,1}^k` for small `k`.
//!
//! An up-set is encoded as a `u64` whose bit `x` is set when point `x` belongs
//! to it, so `k <= 6`. The count of up-sets is the Dedekind number of `k`.

use crate::bits;

pub const MAX_UPSET_WIDTH: usize = 6;

/// All up-sets of `{0,1}^k`, in a fixed deterministic order starting with the empty set.
pub fn upsets(k: usize) -> Vec<u64> {
    assert!(
        k <= MAX_UPSET_WIDTH,
        "up-set enumeration limited to k <= {MAX_UPSET_WIDTH}"
    );
    if k == 0 {
        return vec![0, 1];
    }
    let smaller = upsets(k - 1);
    let half = 1usize << (k - 1);
    let mut out = Vec::new();
    // Split on the last coordinate: points x0 and x1 come from a point x of the
    // smaller cube; the slices must satisfy U0 <= U1.
    for &u0 in &smaller {
        for &u1 in &smaller {
            if u0 & !u1 != 0 {
                continue;
            }
            let mut set = 0u64;
            for x in 0..half {
                if u0 >> x & 1 == 1 {
                    set |= 1 << (2 * x);
                }
                if u1 >> x & 1 == 1 {
                    set |= 1 << (2 * x + 1);
                }
            }
            out.push(set);
        }
    }
    out
}

/// Up-sets other than the empty set and the whole cube.
pub fn nontrivial_upsets(k: usize) -> Vec<u64> {
    let full = if k == 6 {
        u64::MAX
    } else {
        (1u64 << (1usize << k)) - 1
    };
    upsets(k)
        .into_iter()
        .filter(|&u| u != 0 && u != full)
        .collect()
}

pub fn members(set: u64, k: usize) -> Vec<u32> {
    (0..(1u32 << k)).filter(|&x| set >> x & 1 == 1).collect()
}

pub fn contains(set: u64, x: u32) -> bool {
    set >> x & 1 == 1
}

/// Whether `points` (of width `k`) is closed under raising single coordinates.
pub fn is_up_closed(points: &[u32], k: usize) -> bool {
    let set: std::collections::HashSet<u32> = points.iter().copied().collect();
    points.iter().all(|&x| {
        (1..=k).all(|i| {
            let b = bits::var_bit(k, i);
            x & b != 0 || set.contains(&(x | b))
        })
    })
}
