//! Enumeration caps. `NEGDEP_MAX_N` replaces every default cap when set.

use crate::bits::MAX_WIDTH;
use crate::error::{Error, Result};

pub const MEASURE: usize = 20;
pub const CYLINDER: usize = 20;
pub const ASSOCIATION: usize = 8;
pub const REGRESSION: usize = 10;
pub const COVERING: usize = 10;
pub const TREE: usize = 12;

pub fn cap(default: usize) -> usize {
    match std::env::var("NEGDEP_MAX_N")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(v) => v.min(MAX_WIDTH),
        None => default,
    }
}

pub(crate) fn ensure(what: &'static str, n: usize, default: usize) -> Result<()> {
    let cap = cap(default);
    if n > cap {
        Err(Error::TooLarge { what, n, cap })
    } else {
        Ok(())
    }
}
