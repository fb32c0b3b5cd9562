//! Multiplicity bounds from the genus formula.
//!
//! A reduced irreducible curve `C = (alpha, beta)` on a hyperelliptic surface
//! has geometric genus at least 1 and `K_S` is numerically trivial, so its
//! multiplicities at distinct points satisfy
//! `sum m_i (m_i - 1) <= C^2 = 2 alpha beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::DivisorClass;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveCandidate {
    pub cls: DivisorClass,
    pub mults: Vec<u32>,
}

fn defect(m: u32) -> i64 {
    let m = i64::from(m);
    m * (m - 1)
}

/// `2 alpha beta`, the budget available for `sum m_i (m_i - 1)`.
fn budget(cls: &DivisorClass) -> Result<i64> {
    cls.a
        .checked_mul(cls.b)
        .and_then(|x| x.checked_mul(2))
        .ok_or(Error::Overflow("genus budget"))
}

pub fn genus_admissible(c: &CurveCandidate) -> bool {
    let Ok(limit) = budget(&c.cls) else { return false };
    c.mults.iter().map(|&m| defect(m)).sum::<i64>() <= limit
}

/// Largest `m` with `m(m-1) <= 2 alpha beta`.
pub fn max_single_multiplicity(cls: &DivisorClass) -> Result<u32> {
    if cls.a < 1 || cls.b < 1 {
        return Err(Error::InvalidInput(format!("class {cls} must have positive coefficients")));
    }
    let limit = budget(cls)?;
    let mut m: u32 = 1;
    while defect(m + 1) <= limit {
        m += 1;
    }
    Ok(m)
}

/// All non-increasing vectors `m_1 >= ... >= m_r >= 0` with `1 <= m_1 <= cap`
/// that pass the genus bound, in ascending lexicographic order.
pub fn enumerate_admissible(cls: &DivisorClass, r: usize, cap: u32) -> Result<Vec<Vec<u32>>> {
    if r == 0 || cap == 0 {
        return Err(Error::InvalidInput("r and cap must be positive".into()));
    }
    let limit = budget(cls)?;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(cur: &mut Vec<u32>, r: usize, upper: u32, left: i64, out: &mut Vec<Vec<u32>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for m in 0..=upper {
            let d = defect(m);
            if d > left {
                break;
            }
            cur.push(m);
            rec(cur, r, m, left - d, out);
            cur.pop();
        }
    }
    for first in 1..=cap {
        let d = defect(first);
        if d > limit {
            break;
        }
        cur.clear();
        cur.push(first);
        rec(&mut cur, r, first, limit - d, &mut out);
    }
    Ok(out)
}
