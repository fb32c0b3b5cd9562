//! Exact linear-implication oracle over the rationals.
//!
//! [`entails`] decides whether every rational point satisfying a system of
//! linear constraints also satisfies a target inequality. A positive answer
//! carries a Farkas witness: non-negative multipliers whose combination of the
//! hypotheses reproduces the target's left-hand side and dominates its bound.
//! A negative answer carries an explicit rational counterexample. Both are
//! re-checked by plain arithmetic before being returned.
//!
//! Strict inequalities are handled with one shared slack `eps > 0` that is
//! maximised (capped at 1) by a two-phase simplex with Bland's rule.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Rationals serialize as decimal strings `"p"` or `"p/q"`.
pub mod rational_serde {
    use super::Rational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn to_string(q: &Rational) -> String {
        if q.is_integer() {
            q.numer().to_string()
        } else {
            format!("{}/{}", q.numer(), q.denom())
        }
    }

    pub fn parse(s: &str) -> Result<Rational, String> {
        let s = s.trim();
        let parse_int = |t: &str| t.trim().parse::<num_bigint::BigInt>().map_err(|e| e.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d == 0.into() {
                    return Err("zero denominator".into());
                }
                Ok(Rational::new(parse_int(n)?, d))
            }
            None => Ok(Rational::from_integer(parse_int(s)?)),
        }
    }

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(super::rat(n)),
            Raw::Str(s) => parse(&s).map_err(D::Error::custom),
        }
    }

    pub mod vec {
        use super::Rational;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "super")] Rational);

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let w: Vec<W> = v.iter().cloned().map(W).collect();
            w.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
}

/// `coeffs . x (relation) bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearConstraint {
    #[serde(with = "rational_serde::vec")]
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    #[serde(with = "rational_serde")]
    pub bound: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, bound: Rational) -> Self {
        LinearConstraint { coeffs, relation, bound }
    }

    pub fn from_ints(coeffs: &[i64], relation: Relation, bound: i64) -> Self {
        LinearConstraint::new(coeffs.iter().map(|&c| rat(c)).collect(), relation, rat(bound))
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().zip(x).fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let v = self.lhs(x);
        match self.relation {
            Relation::Ge => v >= self.bound,
            Relation::Gt => v > self.bound,
            Relation::Eq => v == self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearSystem {
    pub variables: Vec<String>,
    pub constraints: Vec<LinearConstraint>,
    pub target: LinearConstraint,
}

impl LinearSystem {
    /// Starts a system over the named variables; the target defaults to the
    /// trivially true `0 >= 0` until [`LinearSystem::entail`] sets it.
    pub fn over(variables: &[&str]) -> Self {
        let n = variables.len();
        LinearSystem {
            variables: variables.iter().map(|s| s.to_string()).collect(),
            constraints: Vec::new(),
            target: LinearConstraint::from_ints(&vec![0; n], Relation::Ge, 0),
        }
    }

    pub fn ge(mut self, coeffs: &[i64], bound: i64) -> Self {
        self.constraints.push(LinearConstraint::from_ints(coeffs, Relation::Ge, bound));
        self
    }

    pub fn gt(mut self, coeffs: &[i64], bound: i64) -> Self {
        self.constraints.push(LinearConstraint::from_ints(coeffs, Relation::Gt, bound));
        self
    }

    pub fn eq(mut self, coeffs: &[i64], bound: i64) -> Self {
        self.constraints.push(LinearConstraint::from_ints(coeffs, Relation::Eq, bound));
        self
    }

    /// `coeffs . x <= bound`, stored as `-coeffs . x >= -bound`.
    pub fn le(self, coeffs: &[i64], bound: i64) -> Self {
        let neg: Vec<i64> = coeffs.iter().map(|c| -c).collect();
        self.ge(&neg, -bound)
    }

    pub fn entail(mut self, coeffs: &[i64], relation: Relation, bound: i64) -> Self {
        self.target = LinearConstraint::from_ints(coeffs, relation, bound);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        if n == 0 {
            return Err(Error::InvalidInput("linear system needs at least one variable".into()));
        }
        for c in self.constraints.iter().chain(std::iter::once(&self.target)) {
            if c.coeffs.len() != n {
                return Err(Error::InvalidInput(format!(
                    "constraint has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        Ok(())
    }

    pub fn satisfies_constraints(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|c| c.holds(x))
    }
}

/// Multipliers `y_j` (one per constraint) with `sum y_j a_j = c`,
/// `y_j >= 0` on inequalities and `sum y_j b_j >= d`; for a strict target
/// either the bound gap or some strict multiplier is positive. An equality
/// target needs a second witness for the reversed inequality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarkasWitness {
    #[serde(with = "rational_serde::vec")]
    pub multipliers: Vec<Rational>,
    #[serde(with = "rational_serde::vec", default, skip_serializing_if = "Vec::is_empty")]
    pub reverse: Vec<Rational>,
}

fn check_one_side(sys: &LinearSystem, y: &[Rational], sign: i64) -> bool {
    if y.len() != sys.constraints.len() {
        return false;
    }
    let n = sys.variables.len();
    let mut combo = vec![Rational::zero(); n];
    let mut bound = Rational::zero();
    let mut strict_used = false;
    for (yj, c) in y.iter().zip(&sys.constraints) {
        match c.relation {
            Relation::Ge | Relation::Gt if yj.is_negative() => return false,
            Relation::Gt if yj.is_positive() => strict_used = true,
            _ => {}
        }
        for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
            *acc += yj * a;
        }
        bound += yj * &c.bound;
    }
    let s = rat(sign);
    let target: Vec<Rational> = sys.target.coeffs.iter().map(|c| c * &s).collect();
    let d = &sys.target.bound * &s;
    if combo != target {
        return false;
    }
    match sys.target.relation {
        Relation::Ge | Relation::Eq => bound >= d,
        Relation::Gt => bound > d || (bound == d && strict_used),
    }
}

impl FarkasWitness {
    /// Re-derives the target from the multipliers by direct arithmetic.
    pub fn verify(&self, sys: &LinearSystem) -> bool {
        if !check_one_side(sys, &self.multipliers, 1) {
            return false;
        }
        match sys.target.relation {
            Relation::Eq => check_one_side(sys, &self.reverse, -1),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Entailment {
    Valid { witness: FarkasWitness },
    /// The hypotheses are unsatisfiable.
    VacuouslyValid,
    CounterexampleFound {
        #[serde(with = "rational_serde::vec")]
        point: Vec<Rational>,
    },
}

impl Entailment {
    pub fn is_valid(&self) -> bool {
        matches!(self, Entailment::Valid { .. })
    }
}

// ---------------------------------------------------------------------------
// Simplex over non-negative variables.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Le,
    Ge,
    Eq,
}

struct Problem {
    nvars: usize,
    rows: Vec<(Vec<Rational>, Cmp, Rational)>,
    objective: Vec<Rational>,
}

enum Outcome {
    Optimal(Vec<Rational>, Rational),
    Unbounded,
    Infeasible,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    obj: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Loads `maximize cost . x` as the reduced-cost row.
    fn set_objective(&mut self, cost: &[Rational]) {
        let mut obj = vec![Rational::zero(); self.width + 1];
        for (o, c) in obj.iter_mut().zip(cost) {
            *o = -c.clone();
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() {
                let f = obj[b].clone();
                for (o, v) in obj.iter_mut().zip(&self.rows[i]) {
                    *o -= &f * v;
                }
            }
        }
        self.obj = obj;
    }

    /// Bland's rule iterations. Returns false on unboundedness.
    fn run(&mut self, allowed: &[bool]) -> bool {
        let rhs = self.width;
        loop {
            let Some(col) = (0..self.width).find(|&j| allowed[j] && self.obj[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col].is_positive() {
                    let ratio = &row[rhs] / &row[col];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, col),
            }
        }
    }
}

fn maximize(p: &Problem) -> Outcome {
    let n = p.nvars;
    let rows: Vec<(Vec<Rational>, Cmp, Rational)> = p
        .rows
        .iter()
        .map(|(a, cmp, b)| {
            if b.is_negative() {
                let flipped = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
                (a.iter().map(|x| -x).collect(), flipped, -b)
            } else {
                (a.clone(), *cmp, b.clone())
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
    let width = n + n_slack + n_art;
    let mut t = Tableau { rows: Vec::new(), obj: Vec::new(), basis: Vec::new(), width };
    let (mut si, mut ai) = (n, n + n_slack);
    for (a, cmp, b) in &rows {
        let mut row = vec![Rational::zero(); width + 1];
        row[..n].clone_from_slice(a);
        row[width] = b.clone();
        match cmp {
            Cmp::Le => {
                row[si] = Rational::one();
                t.basis.push(si);
                si += 1;
            }
            Cmp::Ge => {
                row[si] = -Rational::one();
                si += 1;
                row[ai] = Rational::one();
                t.basis.push(ai);
                ai += 1;
            }
            Cmp::Eq => {
                row[ai] = Rational::one();
                t.basis.push(ai);
                ai += 1;
            }
        }
        t.rows.push(row);
    }
    let is_art = |j: usize| j >= n + n_slack && j < width;

    if n_art > 0 {
        let mut cost = vec![Rational::zero(); width];
        for c in cost.iter_mut().skip(n + n_slack) {
            *c = -Rational::one();
        }
        t.set_objective(&cost);
        let all = vec![true; width];
        t.run(&all);
        if !t.obj[width].is_zero() {
            return Outcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if is_art(t.basis[i]) {
                match (0..n + n_slack).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    let mut cost = vec![Rational::zero(); width];
    cost[..n].clone_from_slice(&p.objective);
    t.set_objective(&cost);
    let allowed: Vec<bool> = (0..width).map(|j| !is_art(j)).collect();
    if !t.run(&allowed) {
        return Outcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][width].clone();
        }
    }
    let value = p.objective.iter().zip(&x).fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    Outcome::Optimal(x, value)
}

// ---------------------------------------------------------------------------
// Entailment.

/// Maximises a shared slack `eps <= 1` over the hypotheses (strict ones
/// tightened by `eps`) plus an optional violation row for the target.
/// Returns a point when the optimum has `eps > 0`.
fn strictly_feasible_point(
    sys: &LinearSystem,
    violate: Option<(&[Rational], &Rational, bool)>,
) -> Option<Vec<Rational>> {
    let n = sys.variables.len();
    // Columns: x+ (n), x- (n), eps.
    let width = 2 * n + 1;
    let eps = 2 * n;
    let split = |a: &[Rational]| {
        let mut row = vec![Rational::zero(); width];
        for (j, c) in a.iter().enumerate() {
            row[j] = c.clone();
            row[n + j] = -c.clone();
        }
        row
    };
    let mut rows = Vec::new();
    for c in &sys.constraints {
        let mut row = split(&c.coeffs);
        let cmp = match c.relation {
            Relation::Ge => Cmp::Ge,
            Relation::Gt => {
                row[eps] = -Rational::one();
                Cmp::Ge
            }
            Relation::Eq => Cmp::Eq,
        };
        rows.push((row, cmp, c.bound.clone()));
    }
    if let Some((coeffs, bound, target_strict)) = violate {
        // Violating `c.x >= d` means `c.x + eps <= d`; violating `c.x > d`
        // means `c.x <= d`.
        let mut row = split(coeffs);
        if !target_strict {
            row[eps] = Rational::one();
        }
        rows.push((row, Cmp::Le, bound.clone()));
    }
    let mut cap = vec![Rational::zero(); width];
    cap[eps] = Rational::one();
    rows.push((cap.clone(), Cmp::Le, Rational::one()));
    let problem = Problem { nvars: width, rows, objective: cap };
    match maximize(&problem) {
        Outcome::Optimal(x, value) if value.is_positive() => {
            Some((0..n).map(|j| &x[j] - &x[n + j]).collect())
        }
        _ => None,
    }
}

/// Solves for Farkas multipliers proving `sign * target`.
fn farkas_multipliers(sys: &LinearSystem, sign: i64) -> Option<Vec<Rational>> {
    let n = sys.variables.len();
    let m = sys.constraints.len();
    let s = rat(sign);
    let c: Vec<Rational> = sys.target.coeffs.iter().map(|x| x * &s).collect();
    let d = &sys.target.bound * &s;
    let strict_target = sys.target.relation == Relation::Gt;
    // Columns: y_j >= 0 for each constraint, plus a negative part for equalities.
    let eq_idx: Vec<usize> =
        (0..m).filter(|&j| sys.constraints[j].relation == Relation::Eq).collect();
    let width = m + eq_idx.len();
    let col_coeff = |col: usize| -> (usize, Rational) {
        if col < m {
            (col, Rational::one())
        } else {
            (eq_idx[col - m], -Rational::one())
        }
    };
    let mut rows = Vec::new();
    for (v, cv) in c.iter().enumerate().take(n) {
        let row: Vec<Rational> = (0..width)
            .map(|col| {
                let (j, f) = col_coeff(col);
                &sys.constraints[j].coeffs[v] * f
            })
            .collect();
        rows.push((row, Cmp::Eq, cv.clone()));
    }
    let bound_row: Vec<Rational> = (0..width)
        .map(|col| {
            let (j, f) = col_coeff(col);
            &sys.constraints[j].bound * f
        })
        .collect();
    rows.push((bound_row.clone(), Cmp::Ge, d.clone()));
    let mut objective = vec![Rational::zero(); width];
    if strict_target {
        // Maximise the bound gap plus the weight on strict hypotheses. With
        // a feasible hypothesis set no ray improves this, so it is bounded.
        for (col, o) in objective.iter_mut().enumerate() {
            let (j, f) = col_coeff(col);
            *o = &bound_row[col]
                + if sys.constraints[j].relation == Relation::Gt { f } else { Rational::zero() };
        }
    }
    let problem = Problem { nvars: width, rows, objective };
    match maximize(&problem) {
        Outcome::Optimal(x, value) => {
            if strict_target && value <= d {
                return None;
            }
            let mut y: Vec<Rational> = x[..m].to_vec();
            for (k, &j) in eq_idx.iter().enumerate() {
                y[j] -= &x[m + k];
            }
            Some(y)
        }
        _ => None,
    }
}

fn one_sided(sys: &LinearSystem, sign: i64) -> Result<std::result::Result<Vec<Rational>, Vec<Rational>>> {
    let s = rat(sign);
    let coeffs: Vec<Rational> = sys.target.coeffs.iter().map(|x| x * &s).collect();
    let bound = &sys.target.bound * &s;
    let strict = sys.target.relation == Relation::Gt;
    if let Some(x) = strictly_feasible_point(sys, Some((&coeffs, &bound, strict))) {
        let v = coeffs.iter().zip(&x).fold(Rational::zero(), |acc, (c, v)| acc + c * v);
        let violated = if strict { v <= bound } else { v < bound };
        if !sys.satisfies_constraints(&x) || !violated {
            return Err(Error::CrossCheck("counterexample failed re-verification".into()));
        }
        return Ok(Err(x));
    }
    match farkas_multipliers(sys, sign) {
        Some(y) if check_one_side(sys, &y, sign) => Ok(Ok(y)),
        _ => Err(Error::CrossCheck(
            "no counterexample and no Farkas witness for a feasible system".into(),
        )),
    }
}

/// Decides `constraints |= target` over the rationals.
pub fn entails(sys: &LinearSystem) -> Result<Entailment> {
    sys.validate()?;
    if strictly_feasible_point(sys, None).is_none() {
        return Ok(Entailment::VacuouslyValid);
    }
    let forward = match one_sided(sys, 1)? {
        Err(point) => return Ok(Entailment::CounterexampleFound { point }),
        Ok(y) => y,
    };
    let reverse = if sys.target.relation == Relation::Eq {
        match one_sided(sys, -1)? {
            Err(point) => return Ok(Entailment::CounterexampleFound { point }),
            Ok(y) => y,
        }
    } else {
        Vec::new()
    };
    Ok(Entailment::Valid { witness: FarkasWitness { multipliers: forward, reverse } })
}

/// Exhaustive integer search for a counterexample inside a box, one
/// inclusive range per variable. Independent of the simplex path.
pub fn box_counterexample(sys: &LinearSystem, ranges: &[(i64, i64)]) -> Result<Option<Vec<i64>>> {
    sys.validate()?;
    if ranges.len() != sys.variables.len() {
        return Err(Error::InvalidInput("one range per variable required".into()));
    }
    // Scale every row to integer coefficients.
    let to_int = |c: &LinearConstraint| -> Result<(Vec<i128>, Relation, i128)> {
        let l = c
            .coeffs
            .iter()
            .chain(std::iter::once(&c.bound))
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let conv = |q: &Rational| -> Result<i128> {
            (q * Rational::from_integer(l.clone()))
                .to_integer()
                .to_i128()
                .ok_or(Error::Overflow("box scan coefficient"))
        };
        Ok((c.coeffs.iter().map(conv).collect::<Result<_>>()?, c.relation, conv(&c.bound)?))
    };
    let rows: Vec<_> = sys.constraints.iter().map(to_int).collect::<Result<_>>()?;
    let target = to_int(&sys.target)?;
    let holds = |(a, rel, b): &(Vec<i128>, Relation, i128), x: &[i64]| {
        let v: i128 = a.iter().zip(x).map(|(c, &v)| c * i128::from(v)).sum();
        match rel {
            Relation::Ge => v >= *b,
            Relation::Gt => v > *b,
            Relation::Eq => v == *b,
        }
    };
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return Ok(None);
    }
    loop {
        if rows.iter().all(|r| holds(r, &x)) && !holds(&target, &x) {
            return Ok(Some(x));
        }
        let mut i = 0;
        loop {
            if i == x.len() {
                return Ok(None);
            }
            if x[i] < ranges[i].1 {
                x[i] += 1;
                break;
            }
            x[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Small cache for repeated identical queries.
#[derive(Default)]
pub struct EntailmentCache {
    map: HashMap<LinearSystem, Entailment>,
}

impl EntailmentCache {
    pub fn entails(&mut self, sys: &LinearSystem) -> Result<Entailment> {
        if let Some(e) = self.map.get(sys) {
            return Ok(e.clone());
        }
        let e = entails(sys)?;
        self.map.insert(sys.clone(), e.clone());
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Relation::*;

    fn valid(sys: &LinearSystem) -> FarkasWitness {
        match entails(sys).unwrap() {
            Entailment::Valid { witness } => {
                assert!(witness.verify(sys));
                witness
            }
            other => panic!("expected valid, got {other:?}"),
        }
    }

    fn counterexample(sys: &LinearSystem) -> Vec<Rational> {
        match entails(sys).unwrap() {
            Entailment::CounterexampleFound { point } => point,
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn sum_of_lower_bounds() {
        let sys = LinearSystem::over(&["x", "y"]).ge(&[1, 0], 1).ge(&[0, 1], 1).entail(&[1, 1], Ge, 2);
        let w = valid(&sys);
        assert_eq!(w.multipliers, vec![rat(1), rat(1)]);
    }

    #[test]
    fn two_point_bezout_step() {
        // 4s >= 4m1 + 2m2, 4s >= 2m1 + 4m2 |= 3s >= 2m1 + 2m2
        let sys = LinearSystem::over(&["s", "m1", "m2"])
            .ge(&[4, -4, -2], 0)
            .ge(&[4, -2, -4], 0)
            .ge(&[1, 0, 0], 0)
            .ge(&[0, 1, 0], 0)
            .ge(&[0, 0, 1], 0)
            .entail(&[3, -2, -2], Ge, 0);
        valid(&sys);
    }

    #[test]
    fn over_strong_claim_is_rejected() {
        let sys = LinearSystem::over(&["s", "m1"])
            .ge(&[1, 0], 6)
            .ge(&[4, -5], 0)
            .entail(&[1, -2], Ge, 0);
        let p = counterexample(&sys);
        assert!(sys.satisfies_constraints(&p));
        assert!(!sys.target.holds(&p));
        // The hand-computed witness s = 10, m1 = 8 is one such point.
        let hand = vec![rat(10), rat(8)];
        assert!(sys.satisfies_constraints(&hand) && !sys.target.holds(&hand));
    }

    #[test]
    fn strict_hypotheses_and_targets() {
        // x > 0 |= x >= 0 (valid), x > 0 |= x > 0 (valid via strict multiplier)
        let base = LinearSystem::over(&["x"]).gt(&[1], 0);
        valid(&base.clone().entail(&[1], Ge, 0));
        valid(&base.clone().entail(&[1], Gt, 0));
        // x >= 0 |= x > 0 fails at x = 0
        let p = counterexample(&LinearSystem::over(&["x"]).ge(&[1], 0).entail(&[1], Gt, 0));
        assert_eq!(p, vec![rat(0)]);
        // x > 0 |= x > 1 fails
        counterexample(&base.entail(&[1], Gt, 1));
    }

    #[test]
    fn equalities_and_equality_targets() {
        let sys = LinearSystem::over(&["x", "y"]).eq(&[1, -1], 0).ge(&[1, 0], 2).entail(&[0, 1], Ge, 2);
        valid(&sys);
        let sys = LinearSystem::over(&["x", "y"]).eq(&[1, -1], 0).entail(&[2, -2], Eq, 0);
        let w = valid(&sys);
        assert!(!w.reverse.is_empty());
        counterexample(&LinearSystem::over(&["x", "y"]).ge(&[1, -1], 0).entail(&[1, -1], Eq, 0));
    }

    #[test]
    fn infeasible_is_vacuous() {
        let sys = LinearSystem::over(&["x"]).ge(&[1], 1).le(&[1], 0).entail(&[1], Ge, 100);
        assert_eq!(entails(&sys).unwrap(), Entailment::VacuouslyValid);
        let sys = LinearSystem::over(&["x"]).gt(&[1], 0).le(&[1], 0).entail(&[1], Ge, 100);
        assert_eq!(entails(&sys).unwrap(), Entailment::VacuouslyValid);
    }

    #[test]
    fn unbounded_slack_gives_finite_point() {
        let sys = LinearSystem::over(&["x", "y"]).ge(&[1, 0], 0).entail(&[1, 1], Ge, 0);
        let p = counterexample(&sys);
        assert!(sys.satisfies_constraints(&p) && !sys.target.holds(&p));
    }

    #[test]
    fn degenerate_and_redundant_rows() {
        let sys = LinearSystem::over(&["x", "y"])
            .eq(&[1, 1], 2)
            .eq(&[2, 2], 4)
            .ge(&[1, 0], 0)
            .ge(&[0, 1], 0)
            .entail(&[1, 0], Ge, 0);
        valid(&sys);
    }

    #[test]
    fn deterministic() {
        let sys = LinearSystem::over(&["s", "m1", "m2", "m3"])
            .ge(&[4, -3, -3, -2], 0)
            .ge(&[0, 1, 0, 0], 0)
            .ge(&[0, 0, 1, 0], 0)
            .ge(&[0, 0, 0, 1], 0)
            .entail(&[3, -2, -2, -1], Ge, 0);
        assert_eq!(entails(&sys).unwrap(), entails(&sys).unwrap());
        valid(&sys);
    }

    #[test]
    fn rejects_malformed() {
        let mut sys = LinearSystem::over(&["x"]);
        sys.constraints.push(LinearConstraint::from_ints(&[1, 2], Ge, 0));
        assert!(entails(&sys).is_err());
        assert!(entails(&LinearSystem::over(&[])).is_err());
    }

    #[test]
    fn json_shape() {
        let sys = LinearSystem::over(&["x"]).ge(&[1], 1).entail(&[2], Gt, 1);
        let js = serde_json::to_string(&sys).unwrap();
        assert!(js.contains("\">=\""));
        let back: LinearSystem = serde_json::from_str(&js).unwrap();
        assert_eq!(back, sys);
        let parsed: LinearSystem = serde_json::from_str(
            r#"{"variables":["x"],"constraints":[{"coeffs":["1/2"],"relation":">","bound":0}],
                "target":{"coeffs":[1],"relation":">=","bound":"0"}}"#,
        )
        .unwrap();
        assert_eq!(parsed.constraints[0].coeffs[0], ratio(1, 2));
        let e = entails(&parsed).unwrap();
        let js = serde_json::to_value(&e).unwrap();
        assert_eq!(js["outcome"], "valid");
    }

    #[test]
    fn strict_target_needs_scaled_witness() {
        valid(&LinearSystem::over(&["x"]).gt(&[1], 0).entail(&[5], Gt, 0));
        valid(&LinearSystem::over(&["x"]).ge(&[1], 1).entail(&[5], Gt, 2));
        let sys = LinearSystem::over(&["a", "b", "m1", "m2", "m3"])
            .ge(&[1, 0, 0, 0, 0], 1)
            .ge(&[0, 1, 0, 0, 0], 1)
            .ge(&[1, 1, 0, 0, 0], 6)
            .ge(&[4, 4, -5, 0, 0], 0)
            .ge(&[4, 4, 0, -5, 0], 0)
            .ge(&[4, 4, 0, 0, -5], 0)
            .ge(&[3, 3, -2, -2, -2], 0)
            .entail(&[4, 2, -1, -1, -1], Gt, 0);
        valid(&sys);
    }

    fn random_system<R: rand::Rng>(rng: &mut R) -> (LinearSystem, Vec<(i64, i64)>) {
        let n = rng.gen_range(1..=5usize);
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut sys = LinearSystem::over(&refs);
        let upper = 6;
        for i in 0..n {
            let mut unit = vec![0; n];
            unit[i] = 1;
            sys = sys.ge(&unit, 0).le(&unit, upper);
        }
        let coeffs = |rng: &mut R| (0..n).map(|_| rng.gen_range(-8..=8)).collect::<Vec<i64>>();
        for _ in 0..rng.gen_range(1..=3usize) {
            let c = coeffs(rng);
            let rel = match rng.gen_range(0..10) {
                0..=5 => Ge,
                6..=8 => Gt,
                _ => Eq,
            };
            sys.constraints.push(LinearConstraint::from_ints(&c, rel, rng.gen_range(-8..=8)));
        }
        if rng.gen_bool(0.5) {
            // A loosened non-negative combination of the inequality rows.
            let mut target = vec![rat(0); n];
            let mut bound = rat(-rng.gen_range(0..=2));
            for c in sys.constraints.iter().filter(|c| c.relation != Eq) {
                let y = rat(rng.gen_range(0..=2));
                for (t, a) in target.iter_mut().zip(&c.coeffs) {
                    *t += &y * a;
                }
                bound += &y * &c.bound;
            }
            sys.target = LinearConstraint::new(target, Ge, bound);
        } else {
            let target = coeffs(rng);
            let rel = [Ge, Gt, Eq][rng.gen_range(0..3usize)];
            sys.target = LinearConstraint::from_ints(&target, rel, rng.gen_range(-8..=8));
        }
        (sys, vec![(0, upper); n])
    }

    #[test]
    fn agrees_with_box_enumeration() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (mut valid_count, mut cex_count) = (0, 0);
        for _ in 0..300 {
            let (sys, ranges) = random_system(&mut rng);
            let lp = entails(&sys).unwrap();
            let scan = box_counterexample(&sys, &ranges).unwrap();
            match &lp {
                Entailment::Valid { witness } => {
                    assert!(witness.verify(&sys));
                    assert!(scan.is_none(), "{sys:?} {scan:?}");
                    valid_count += 1;
                }
                Entailment::CounterexampleFound { point } => {
                    assert!(sys.satisfies_constraints(point) && !sys.target.holds(point));
                    cex_count += 1;
                }
                Entailment::VacuouslyValid => assert!(scan.is_none()),
            }
            if scan.is_some() {
                assert!(matches!(lp, Entailment::CounterexampleFound { .. }));
            }
        }
        assert!(valid_count >= 20 && cex_count >= 20, "{valid_count} {cex_count}");
    }

    #[test]
    fn box_scan_finds_integer_points() {
        let sys = LinearSystem::over(&["s", "m"]).ge(&[1, 0], 6).ge(&[4, -5], 0).entail(&[1, -2], Ge, 0);
        let hit = box_counterexample(&sys, &[(0, 20), (0, 20)]).unwrap().unwrap();
        assert!(hit[0] >= 6 && 4 * hit[0] >= 5 * hit[1] && hit[0] < 2 * hit[1]);
        let ok = LinearSystem::over(&["s", "m"]).ge(&[1, 0], 6).le(&[0, 1], 3).entail(&[1, -2], Ge, 0);
        assert_eq!(box_counterexample(&ok, &[(0, 20), (0, 20)]).unwrap(), None);
    }
}
