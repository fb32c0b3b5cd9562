//! Positivity of the twisted class against curves that are not fibres.
//!
//! A non-fibre curve `C = (alpha, beta)` with multiplicities `m_i` at the
//! configuration points has strict transform `pi^* C - sum m_i E_i`. Two
//! regimes cover every class with `alpha, beta >= 1`:
//!
//! * bounded, `alpha, beta <= 4`: every genus-admissible multiplicity vector
//!   and every assignment of it to the points is evaluated directly;
//! * unbounded, `max(alpha, beta) >= 5`: a degree-(4,4) divisor with
//!   prescribed multiplicities meets `C` properly, and the resulting
//!   Bezout inequalities feed a chain of linear implications that are
//!   decided by [`crate::lp::entails`], plus a short symbolic step for
//!   three or more points of high multiplicity.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::{CaseLabel, Classification, JetConfiguration, VanishingTheorem};
use crate::error::{Error, Result};
use crate::genus::{enumerate_admissible, max_single_multiplicity, CurveCandidate};
use crate::lattice::{interpolating_divisor_exists, BlowupClass, DivisorClass};
use crate::lp::{entails, Entailment, LinearSystem, Relation};

/// Largest coefficient of the bounded regime.
pub const BOUNDED_MAX: i64 = 4;

/// Which regime handles the class `(alpha, beta)`.
pub fn regime(cls: &DivisorClass) -> Result<Regime> {
    if cls.a < 1 || cls.b < 1 {
        return Err(Error::InvalidInput(format!("non-fibre class {cls} needs alpha, beta >= 1")));
    }
    Ok(if cls.a <= BOUNDED_MAX && cls.b <= BOUNDED_MAX { Regime::Bounded } else { Regime::Unbounded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Bounded,
    Unbounded,
}

/// Constant term added to `(sum k_i)(alpha + beta)` in each case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bonus {
    AlphaPlusBeta,
    Alpha,
    Beta,
    None,
}

fn bonus(label: CaseLabel) -> Bonus {
    match label {
        CaseLabel::R1 | CaseLabel::I | CaseLabel::IIIa | CaseLabel::SingMa => Bonus::AlphaPlusBeta,
        CaseLabel::IIa => Bonus::Alpha,
        CaseLabel::IIb => Bonus::None,
        CaseLabel::IIIb | CaseLabel::IV | CaseLabel::SingMb => Bonus::Beta,
    }
}

/// Case-specific value of `N.C~` (or `M.C~`) for the standard bundle
/// `(k+2, k+2)`, written directly in terms of jet weights and fibre roles.
/// Must be `>= 0` for Kawamata-Viehweg cases and `> 0` otherwise.
pub fn target_inequality(
    cfg: &JetConfiguration,
    cl: &Classification,
    candidate: &CurveCandidate,
) -> Result<i64> {
    let r = cfg.r();
    if candidate.mults.len() != r {
        return Err(Error::ArityMismatch { left: r, right: candidate.mults.len() });
    }
    let (alpha, beta) = (candidate.cls.a, candidate.cls.b);
    if alpha < 1 || beta < 1 {
        return Err(Error::InvalidInput("candidate class must have alpha, beta > 0".into()));
    }
    let on = |block: Option<&Vec<usize>>, i: usize| block.is_some_and(|b| b.contains(&i));
    let heavy_a = cl.heavy_a.map(|i| &cfg.a_blocks[i].points);
    let heavy_b = cl.heavy_b.map(|i| &cfg.b_blocks[i]);
    let total_k: i64 = cfg.weights.iter().map(|&w| i64::from(w)).sum();
    let s = alpha + beta;
    let mut value = total_k * s;
    value += match bonus(cl.label) {
        Bonus::AlphaPlusBeta => s,
        Bonus::Alpha => alpha,
        Bonus::Beta => beta,
        Bonus::None => 0,
    };
    for i in 0..r {
        let k = i64::from(cfg.weights[i]);
        let m = i64::from(candidate.mults[i]);
        let reduced = match cl.label {
            CaseLabel::IIa => on(heavy_a, i),
            CaseLabel::IIb => on(heavy_a, i) || on(heavy_b, i),
            CaseLabel::IIIb | CaseLabel::IV | CaseLabel::SingMb => on(heavy_b, i),
            _ => false,
        };
        value -= if reduced { k * m } else { (k + 1) * m };
        if cl.label == CaseLabel::IIb && cl.shared == Some(i) {
            value += m;
        }
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// Bounded regime.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedCheck {
    pub candidate: CurveCandidate,
    pub value: i64,
    pub passed: bool,
}

/// Points grouped by equal exceptional coefficient, largest first.
fn coefficient_groups(exc: &[i64]) -> Vec<(i64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..exc.len()).collect();
    order.sort_by(|&i, &j| exc[j].cmp(&exc[i]).then(i.cmp(&j)));
    let mut groups: Vec<(i64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((c, pts)) if *c == exc[i] => pts.push(i),
            _ => groups.push((exc[i], vec![i])),
        }
    }
    groups
}

/// Calls `f` once per assignment of the multiset `mults` to the points,
/// up to permutations of points with equal coefficient. Within a group the
/// multiplicities are placed non-increasingly in point order.
fn for_each_assignment(groups: &[(i64, Vec<usize>)], mults: &[u32], r: usize, f: &mut impl FnMut(&[u32])) {
    let mut values: Vec<u32> = mults.to_vec();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values.dedup();
    let mut counts: Vec<usize> = values.iter().map(|v| mults.iter().filter(|m| *m == v).count()).collect();
    let mut labelled = vec![0u32; r];

    #[allow(clippy::too_many_arguments)]
    fn fill_group(
        groups: &[(i64, Vec<usize>)],
        g: usize,
        slot: usize,
        vi: usize,
        values: &[u32],
        counts: &mut [usize],
        labelled: &mut [u32],
        f: &mut impl FnMut(&[u32]),
    ) {
        if g == groups.len() {
            f(labelled);
            return;
        }
        let pts = &groups[g].1;
        if slot == pts.len() {
            fill_group(groups, g + 1, 0, 0, values, counts, labelled, f);
            return;
        }
        for v in vi..values.len() {
            if counts[v] == 0 {
                continue;
            }
            counts[v] -= 1;
            labelled[pts[slot]] = values[v];
            fill_group(groups, g, slot + 1, v, values, counts, labelled, f);
            counts[v] += 1;
        }
    }
    fill_group(groups, 0, 0, 0, &values, &mut counts, &mut labelled, f);
}

/// Streams every bounded-regime check for a twisted class. `cap` further
/// limits single multiplicities below the genus bound.
pub fn for_each_bounded(
    twisted: &BlowupClass,
    strict: bool,
    cap: Option<u32>,
    mut f: impl FnMut(&DivisorClass, &[u32], i64, bool),
) -> Result<()> {
    let r = twisted.arity();
    let groups = coefficient_groups(&twisted.exc);
    for a in 1..=BOUNDED_MAX {
        for b in 1..=BOUNDED_MAX {
            let cls = DivisorClass::new(a, b);
            let base_value = twisted.base.intersect(&cls)?;
            let top = max_single_multiplicity(&cls)?;
            let top = cap.map_or(top, |c| c.min(top));
            if top == 0 {
                continue;
            }
            for vector in enumerate_admissible(&cls, r, top)? {
                for_each_assignment(&groups, &vector, r, &mut |labelled| {
                    let hit: i64 = labelled
                        .iter()
                        .zip(&twisted.exc)
                        .map(|(&m, &c)| i64::from(m) * c)
                        .sum();
                    let value = base_value - hit;
                    let passed = if strict { value > 0 } else { value >= 0 };
                    f(&cls, labelled, value, passed);
                });
            }
        }
    }
    Ok(())
}

/// Every bounded-regime check for a twisted class, in deterministic order.
pub fn check_bounded_class(twisted: &BlowupClass, strict: bool, cap: Option<u32>) -> Result<Vec<BoundedCheck>> {
    let mut out = Vec::new();
    for_each_bounded(twisted, strict, cap, |cls, mults, value, passed| {
        out.push(BoundedCheck { candidate: CurveCandidate { cls: *cls, mults: mults.to_vec() }, value, passed });
    })?;
    Ok(out)
}

/// Per-class summary of the bounded checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedCell {
    pub class: DivisorClass,
    pub candidates: u64,
    pub min_value: i64,
    pub worst: Vec<u32>,
    /// Closed-form constant term agrees with the intersection number.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_agrees: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<BoundedCheck>,
}

/// Failures recorded per cell before truncation.
const MAX_FAILURES: usize = 8;

fn summarize_bounded(twisted: &BlowupClass, strict: bool) -> Result<Vec<BoundedCell>> {
    let mut cells: Vec<BoundedCell> = Vec::new();
    for_each_bounded(twisted, strict, None, |cls, mults, value, passed| {
        if cells.last().is_none_or(|c| c.class != *cls) {
            cells.push(BoundedCell {
                class: *cls,
                candidates: 0,
                min_value: value,
                worst: mults.to_vec(),
                closed_form_agrees: None,
                failures: Vec::new(),
            });
        }
        let cell = cells.last_mut().expect("pushed above");
        cell.candidates += 1;
        if value < cell.min_value {
            cell.min_value = value;
            cell.worst = mults.to_vec();
        }
        if !passed && cell.failures.len() < MAX_FAILURES {
            cell.failures.push(BoundedCheck {
                candidate: CurveCandidate { cls: *cls, mults: mults.to_vec() },
                value,
                passed,
            });
        }
    })?;
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Unbounded regime.

/// One point's jet weight and its coefficient in the twisted class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointRole {
    pub k: u32,
    pub c: i64,
}

impl PointRole {
    /// Whether the point lies on the SNC correction.
    pub fn on_correction(self) -> bool {
        self.c <= i64::from(self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationCheck {
    pub step: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<LinearSystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Entailment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub passed: bool,
}

fn lp_check(step: impl Into<String>, system: LinearSystem) -> Result<ImplicationCheck> {
    let outcome = entails(&system)?;
    let passed = match &outcome {
        Entailment::Valid { witness } => witness.verify(&system),
        _ => false,
    };
    Ok(ImplicationCheck { step: step.into(), system: Some(system), outcome: Some(outcome), detail: None, passed })
}

fn fact(step: impl Into<String>, detail: String, passed: bool) -> ImplicationCheck {
    ImplicationCheck { step: step.into(), system: None, outcome: None, detail: Some(detail), passed }
}

/// Steps shared by every configuration: the interpolating divisors and the
/// generic Bezout reductions in the variables `s = alpha + beta`, `m_i`.
fn common_steps() -> Result<Vec<ImplicationCheck>> {
    let d = DivisorClass::new(4, 4);
    let mut out = Vec::new();
    for orders in [&[5u32][..], &[4, 2], &[3, 3, 2]] {
        let ok = interpolating_divisor_exists(&d, orders)?;
        out.push(fact(
            format!("interpolating-divisor{orders:?}"),
            format!("h0(4,4) = 16 exceeds the conditions imposed by orders {orders:?}"),
            ok,
        ));
    }
    out.push(lp_check(
        "bezout-single",
        LinearSystem::over(&["s", "m"]).ge(&[4, -5], 0).ge(&[0, 1], 0).entail(&[1, -1], Relation::Ge, 0),
    )?);
    out.push(lp_check(
        "drop-low-multiplicity",
        LinearSystem::over(&["s", "m"]).ge(&[1, 0], 6).ge(&[0, 1], 0).le(&[0, 1], 3).entail(&[1, -2], Relation::Ge, 0),
    )?);
    Ok(out)
}

fn cached_common_steps() -> Result<Vec<ImplicationCheck>> {
    static CELL: OnceLock<std::result::Result<Vec<ImplicationCheck>, Error>> = OnceLock::new();
    CELL.get_or_init(common_steps).clone()
}

/// `(3r - 8) * 4r >= 0` and the identity `4(r-2) - r = 3r - 8` for the
/// high-multiplicity chain with `r` surviving points.
fn chain_step(r: i64) -> ImplicationCheck {
    let identity = 4 * (r - 2) - r == 3 * r - 8;
    let value = (3 * r - 8) * (4 * r);
    // m^2 >= 4m once m >= 4, because m^2 - 4m = m(m - 4).
    let square_bound = (4..=64i64).all(|m| m * m - 4 * m == m * (m - 4) && m * (m - 4) >= 0);
    fact(
        format!("high-multiplicity-chain[r={r}]"),
        format!("4(r-2) - r = 3r - 8 and (3r-8)*4r = {value}"),
        identity && value >= 0 && square_bound,
    )
}

fn name_vars(n: usize) -> Vec<String> {
    std::iter::once("s".to_string()).chain((1..=n).map(|i| format!("m{i}"))).collect()
}

fn system(n: usize) -> LinearSystem {
    let names = name_vars(n);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    LinearSystem::over(&refs)
}

/// Unit vector helper over `(s, m_1..m_n)`.
fn row(n: usize, entries: &[(usize, i64)]) -> Vec<i64> {
    let mut v = vec![0; n + 1];
    for &(i, c) in entries {
        v[i] += c;
    }
    v
}

/// Two-point and three-point restore steps plus their lifts to concrete
/// jet weights.
fn low_point_steps(theorem: VanishingTheorem, roles: &[PointRole]) -> Result<Vec<ImplicationCheck>> {
    let mut out = Vec::new();
    let r = roles.len();
    let distinct: BTreeSet<PointRole> = roles.iter().copied().collect();
    let count = |p: &PointRole| roles.iter().filter(|q| *q == p).count();
    // Bezout single-point caps keep every lift honest.
    let with_caps = |mut sys: LinearSystem, n: usize| {
        for i in 1..=n {
            sys = sys.ge(&row(n, &[(0, 4), (i, -5)]), 0).ge(&row(n, &[(i, 1)]), 0);
        }
        sys
    };
    match theorem {
        VanishingTheorem::KawamataViehweg => {
            if r >= 2 {
                out.push(lp_check(
                    "two-points",
                    with_caps(system(2), 2)
                        .ge(&[4, -4, -2], 0)
                        .ge(&[4, -2, -4], 0)
                        .ge(&[1, 0, 0], 6)
                        .ge(&[0, 1, 0], 4)
                        .ge(&[0, 0, 1], 4)
                        .entail(&[3, -2, -2], Relation::Ge, 0),
                )?);
                out.push(lp_check(
                    "restore-one-point",
                    with_caps(system(2), 2)
                        .ge(&[4, -4, -2], 0)
                        .ge(&[1, 0, 0], 6)
                        .ge(&[0, 1, 0], 4)
                        .le(&[0, 0, 1], 3)
                        .entail(&[3, -2, -2], Relation::Ge, 0),
                )?);
                for (i, p) in distinct.iter().enumerate() {
                    for q in distinct.iter().skip(i) {
                        if p == q && count(p) < 2 {
                            continue;
                        }
                        let (k1, k2) = (i64::from(p.k), i64::from(q.k));
                        out.push(lp_check(
                            format!("two-points-lift[k={},{}]", p.k, q.k),
                            with_caps(system(2), 2)
                                .ge(&[3, -2, -2], 0)
                                .entail(&[k1 + k2 + 1, -(k1 + 1), -(k2 + 1)], Relation::Ge, 0),
                        )?);
                    }
                }
            }
        }
        VanishingTheorem::Norimatsu => {
            if r >= 2 {
                out.push(lp_check(
                    "two-points-on-fibre",
                    with_caps(system(2), 2)
                        .ge(&[4, -4, -2], 0)
                        .ge(&[1, 0, 0], 6)
                        .ge(&[0, 1, 0], 4)
                        .ge(&[0, 0, 1], 4)
                        .entail(&[2, -2, -1], Relation::Ge, 0),
                )?);
                out.push(lp_check(
                    "two-points-on-fibre-swapped",
                    with_caps(system(2), 2)
                        .ge(&[4, -2, -4], 0)
                        .ge(&[1, 0, 0], 6)
                        .ge(&[0, 1, 0], 4)
                        .ge(&[0, 0, 1], 4)
                        .entail(&[2, -1, -2], Relation::Ge, 0),
                )?);
                out.push(lp_check(
                    "restore-one-point",
                    with_caps(system(2), 2)
                        .ge(&[4, -4, -2], 0)
                        .ge(&[1, 0, 0], 6)
                        .ge(&[0, 1, 0], 4)
                        .le(&[0, 0, 1], 3)
                        .entail(&[2, -2, -1], Relation::Ge, 0),
                )?);
                for p in &distinct {
                    for q in distinct.iter().filter(|q| q.on_correction()) {
                        if p == q && count(p) < 2 {
                            continue;
                        }
                        let (k1, k2) = (i64::from(p.k), i64::from(q.k));
                        out.push(lp_check(
                            format!("two-points-on-fibre-lift[k={},{};c={},{}]", p.k, q.k, p.c, q.c),
                            with_caps(system(2), 2)
                                .ge(&[2, -2, -1], 0)
                                .entail(&[k1 + k2, -p.c.max(k1 + 1), -q.c], Relation::Ge, 0),
                        )?);
                    }
                }
            }
            if r >= 3 {
                out.push(lp_check(
                    "three-points-restored",
                    with_caps(system(3), 3)
                        .ge(&[4, -3, -3, -2], 0)
                        .ge(&[1, 0, 0, 0], 6)
                        .ge(&[0, 1, 0, 0], 4)
                        .ge(&[0, 0, 1, 0], 4)
                        .le(&[0, 0, 0, 1], 3)
                        .entail(&[3, -2, -2, -1], Relation::Ge, 0),
                )?);
                let off: Vec<PointRole> = distinct.iter().copied().filter(|p| !p.on_correction()).collect();
                for (i, p) in off.iter().enumerate() {
                    for q in off.iter().skip(i) {
                        if p == q && count(p) < 2 {
                            continue;
                        }
                        for l in distinct.iter().filter(|l| l.on_correction()) {
                            let (k1, k2, k3) = (i64::from(p.k), i64::from(q.k), i64::from(l.k));
                            out.push(lp_check(
                                format!("three-points-lift[k={},{},{};c={}]", p.k, q.k, l.k, l.c),
                                with_caps(system(3), 3).ge(&[3, -2, -2, -1], 0).entail(
                                    &[k1 + k2 + k3, -(k1 + 1), -(k2 + 1), -l.c],
                                    Relation::Ge,
                                    0,
                                ),
                            )?);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The averaged inequality `r s >= 2 sum m_i` plus single-point Bezout
/// bounds imply `(sum k_i) s >= sum (k_i + 1) m_i`.
fn observation_step(roles: &[PointRole]) -> Result<ImplicationCheck> {
    let r = roles.len();
    let total: i64 = roles.iter().map(|p| i64::from(p.k)).sum();
    let mut sys = system(r);
    for i in 1..=r {
        sys = sys.ge(&row(r, &[(0, 4), (i, -5)]), 0).ge(&row(r, &[(i, 1)]), 0);
    }
    let mut avg = vec![r as i64];
    avg.extend(std::iter::repeat_n(-2, r));
    let mut target = vec![total];
    target.extend(roles.iter().map(|p| -(i64::from(p.k) + 1)));
    lp_check("averaged-to-weighted", sys.ge(&avg, 0).entail(&target, Relation::Ge, 0))
}

/// From the weighted inequality to the actual intersection number with the
/// twisted class, over variables `(alpha, beta, m_1..m_r)`.
fn conclusion_step(base: &DivisorClass, roles: &[PointRole], strict: bool) -> Result<ImplicationCheck> {
    let r = roles.len();
    let mut names = vec!["alpha".to_string(), "beta".to_string()];
    names.extend((1..=r).map(|i| format!("m{i}")));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let vec_of = |ab: (i64, i64), ms: &dyn Fn(usize) -> i64| {
        let mut v = vec![ab.0, ab.1];
        v.extend((0..r).map(ms));
        v
    };
    let total: i64 = roles.iter().map(|p| i64::from(p.k)).sum();
    let mut sys = LinearSystem::over(&refs)
        .ge(&vec_of((1, 0), &|_| 0), 1)
        .ge(&vec_of((0, 1), &|_| 0), 1)
        .ge(&vec_of((1, 1), &|_| 0), 6);
    for i in 0..r {
        sys = sys
            .ge(&vec_of((4, 4), &|j| if j == i { -5 } else { 0 }), 0)
            .ge(&vec_of((0, 0), &|j| i64::from(j == i)), 0);
    }
    sys = sys.ge(&vec_of((total, total), &|j| -(i64::from(roles[j].k) + 1)), 0);
    // (a, b).(alpha, beta) = a beta + b alpha.
    let target = vec_of((base.b, base.a), &|j| -roles[j].c);
    let rel = if strict { Relation::Gt } else { Relation::Ge };
    lp_check("weighted-to-twisted", sys.entail(&target, rel, 0))
}

/// Unbounded-regime checks for a twisted class with the given point roles.
pub fn check_unbounded_roles(
    theorem: VanishingTheorem,
    base: &DivisorClass,
    roles: &[PointRole],
) -> Result<Vec<ImplicationCheck>> {
    let strict = theorem == VanishingTheorem::Norimatsu;
    let mut out = cached_common_steps()?;
    for r in 3..=roles.len() as i64 {
        out.push(chain_step(r));
    }
    out.extend(low_point_steps(theorem, roles)?);
    out.push(observation_step(roles)?);
    out.push(conclusion_step(base, roles, strict)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports.

/// Everything a non-fibre report depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReportKey {
    pub theorem: VanishingTheorem,
    pub base: DivisorClass,
    /// Roles sorted by decreasing coefficient, then weight.
    pub roles: Vec<PointRole>,
}

impl PartialOrd for VanishingTheorem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VanishingTheorem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

impl ReportKey {
    pub fn new(theorem: VanishingTheorem, twisted: &BlowupClass, weights: &[u32]) -> Self {
        let mut roles: Vec<PointRole> =
            weights.iter().zip(&twisted.exc).map(|(&k, &c)| PointRole { k, c }).collect();
        roles.sort_by(|p, q| q.c.cmp(&p.c).then(q.k.cmp(&p.k)));
        ReportKey { theorem, base: twisted.base, roles }
    }

    pub fn twisted(&self) -> BlowupClass {
        BlowupClass::new(self.base, self.roles.iter().map(|p| p.c).collect())
    }

    pub fn strict(&self) -> bool {
        self.theorem == VanishingTheorem::Norimatsu
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonFibreReport {
    pub key: ReportKey,
    pub bounded: Vec<BoundedCell>,
    pub unbounded: Vec<ImplicationCheck>,
    pub passed: bool,
}

impl NonFibreReport {
    pub fn failures(&self) -> impl Iterator<Item = &BoundedCheck> {
        self.bounded.iter().flat_map(|c| c.failures.iter())
    }
}

/// Runs both regimes for one key. Passing the case label enables the
/// closed-form cross-check, which only holds for the standard bundle
/// `(k+2, k+2)`.
pub fn build_report(key: &ReportKey, standard_label: Option<CaseLabel>) -> Result<NonFibreReport> {
    let twisted = key.twisted();
    let mut bounded = summarize_bounded(&twisted, key.strict())?;
    if let Some(label) = standard_label {
        let total: i64 = key.roles.iter().map(|p| i64::from(p.k)).sum();
        for cell in &mut bounded {
            let (a, b) = (cell.class.a, cell.class.b);
            let closed = total * (a + b)
                + match bonus(label) {
                    Bonus::AlphaPlusBeta => a + b,
                    Bonus::Alpha => a,
                    Bonus::Beta => b,
                    Bonus::None => 0,
                };
            cell.closed_form_agrees = Some(key.base.intersect(&cell.class)? == closed);
        }
    }
    let unbounded = check_unbounded_roles(key.theorem, &key.base, &key.roles)?;
    let passed = bounded.iter().all(|c| c.failures.is_empty() && c.closed_form_agrees != Some(false))
        && unbounded.iter().all(|u| u.passed);
    Ok(NonFibreReport { key: key.clone(), bounded, unbounded, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{classify, FibreBlock};
    use crate::lattice::blowup_intersect;
    use crate::surface::{surface, FibreKind};

    fn singles(k: u32, weights: &[u32]) -> JetConfiguration {
        let r = weights.len();
        JetConfiguration {
            k,
            weights: weights.to_vec(),
            a_blocks: (0..r).map(|i| FibreBlock { kind: FibreKind::FullA, points: vec![i] }).collect(),
            b_blocks: (0..r).map(|i| vec![i]).collect(),
        }
    }

    #[test]
    fn case_one_example() {
        let cfg = singles(2, &[1, 1, 1]);
        let cl = classify(&cfg, surface(1).unwrap()).unwrap();
        assert_eq!(cl.label, CaseLabel::I);
        let cand = CurveCandidate { cls: DivisorClass::new(1, 1), mults: vec![1, 1, 1] };
        assert_eq!(target_inequality(&cfg, &cl, &cand).unwrap(), 2);
        let m = BlowupClass::new(DivisorClass::new(4, 4), vec![2, 2, 2]);
        let c = BlowupClass::new(DivisorClass::new(1, 1), vec![1, 1, 1]);
        assert_eq!(blowup_intersect(&m, &c).unwrap(), 2);
    }

    #[test]
    fn single_point_weight_three() {
        // k = 2, one point of weight 3 through a (2,2) curve of multiplicity
        // 3: the weighted inequality is tight, (3)(4) - 4*3 = 0, and the
        // twisted class keeps the extra alpha + beta.
        assert_eq!(3 * (2 + 2) - 4 * 3, 0);
        let m = BlowupClass::new(DivisorClass::new(4, 4), vec![4]);
        let checks = check_bounded_class(&m, false, None).unwrap();
        let hit = checks
            .iter()
            .find(|c| c.candidate.cls == DivisorClass::new(2, 2) && c.candidate.mults == [3])
            .unwrap();
        assert_eq!(hit.value, 4);
        assert!(hit.passed);
    }

    #[test]
    fn assignments_are_distinct_up_to_equal_coefficients() {
        let groups = coefficient_groups(&[3, 2, 3, 2]);
        assert_eq!(groups, vec![(3, vec![0, 2]), (2, vec![1, 3])]);
        let mut seen = Vec::new();
        for_each_assignment(&groups, &[2, 1, 1, 0], 4, &mut |l| seen.push(l.to_vec()));
        // {2,1 | 1,0}, {2,0 | 1,1}, {1,1 | 2,0}, {1,0 | 2,1}
        assert_eq!(seen.len(), 4);
        let set: BTreeSet<_> = seen.iter().cloned().collect();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn table_rows_reachable() {
        // Row x: (1,1) admits (2,1); row i: (4,4) admits (6,2) and (5,4).
        let m = BlowupClass::new(DivisorClass::new(4, 4), vec![2, 2]);
        let checks = check_bounded_class(&m, false, None).unwrap();
        let has = |a, b, ms: &[u32]| {
            checks.iter().any(|c| c.candidate.cls == DivisorClass::new(a, b) && c.candidate.mults == ms)
        };
        assert!(has(1, 1, &[2, 1]));
        assert!(!has(1, 1, &[2, 2]));
        assert!(has(4, 4, &[6, 2]));
        assert!(has(4, 4, &[5, 4]));
    }

    #[test]
    fn regimes_cover_all_classes() {
        for a in 1..=12 {
            for b in 1..=12 {
                let r = regime(&DivisorClass::new(a, b)).unwrap();
                assert_eq!(r == Regime::Bounded, a.max(b) <= 4);
            }
        }
        assert!(regime(&DivisorClass::new(0, 3)).is_err());
    }

    #[test]
    fn common_steps_hold() {
        for c in cached_common_steps().unwrap() {
            assert!(c.passed, "{}", c.step);
        }
        for r in 3..12 {
            assert!(chain_step(r).passed);
        }
        assert!(!chain_step(2).passed);
    }

    #[test]
    fn standard_reports_pass() {
        let key = ReportKey::new(
            VanishingTheorem::Norimatsu,
            &BlowupClass::new(DivisorClass::new(3, 4), vec![2, 2]),
            &[2, 1],
        );
        let rep = build_report(&key, Some(CaseLabel::IIa)).unwrap();
        assert!(rep.passed, "{rep:#?}");
        assert!(rep.bounded.iter().all(|c| c.closed_form_agrees == Some(true)));
        let key = ReportKey::new(
            VanishingTheorem::KawamataViehweg,
            &BlowupClass::new(DivisorClass::new(5, 5), vec![2, 2, 2, 2]),
            &[1, 1, 1, 1],
        );
        assert!(build_report(&key, Some(CaseLabel::I)).unwrap().passed);
    }

    #[test]
    fn weak_base_fails_conclusion() {
        // Base (2,3) with k = 2 and one point of weight 3.
        let key = ReportKey::new(
            VanishingTheorem::KawamataViehweg,
            &BlowupClass::new(DivisorClass::new(2, 3), vec![4]),
            &[3],
        );
        let rep = build_report(&key, None).unwrap();
        assert!(!rep.passed);
        let conclusion = rep.unbounded.iter().find(|u| u.step == "weighted-to-twisted").unwrap();
        assert!(matches!(conclusion.outcome, Some(Entailment::CounterexampleFound { .. })));
    }
}
