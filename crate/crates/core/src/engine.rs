//! Per-configuration certificates.
//!
//! For a configuration of weighted points the twist
//! `M = pi^* L - sum (k_i + 1) E_i` must satisfy a vanishing theorem on the
//! blow-up. Kawamata-Viehweg cases need `M` nef and big; the remaining cases
//! subtract the strict transform `F` of the heavy fibre(s) and need
//! `N = M - F` ample. Positivity is certified on the square, on every fibre
//! class (through each block of points and through none), and on non-fibre
//! curves via [`crate::nonfibre`].

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{classify, CaseLabel, Classification, ConfigurationIter, JetConfiguration, VanishingTheorem};
use crate::error::{Error, Result};
use crate::lattice::{BlowupClass, DivisorClass};
use crate::nonfibre::{build_report, NonFibreReport, ReportKey};
use crate::surface::{FibreKind, SurfaceType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Subject {
    Square,
    Fibre { kind: FibreKind, class: DivisorClass, points: Vec<usize> },
    /// `min(a, b) * eps((1,1), x)` against `k + 2`, with `eps((1,1), x) >= 1`.
    SeshadriThreshold,
    /// `L^2` against `(k+2)^2`.
    Bigness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub subject: Subject,
    pub value: i64,
    pub bound: i64,
    pub strict: bool,
    pub passed: bool,
}

impl Check {
    fn new(subject: Subject, value: i64, bound: i64, strict: bool) -> Check {
        let passed = if strict { value > bound } else { value >= bound };
        Check { subject, value, bound, strict, passed }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface_type: Option<u32>,
    pub config: JetConfiguration,
    pub label: CaseLabel,
    pub line_bundle: DivisorClass,
    pub m_class: BlowupClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_class: Option<BlowupClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_class: Option<BlowupClass>,
    pub vanishing_theorem: VanishingTheorem,
    pub axioms: Vec<String>,
    pub checks: Vec<Check>,
    /// Position of the non-fibre report in the enclosing bundle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonfibre_report: Option<usize>,
    #[serde(skip)]
    pub nonfibre: Option<Arc<NonFibreReport>>,
    pub passed: bool,
}

impl Certificate {
    /// The class whose positivity is certified: `N` when a correction is
    /// used, `M` otherwise.
    pub fn twisted(&self) -> &BlowupClass {
        self.n_class.as_ref().unwrap_or(&self.m_class)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn nonfibre_passed(&self) -> bool {
        self.nonfibre.as_ref().is_none_or(|r| r.passed)
    }

    fn finish(mut self) -> Certificate {
        self.passed = self.checks.iter().all(|c| c.passed) && self.nonfibre_passed();
        self
    }
}

pub const SESHADRI_AXIOM: &str = "seshadri: eps((1,1), x) >= 1 at every point";
pub const SNC_AXIOM: &str = "snc: F is a sum of distinct smooth fibre transforms";

pub fn standard_bundle(k: u32) -> DivisorClass {
    DivisorClass::diagonal(i64::from(k) + 2)
}

/// `pi^* (k+2, k+2) - sum (k_i + 1) E_i`.
pub fn build_twist(k: u32, weights: &[u32]) -> BlowupClass {
    build_twist_with_base(standard_bundle(k), weights)
}

pub fn build_twist_with_base(base: DivisorClass, weights: &[u32]) -> BlowupClass {
    BlowupClass::new(base, weights.iter().map(|&w| i64::from(w) + 1).collect())
}

/// The SNC correction: strict transform of the heavy A-fibre (IIa, IIb)
/// and/or the heavy B-fibre (IIb, IIIb, SingM-b, IV).
pub fn correction_class(cfg: &JetConfiguration, cl: &Classification, s: &SurfaceType) -> Result<BlowupClass> {
    let r = cfg.r();
    let missing = || Error::NoCorrection(format!("case {} lacks its heavy fibre", cl.label));
    let heavy_a = || -> Result<BlowupClass> {
        let block = cl.heavy_a.ok_or_else(missing)?;
        let block = &cfg.a_blocks[block];
        Ok(BlowupClass::through_points(s.fibre_class(block.kind)?, r, &block.points))
    };
    let heavy_b = || -> Result<BlowupClass> {
        let block = cl.heavy_b.ok_or_else(missing)?;
        Ok(BlowupClass::through_points(s.fibre_class(FibreKind::B)?, r, &cfg.b_blocks[block]))
    };
    match cl.label {
        CaseLabel::IIa => heavy_a(),
        CaseLabel::IIb => heavy_a()?.checked_add(&heavy_b()?),
        CaseLabel::IIIb | CaseLabel::IV | CaseLabel::SingMb => heavy_b(),
        other => Err(Error::NoCorrection(format!("case {other} uses no correction"))),
    }
}

/// `(F, N)` with `N = M - F` for the standard bundle.
pub fn build_correction(cfg: &JetConfiguration, s: &SurfaceType) -> Result<(BlowupClass, BlowupClass)> {
    let cl = classify(cfg, s)?;
    let f = correction_class(cfg, &cl, s)?;
    let n = build_twist(cfg.k, &cfg.weights).checked_sub(&f)?;
    Ok((f, n))
}

pub fn certify_square(cls: &BlowupClass, strict: bool) -> Result<Check> {
    Ok(Check::new(Subject::Square, cls.self_intersection()?, 0, strict))
}

/// Checks `cls . C~ >= 0` (or `> 0`) for every fibre class of the surface,
/// through each block of matching kind and through no point.
pub fn certify_fibres(cls: &BlowupClass, cfg: &JetConfiguration, s: &SurfaceType, strict: bool) -> Result<Vec<Check>> {
    let r = cfg.r();
    let mut out = Vec::new();
    for (class, kind) in s.fibre_classes() {
        let blocks: Vec<&Vec<usize>> = if kind == FibreKind::B {
            cfg.b_blocks.iter().collect()
        } else {
            cfg.a_blocks.iter().filter(|b| b.kind == kind).map(|b| &b.points).collect()
        };
        let empty = Vec::new();
        for points in blocks.into_iter().chain(std::iter::once(&empty)) {
            let curve = BlowupClass::through_points(class, r, points);
            out.push(Check::new(
                Subject::Fibre { kind, class, points: points.clone() },
                cls.intersect(&curve)?,
                0,
                strict,
            ));
        }
    }
    Ok(out)
}

fn r1_checks(k: u32, base: &DivisorClass) -> Result<Vec<Check>> {
    let need = i64::from(k) + 2;
    let sq = need.checked_mul(need).ok_or(Error::Overflow("(k+2)^2"))?;
    Ok(vec![
        Check::new(Subject::SeshadriThreshold, base.a.min(base.b), need, false),
        Check::new(Subject::Bigness, base.self_intersection()?, sq, true),
    ])
}

/// Single point of weight `k + 1` for `L = (k+2, k+2)`: `pi^* L - (k+2) E` is
/// nef by the Seshadri bound and big since `L^2 = 2(k+2)^2 > (k+2)^2`.
pub fn certify_r1(k: u32) -> Result<Certificate> {
    let base = standard_bundle(k);
    let config = JetConfiguration::single_point(k, FibreKind::FullA);
    let m = build_twist_with_base(base, &config.weights);
    Ok(Certificate {
        surface_type: None,
        config,
        label: CaseLabel::R1,
        line_bundle: base,
        m_class: m,
        f_class: None,
        n_class: None,
        vanishing_theorem: VanishingTheorem::KawamataViehweg,
        axioms: vec![SESHADRI_AXIOM.into()],
        checks: r1_checks(k, &base)?,
        nonfibre_report: None,
        nonfibre: None,
        passed: false,
    }
    .finish())
}

/// Certificate builder with a cache of non-fibre reports.
#[derive(Default)]
pub struct Engine {
    reports: RwLock<HashMap<ReportKey, Arc<NonFibreReport>>>,
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn report_count(&self) -> usize {
        self.reports.read().map(|m| m.len()).unwrap_or(0)
    }

    /// Every cached non-fibre report, ordered by key.
    pub fn reports(&self) -> Vec<Arc<NonFibreReport>> {
        let mut out: Vec<_> = self.reports.read().map(|m| m.values().cloned().collect()).unwrap_or_default();
        out.sort_by(|p, q| p.key.cmp(&q.key));
        out
    }

    fn report(&self, key: ReportKey, standard_label: Option<CaseLabel>) -> Result<Arc<NonFibreReport>> {
        if let Some(rep) = self.reports.read().map_err(|_| poisoned())?.get(&key) {
            return Ok(rep.clone());
        }
        let rep = Arc::new(build_report(&key, standard_label)?);
        let mut map = self.reports.write().map_err(|_| poisoned())?;
        Ok(map.entry(key).or_insert(rep).clone())
    }

    pub fn verify(&self, cfg: &JetConfiguration, s: &SurfaceType) -> Result<Certificate> {
        self.verify_with_base(cfg, s, standard_bundle(cfg.k))
    }

    /// Runs the whole pipeline with an arbitrary line bundle in place of
    /// `(k+2, k+2)`.
    pub fn verify_with_base(&self, cfg: &JetConfiguration, s: &SurfaceType, base: DivisorClass) -> Result<Certificate> {
        cfg.validate_for(s)?;
        let m = build_twist_with_base(base, &cfg.weights);
        if cfg.r() == 1 {
            let mut checks = r1_checks(cfg.k, &base)?;
            checks.extend(certify_fibres(&m, cfg, s, false)?);
            return Ok(Certificate {
                surface_type: Some(s.type_id),
                config: cfg.clone(),
                label: CaseLabel::R1,
                line_bundle: base,
                m_class: m,
                f_class: None,
                n_class: None,
                vanishing_theorem: VanishingTheorem::KawamataViehweg,
                axioms: vec![SESHADRI_AXIOM.into()],
                checks,
                nonfibre_report: None,
                nonfibre: None,
                passed: false,
            }
            .finish());
        }
        let cl = classify(cfg, s)?;
        let theorem = cl.label.vanishing_theorem();
        let strict = theorem == VanishingTheorem::Norimatsu;
        let (f, n) = if cl.label.has_correction() {
            let f = correction_class(cfg, &cl, s)?;
            let n = m.checked_sub(&f)?;
            (Some(f), Some(n))
        } else {
            (None, None)
        };
        let twisted = n.as_ref().unwrap_or(&m);
        let mut checks = vec![certify_square(twisted, strict)?];
        checks.extend(certify_fibres(twisted, cfg, s, strict)?);
        let key = ReportKey::new(theorem, twisted, &cfg.weights);
        let standard = (base == standard_bundle(cfg.k)).then_some(cl.label);
        let report = self.report(key, standard)?;
        let axioms = if f.is_some() { vec![SNC_AXIOM.into()] } else { Vec::new() };
        Ok(Certificate {
            surface_type: Some(s.type_id),
            config: cfg.clone(),
            label: cl.label,
            line_bundle: base,
            m_class: m,
            f_class: f,
            n_class: n,
            vanishing_theorem: theorem,
            axioms,
            checks,
            nonfibre_report: None,
            nonfibre: Some(report),
            passed: false,
        }
        .finish())
    }

    /// Verifies a stream of configurations in parallel chunks and hands the
    /// certificates to `sink` in stream order.
    pub fn verify_stream(
        &self,
        configs: ConfigurationIter,
        s: &SurfaceType,
        base: impl Fn(u32) -> DivisorClass + Sync,
        mut sink: impl FnMut(Certificate) -> Result<()>,
    ) -> Result<()> {
        const CHUNK: usize = 4096;
        let mut configs = configs.peekable();
        while configs.peek().is_some() {
            let chunk: Vec<JetConfiguration> = configs.by_ref().take(CHUNK).collect();
            let certs: Vec<Result<Certificate>> =
                chunk.par_iter().map(|c| self.verify_with_base(c, s, base(c.k))).collect();
            for cert in certs {
                sink(cert?)?;
            }
        }
        Ok(())
    }
}

fn poisoned() -> Error {
    Error::CrossCheck("report cache lock poisoned".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{enumerate_configurations, FibreBlock};
    use crate::surface::surface;
    use FibreKind::*;

    fn cfg(k: u32, weights: &[u32], a: &[(FibreKind, &[usize])], b: &[&[usize]]) -> JetConfiguration {
        JetConfiguration {
            k,
            weights: weights.to_vec(),
            a_blocks: a.iter().map(|(kind, p)| FibreBlock { kind: *kind, points: p.to_vec() }).collect(),
            b_blocks: b.iter().map(|p| p.to_vec()).collect(),
        }
    }

    #[test]
    fn twist_examples() {
        assert_eq!(build_twist(2, &[1, 1, 1]), BlowupClass::new(DivisorClass::new(4, 4), vec![2, 2, 2]));
        assert_eq!(build_twist(2, &[3]), BlowupClass::new(DivisorClass::new(4, 4), vec![4]));
        assert_eq!(build_twist(4, &[2, 2, 1]), BlowupClass::new(DivisorClass::new(6, 6), vec![3, 3, 2]));
        let m = build_twist(2, &[1, 1, 1]);
        assert_eq!(m.self_intersection().unwrap(), 20);
    }

    #[test]
    fn correction_examples() {
        let t1 = surface(1).unwrap();
        // k = 2, weights (2,1), point 0 alone on A/2. Classification picks
        // IIb here since the B-fibre through point 0 is heavy as well, so
        // the IIa and IV corrections are built by hand.
        let c = cfg(2, &[2, 1], &[(SingularA, &[0]), (FullA, &[1])], &[&[0], &[1]]);
        let manual = Classification { label: CaseLabel::IIa, heavy_a: Some(0), heavy_b: None, shared: None };
        let f = correction_class(&c, &manual, t1).unwrap();
        let n = build_twist(2, &c.weights).checked_sub(&f).unwrap();
        assert_eq!(n, BlowupClass::new(DivisorClass::new(3, 4), vec![2, 2]));
        assert_eq!(n.self_intersection().unwrap(), 16);
        // IV, k = 2, weights (2,1), point 0 on the heavy B-fibre.
        let manual = Classification { label: CaseLabel::IV, heavy_a: None, heavy_b: Some(0), shared: None };
        let f = correction_class(&c, &manual, t1).unwrap();
        let n = build_twist(2, &c.weights).checked_sub(&f).unwrap();
        assert_eq!(n, BlowupClass::new(DivisorClass::new(4, 3), vec![2, 2]));
        let m = build_twist(2, &c.weights);
        assert_eq!(n.checked_add(&f).unwrap(), m);
    }

    #[test]
    fn iib_shared_point_gains_one() {
        let t1 = surface(1).unwrap();
        let c = cfg(3, &[2, 1, 1], &[(SingularA, &[0, 1]), (FullA, &[2])], &[&[0], &[1, 2]]);
        let (f, n) = build_correction(&c, t1).unwrap();
        assert_eq!(f.exc, vec![1, 2, 1]);
        assert_eq!(n.base, DivisorClass::new(4, 4));
        assert_eq!(n.exc, vec![2, 0, 1]);
        assert!(build_correction(&cfg(2, &[1, 1, 1], &[(FullA, &[0]), (FullA, &[1]), (FullA, &[2])], &[&[0], &[1], &[2]]), t1).is_err());
    }

    #[test]
    fn fibre_chains() {
        let t1 = surface(1).unwrap();
        // Case I, k = 3, two weight-1 points on one singular fibre:
        // (k+2) - sum (k_i + 1) = 5 - 4 = 1.
        let c = cfg(3, &[2, 1, 1], &[(SingularA, &[1, 2]), (FullA, &[0])], &[&[0], &[1], &[2]]);
        let m = build_twist(3, &c.weights);
        let checks = certify_fibres(&m, &c, t1, false).unwrap();
        let on_block = checks
            .iter()
            .find(|ch| matches!(&ch.subject, Subject::Fibre { kind: SingularA, points, .. } if points == &[1, 2]))
            .unwrap();
        assert_eq!(on_block.value, 1);
        // Case IV boundary: N.C~ = k + 2 - 2(k+1)/2 = 1 on a light A-fibre
        // carrying (k+1)/2 unit points, k = 3.
        let c = cfg(
            3,
            &[1, 1, 1, 1],
            &[(SingularA, &[0, 1]), (FullA, &[2]), (FullA, &[3])],
            &[&[0, 2, 3], &[1]],
        );
        let cert = Engine::new().verify(&c, t1).unwrap();
        assert_eq!(cert.label, CaseLabel::IV);
        let v = cert
            .checks
            .iter()
            .find(|ch| matches!(&ch.subject, Subject::Fibre { kind: SingularA, points, .. } if points == &[0, 1]))
            .unwrap();
        assert_eq!(v.value, 1);
        assert!(cert.passed);
    }

    #[test]
    fn r1_certificates() {
        for k in 0..=8u32 {
            let cert = certify_r1(k).unwrap();
            assert!(cert.passed);
            let l2 = 2 * (i64::from(k) + 2).pow(2);
            assert_eq!(cert.checks[1].value, l2);
            assert_eq!(cert.checks[0].bound, i64::from(k) + 2);
        }
    }

    #[test]
    fn small_runs_pass_everywhere() {
        let engine = Engine::new();
        for s in crate::surface::catalog() {
            for k in 2..=4 {
                for c in enumerate_configurations(k, s, None).unwrap() {
                    let cert = engine.verify(&c, s).unwrap();
                    assert!(cert.passed, "type {} {:?}", s.type_id, cert);
                    assert_eq!(cert.vanishing_theorem == VanishingTheorem::KawamataViehweg, cert.label.uses_kawamata_viehweg());
                    if let (Some(f), Some(n)) = (&cert.f_class, &cert.n_class) {
                        assert_eq!(&n.checked_add(f).unwrap(), &cert.m_class);
                    }
                }
            }
        }
        assert!(engine.report_count() > 0);
    }

    #[test]
    fn negative_control_finds_witness() {
        let t1 = surface(1).unwrap();
        let engine = Engine::new();
        let base = DivisorClass::new(3, 4);
        let failing = enumerate_configurations(2, t1, None)
            .unwrap()
            .map(|c| engine.verify_with_base(&c, t1, base).unwrap())
            .filter(|c| !c.passed)
            .count();
        assert!(failing > 0);
    }

    #[test]
    fn multi_point_k1_is_external() {
        let c = cfg(1, &[1, 1], &[(FullA, &[0]), (FullA, &[1])], &[&[0], &[1]]);
        assert_eq!(Engine::new().verify(&c, surface(1).unwrap()).unwrap_err(), Error::ExternallyCertified);
        let single = JetConfiguration::single_point(1, FullA);
        assert!(Engine::new().verify(&single, surface(1).unwrap()).unwrap().passed);
    }
}
