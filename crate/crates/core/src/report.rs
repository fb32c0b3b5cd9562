//! Run configuration, drivers for every mode, and the on-disk formats.
//!
//! A run is described by a [`RunConfig`], assembled from command-line
//! [`Settings`] layered over an optional TOML file with the same keys.
//! [`run`] writes the primary document (summary or table) to the given
//! writer and any bundle to `--out`, and returns the exit code.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{CaseLabel, ComponentLibrary, ConfigurationIter};
use crate::engine::{standard_bundle, Certificate, Check, Engine};
use crate::error::{Error, Result};
use crate::genus::{genus_admissible, max_single_multiplicity, CurveCandidate};
use crate::lattice::DivisorClass;
use crate::lp::{box_counterexample, entails, Entailment, LinearSystem};
use crate::nonfibre::NonFibreReport;
use crate::surface::{catalog, surface, FibreKind, SurfaceType};

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Configuration.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Verify,
    Table,
    Catalog,
    NegativeControl,
    LpCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Verify => "verify",
            Mode::Table => "table",
            Mode::Catalog => "catalog",
            Mode::NegativeControl => "negative-control",
            Mode::LpCheck => "lp-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(Error::InvalidInput(format!("unknown format {s:?} (expected json or text)"))),
        }
    }
}

/// A coefficient that is either a constant or `k + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub per_k: bool,
    pub offset: i64,
}

impl Term {
    pub fn at(self, k: u32) -> i64 {
        if self.per_k { i64::from(k) + self.offset } else { self.offset }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.per_k, self.offset) {
            (false, o) => write!(f, "{o}"),
            (true, 0) => write!(f, "k"),
            (true, o) if o > 0 => write!(f, "k+{o}"),
            (true, o) => write!(f, "k{o}"),
        }
    }
}

/// Base class, possibly depending on `k`, e.g. `3,4` or `k+1,k+2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub a: Term,
    pub b: Term,
}

impl ClassSpec {
    pub fn fixed(a: i64, b: i64) -> Self {
        ClassSpec { a: Term { per_k: false, offset: a }, b: Term { per_k: false, offset: b } }
    }

    pub fn shifted(da: i64, db: i64) -> Self {
        ClassSpec { a: Term { per_k: true, offset: da }, b: Term { per_k: true, offset: db } }
    }

    pub fn at(&self, k: u32) -> DivisorClass {
        DivisorClass::new(self.a.at(k), self.b.at(k))
    }
}

impl std::fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidInput(msg)
}

fn parse_term(s: &str) -> Result<Term> {
    let s = s.trim();
    let err = || bad(format!("cannot parse class coefficient {s:?}"));
    if let Some(rest) = s.strip_prefix('k') {
        let rest = rest.trim();
        let offset = if rest.is_empty() {
            0
        } else if let Some(n) = rest.strip_prefix('+') {
            n.trim().parse().map_err(|_| err())?
        } else if let Some(n) = rest.strip_prefix('-') {
            -n.trim().parse::<i64>().map_err(|_| err())?
        } else {
            return Err(err());
        };
        Ok(Term { per_k: true, offset })
    } else {
        Ok(Term { per_k: false, offset: s.parse().map_err(|_| err())? })
    }
}

pub fn parse_class(s: &str) -> Result<ClassSpec> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(bad(format!("class {s:?} must be two comma-separated coefficients")));
    }
    Ok(ClassSpec { a: parse_term(parts[0])?, b: parse_term(parts[1])? })
}

fn parse_range(s: &str) -> Result<(u32, u32)> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad(format!("cannot parse range {s:?}")));
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        Ok((num(lo)?, num(hi)?))
    } else {
        let v = num(s)?;
        Ok((v, v))
    }
}

/// `all`, a single type, a list `1,3,5`, ranges `2..4`, or a mix.
pub fn parse_types(s: &str) -> Result<Vec<u32>> {
    if s.trim() == "all" {
        return Ok(catalog().iter().map(|t| t.type_id).collect());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let (lo, hi) = parse_range(part)?;
        if lo > hi {
            return Err(bad(format!("empty type range {part:?}")));
        }
        for t in lo..=hi {
            surface(t)?;
            out.push(t);
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(bad("no surface types selected".into()));
    }
    Ok(out)
}

/// Inclusive `lo..hi` (or `lo..=hi`, or a single value) with `lo >= 2`.
pub fn parse_k_range(s: &str) -> Result<(u32, u32)> {
    let (lo, hi) = parse_range(s)?;
    if lo > hi {
        return Err(bad(format!("empty k range {s:?}")));
    }
    match lo {
        0 => Err(Error::UnsupportedK(0)),
        1 => Err(Error::ExternallyCertified),
        _ => Ok((lo, hi)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum StringOrInts {
    Text(String),
    Int(u32),
    List(Vec<u32>),
}

impl StringOrInts {
    fn as_spec(&self) -> String {
        match self {
            StringOrInts::Text(s) => s.clone(),
            StringOrInts::Int(v) => v.to_string(),
            StringOrInts::List(v) => v.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

/// Raw settings, shared by the command line and the config file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub types: Option<StringOrInts>,
    pub k: Option<StringOrInts>,
    #[serde(alias = "r_max")]
    pub r_max: Option<usize>,
    pub class: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Settings> {
        toml::from_str(text).map_err(|e| bad(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Settings::from_toml(&text)
    }

    /// Values set here win over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            types: self.types.or(base.types),
            k: self.k.or(base.k),
            r_max: self.r_max.or(base.r_max),
            class: self.class.or(base.class),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            jobs: self.jobs.or(base.jobs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub surface_types: Vec<u32>,
    pub k_min: u32,
    pub k_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "display_opt")]
    pub class: Option<ClassSpec>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

fn display_opt<S: serde::Serializer>(c: &Option<ClassSpec>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match c {
        Some(c) => s.serialize_str(&c.to_string()),
        None => s.serialize_none(),
    }
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            surface_types: catalog().iter().map(|t| t.type_id).collect(),
            k_min: 2,
            k_max: 8,
            r_max: None,
            class: None,
            output: None,
            format: Format::Json,
            jobs: None,
        }
    }

    pub fn from_settings(mode: Mode, s: Settings) -> Result<Self> {
        let mut cfg = RunConfig::new(mode);
        if let Some(t) = s.types {
            cfg.surface_types = parse_types(&t.as_spec())?;
        }
        if let Some(k) = s.k {
            (cfg.k_min, cfg.k_max) = parse_k_range(&k.as_spec())?;
        }
        cfg.r_max = s.r_max;
        cfg.class = s.class.as_deref().map(parse_class).transpose()?;
        cfg.output = s.out;
        cfg.format = s.format.as_deref().map(str::parse).transpose()?.unwrap_or_default();
        cfg.jobs = s.jobs;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.surface_types.is_empty() {
            return Err(bad("no surface types selected".into()));
        }
        for &t in &self.surface_types {
            surface(t)?;
        }
        if self.k_min > self.k_max {
            return Err(bad("empty k range".into()));
        }
        if self.k_min < 2 {
            return Err(if self.k_min == 1 { Error::ExternallyCertified } else { Error::UnsupportedK(self.k_min) });
        }
        if self.r_max == Some(0) {
            return Err(bad("r-max must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(bad("jobs must be positive".into()));
        }
        if self.mode == Mode::NegativeControl && self.class.is_none() {
            return Err(bad("negative-control needs --class".into()));
        }
        if let Some(c) = &self.class {
            for k in self.k_min..=self.k_max {
                let d = c.at(k);
                if d.a < 1 || d.b < 1 {
                    return Err(bad(format!("class {c} evaluates to {d} at k = {k}; both coefficients must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn base_at(&self, k: u32) -> DivisorClass {
        self.class.map_or_else(|| standard_bundle(k), |c| c.at(k))
    }
}

// ---------------------------------------------------------------------------
// Golden tables.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub row: String,
    pub classes: Vec<(i64, i64)>,
    pub max_m: u32,
    pub auto_bound: u32,
    pub pairs: Vec<(u32, u32)>,
    pub tail: String,
}

#[derive(Deserialize)]
struct Rows<T> {
    rows: Vec<T>,
}

pub fn golden_lemma_table() -> Vec<LemmaRow> {
    let rows: Rows<LemmaRow> =
        serde_json::from_str(include_str!("../data/lemma_table.json")).expect("embedded table parses");
    rows.rows
}

const ROMAN: [&str; 10] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"];

fn defect(m: u32) -> i64 {
    i64::from(m) * (i64::from(m) - 1)
}

/// Largest `m <= upper` with `m(m-1) <= budget`.
fn largest_within(upper: u32, budget: i64) -> u32 {
    (0..=upper).rev().find(|&m| defect(m) <= budget).unwrap_or(0)
}

/// Recomputes the ten rows `4 >= alpha >= beta >= 1` from the genus bound.
///
/// For each first multiplicity above the automatic bound `(alpha+beta)/2`
/// the second entry is the largest value the genus budget leaves, and the
/// tail is the largest third multiplicity any such row still admits.
pub fn recompute_lemma_table() -> Result<Vec<LemmaRow>> {
    let mut rows = Vec::new();
    for a in (1..=4i64).rev() {
        for b in (1..=a).rev() {
            let cls = DivisorClass::new(a, b);
            let budget = 2 * a * b;
            let max_m = max_single_multiplicity(&cls)?;
            let auto_bound = u32::try_from((a + b) / 2).map_err(|_| Error::Overflow("auto bound"))?;
            let mut pairs = Vec::new();
            let mut tail = 0;
            for m1 in (auto_bound + 1..=max_m).rev() {
                let m2 = largest_within(m1, budget - defect(m1));
                let m3 = largest_within(m2, budget - defect(m1) - defect(m2));
                debug_assert!(genus_admissible(&CurveCandidate { cls, mults: vec![m1, m2, m3] }));
                pairs.push((m1, m2));
                tail = tail.max(m3);
            }
            let mut classes = vec![(a, b)];
            if a != b {
                classes.push((b, a));
            }
            rows.push(LemmaRow {
                row: ROMAN[rows.len()].to_string(),
                classes,
                max_m,
                auto_bound,
                pairs,
                tail: if tail <= 1 { "1".into() } else { format!("≤{tail}") },
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDiff {
    pub row: String,
    pub column: String,
    pub expected: String,
    pub actual: String,
}

fn cell<T: PartialEq + std::fmt::Debug>(out: &mut Vec<CellDiff>, row: &str, column: &str, expected: &T, actual: &T) {
    if expected != actual {
        out.push(CellDiff {
            row: row.to_string(),
            column: column.to_string(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        });
    }
}

pub fn diff_lemma_table(golden: &[LemmaRow], computed: &[LemmaRow]) -> Vec<CellDiff> {
    let mut out = Vec::new();
    cell(&mut out, "*", "rows", &golden.len(), &computed.len());
    for (g, c) in golden.iter().zip(computed) {
        cell(&mut out, &g.row, "row", &g.row, &c.row);
        cell(&mut out, &g.row, "classes", &g.classes, &c.classes);
        cell(&mut out, &g.row, "max_m", &g.max_m, &c.max_m);
        cell(&mut out, &g.row, "auto_bound", &g.auto_bound, &c.auto_bound);
        cell(&mut out, &g.row, "pairs.len", &g.pairs.len(), &c.pairs.len());
        for (i, (gp, cp)) in g.pairs.iter().zip(&c.pairs).enumerate() {
            cell(&mut out, &g.row, &format!("pairs[{i}].m1"), &gp.0, &cp.0);
            cell(&mut out, &g.row, &format!("pairs[{i}].m2"), &gp.1, &cp.1);
        }
        cell(&mut out, &g.row, "tail", &g.tail, &c.tail);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRow {
    pub type_id: u32,
    pub group: String,
    pub multiplicities: Vec<u32>,
    pub basis: (String, String),
}

pub fn golden_type_table() -> Vec<TypeRow> {
    let rows: Rows<TypeRow> =
        serde_json::from_str(include_str!("../data/surface_types.json")).expect("embedded table parses");
    rows.rows
}

pub fn type_row(s: &SurfaceType) -> TypeRow {
    let (num, den) = s.mu_over_gamma();
    let second = match (num, den) {
        (1, 1) => "B".to_string(),
        (1, d) => format!("B/{d}"),
        (n, d) => format!("{n}B/{d}"),
    };
    TypeRow {
        type_id: s.type_id,
        group: s.group.to_string(),
        multiplicities: s.multiplicities.to_vec(),
        basis: (format!("A/{}", s.mu), second),
    }
}

pub fn diff_catalog() -> Vec<CellDiff> {
    let golden = golden_type_table();
    let mut out = Vec::new();
    cell(&mut out, "*", "rows", &golden.len(), &catalog().len());
    for (g, s) in golden.iter().zip(catalog()) {
        let c = type_row(s);
        let row = g.type_id.to_string();
        cell(&mut out, &row, "type_id", &g.type_id, &c.type_id);
        cell(&mut out, &row, "group", &g.group, &c.group);
        cell(&mut out, &row, "multiplicities", &g.multiplicities, &c.multiplicities);
        cell(&mut out, &row, "basis", &g.basis, &c.basis);
    }
    out
}

// ---------------------------------------------------------------------------
// Verification runs.

/// Component libraries shared across types with the same A-fibre kinds.
pub struct Libraries {
    max_weight: u32,
    map: HashMap<Vec<FibreKind>, Arc<ComponentLibrary>>,
}

impl Libraries {
    pub fn new(k_max: u32) -> Self {
        Libraries { max_weight: k_max + 1, map: HashMap::new() }
    }

    pub fn for_type(&mut self, s: &SurfaceType) -> Arc<ComponentLibrary> {
        let kinds = s.a_kinds();
        let w = self.max_weight;
        self.map.entry(kinds.clone()).or_insert_with(|| Arc::new(ComponentLibrary::build(&kinds, w))).clone()
    }

    pub fn configurations(&mut self, s: &SurfaceType, k: u32, r_max: Option<usize>) -> Result<ConfigurationIter> {
        if k + 1 > self.max_weight {
            return Err(bad(format!("library built for k <= {}", self.max_weight - 1)));
        }
        let r = r_max.unwrap_or(k as usize + 1).min(k as usize + 1);
        ConfigurationIter::new(self.for_type(s), k, r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "witness", rename_all = "snake_case")]
pub enum WitnessKind {
    Check { check: Check },
    Curve { candidate: CurveCandidate, value: i64 },
    Implication { step: String },
}

/// A violated inequality, located in one certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub surface_type: u32,
    pub k: u32,
    pub weights: Vec<u32>,
    pub label: CaseLabel,
    pub line_bundle: DivisorClass,
    #[serde(flatten)]
    pub kind: WitnessKind,
}

pub fn witnesses_of(cert: &Certificate) -> Vec<Witness> {
    let mk = |kind| Witness {
        surface_type: cert.surface_type.unwrap_or(0),
        k: cert.config.k,
        weights: cert.config.weights.clone(),
        label: cert.label,
        line_bundle: cert.line_bundle,
        kind,
    };
    let mut out: Vec<Witness> = cert.failed_checks().map(|c| mk(WitnessKind::Check { check: c.clone() })).collect();
    if let Some(rep) = &cert.nonfibre {
        out.extend(rep.failures().map(|f| mk(WitnessKind::Curve { candidate: f.candidate.clone(), value: f.value })));
        out.extend(
            rep.unbounded.iter().filter(|u| !u.passed).map(|u| mk(WitnessKind::Implication { step: u.step.clone() })),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeKRow {
    pub surface_type: u32,
    pub k: u32,
    pub line_bundle: DivisorClass,
    pub certificates: u64,
    pub passed: u64,
    pub by_label: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerifySummary {
    pub certificates: u64,
    pub passed: u64,
    pub failed: u64,
    pub by_label: BTreeMap<String, u64>,
    pub rows: Vec<TypeKRow>,
    pub reports: usize,
    /// First witnesses in stream order.
    pub witnesses: Vec<Witness>,
}

impl VerifySummary {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn label_count(&self, label: CaseLabel) -> u64 {
        self.by_label.get(label.name()).copied().unwrap_or(0)
    }
}

const MAX_WITNESSES: usize = 32;

fn empty_label_counts() -> BTreeMap<String, u64> {
    CaseLabel::ALL.iter().map(|l| (l.name().to_string(), 0)).collect()
}

/// Where certificates go while a run is in progress.
pub trait CertificateSink {
    fn certificate(&mut self, cert: &Certificate, report_id: Option<usize>) -> Result<()>;
    fn finish(&mut self, reports: &[Arc<NonFibreReport>], summary: &VerifySummary) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl CertificateSink for NullSink {
    fn certificate(&mut self, _: &Certificate, _: Option<usize>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _: &[Arc<NonFibreReport>], _: &VerifySummary) -> Result<()> {
        Ok(())
    }
}

/// Streams a JSON bundle: header, certificates as they are merged, then the
/// referenced non-fibre reports and the summary.
pub struct JsonBundle<W: Write> {
    out: W,
    first: bool,
}

impl<W: Write> JsonBundle<W> {
    pub fn start(mut out: W, cfg: &RunConfig) -> Result<Self> {
        writeln!(out, "{{")?;
        writeln!(out, "\"schema_version\": {SCHEMA_VERSION},")?;
        writeln!(out, "\"mode\": {},", json(&cfg.mode.name())?)?;
        writeln!(out, "\"run\": {},", json(cfg)?)?;
        write!(out, "\"certificates\": [")?;
        Ok(JsonBundle { out, first: true })
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Io(e.to_string()))
}

impl<W: Write> CertificateSink for JsonBundle<W> {
    fn certificate(&mut self, cert: &Certificate, report_id: Option<usize>) -> Result<()> {
        let sep = if self.first { "\n" } else { ",\n" };
        self.first = false;
        let mut cert = cert.clone();
        cert.nonfibre_report = report_id;
        write!(self.out, "{sep}{}", json(&cert)?)?;
        Ok(())
    }

    fn finish(&mut self, reports: &[Arc<NonFibreReport>], summary: &VerifySummary) -> Result<()> {
        write!(self.out, "\n],\n\"reports\": [")?;
        for (i, r) in reports.iter().enumerate() {
            let sep = if i == 0 { "\n" } else { ",\n" };
            write!(self.out, "{sep}{}", json(r.as_ref())?)?;
        }
        write!(self.out, "\n],\n\"summary\": {}\n}}\n", json(summary)?)?;
        self.out.flush()?;
        Ok(())
    }
}

/// One fixed-width line per certificate.
pub struct TextBundle<W: Write> {
    out: W,
}

impl<W: Write> TextBundle<W> {
    pub fn start(mut out: W) -> Result<Self> {
        writeln!(out, "{:<4} {:<3} {:<8} {:<24} {:<8} {:<6} report", "type", "k", "label", "weights", "bundle", "result")?;
        Ok(TextBundle { out })
    }
}

impl<W: Write> CertificateSink for TextBundle<W> {
    fn certificate(&mut self, cert: &Certificate, report_id: Option<usize>) -> Result<()> {
        writeln!(
            self.out,
            "{:<4} {:<3} {:<8} {:<24} {:<8} {:<6} {}",
            cert.surface_type.unwrap_or(0),
            cert.config.k,
            cert.label.name(),
            format!("{:?}", cert.config.weights),
            cert.line_bundle.to_string(),
            if cert.passed { "pass" } else { "FAIL" },
            report_id.map_or("-".to_string(), |i| i.to_string()),
        )?;
        Ok(())
    }

    fn finish(&mut self, _: &[Arc<NonFibreReport>], summary: &VerifySummary) -> Result<()> {
        self.out.write_all(render_summary(summary).as_bytes())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Runs every configuration of the configured types and `k` range through
/// `engine`, merging results in a deterministic order.
pub fn run_verify(
    cfg: &RunConfig,
    engine: &Engine,
    libs: &mut Libraries,
    sink: &mut dyn CertificateSink,
) -> Result<VerifySummary> {
    let mut summary = VerifySummary { by_label: empty_label_counts(), ..Default::default() };
    let mut ids: HashMap<*const NonFibreReport, usize> = HashMap::new();
    let mut reports: Vec<Arc<NonFibreReport>> = Vec::new();
    for &t in &cfg.surface_types {
        let s = surface(t)?;
        for k in cfg.k_min..=cfg.k_max {
            let base = cfg.base_at(k);
            let mut row = TypeKRow {
                surface_type: t,
                k,
                line_bundle: base,
                certificates: 0,
                passed: 0,
                by_label: empty_label_counts(),
            };
            let configs = libs.configurations(s, k, cfg.r_max)?;
            engine.verify_stream(configs, s, |_| base, |cert| {
                let id = cert.nonfibre.as_ref().map(|rep| {
                    *ids.entry(Arc::as_ptr(rep)).or_insert_with(|| {
                        reports.push(rep.clone());
                        reports.len() - 1
                    })
                });
                row.certificates += 1;
                *row.by_label.entry(cert.label.name().to_string()).or_default() += 1;
                if cert.passed {
                    row.passed += 1;
                } else if summary.witnesses.len() < MAX_WITNESSES {
                    let room = MAX_WITNESSES - summary.witnesses.len();
                    summary.witnesses.extend(witnesses_of(&cert).into_iter().take(room));
                }
                sink.certificate(&cert, id)
            })?;
            summary.certificates += row.certificates;
            summary.passed += row.passed;
            for (l, n) in &row.by_label {
                *summary.by_label.entry(l.clone()).or_default() += n;
            }
            summary.rows.push(row);
        }
    }
    summary.failed = summary.certificates - summary.passed;
    summary.reports = reports.len();
    let counted: u64 = summary.by_label.values().sum();
    if counted != summary.certificates {
        return Err(Error::CrossCheck(format!("label counts {counted} != certificates {}", summary.certificates)));
    }
    sink.finish(&reports, &summary)?;
    Ok(summary)
}

pub fn render_summary(summary: &VerifySummary) -> String {
    let labels: Vec<&str> = CaseLabel::ALL.iter().map(|l| l.name()).collect();
    let mut s = String::new();
    let _ = write!(s, "{:<4} {:<3} {:<8} {:>9} {:>9}", "type", "k", "bundle", "configs", "passed");
    for l in &labels {
        let _ = write!(s, " {l:>7}");
    }
    s.push('\n');
    for row in &summary.rows {
        let _ = write!(
            s,
            "{:<4} {:<3} {:<8} {:>9} {:>9}",
            row.surface_type,
            row.k,
            row.line_bundle.to_string(),
            row.certificates,
            row.passed
        );
        for l in &labels {
            let _ = write!(s, " {:>7}", row.by_label.get(*l).copied().unwrap_or(0));
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<4} {:<3} {:<8} {:>9} {:>9}", "all", "", "", summary.certificates, summary.passed);
    for l in &labels {
        let _ = write!(s, " {:>7}", summary.by_label.get(*l).copied().unwrap_or(0));
    }
    let _ = writeln!(s, "\nnon-fibre reports: {}", summary.reports);
    let _ = writeln!(s, "failed certificates: {}", summary.failed);
    for w in &summary.witnesses {
        let what = match &w.kind {
            WitnessKind::Check { check } => format!("{:?}: {} vs {}", check.subject, check.value, check.bound),
            WitnessKind::Curve { candidate, value } => {
                format!("curve {} mults {:?}: {}", candidate.cls, candidate.mults, value)
            }
            WitnessKind::Implication { step } => format!("implication {step}"),
        };
        let _ = writeln!(s, "  witness type {} k {} {:?} {}: {what}", w.surface_type, w.k, w.weights, w.label);
    }
    s
}

// ---------------------------------------------------------------------------
// LP cross-checks.

/// Search box for an implication system: wide for `s`, `alpha`, `beta`,
/// and as wide as `budget` allows for the multiplicities.
pub fn box_ranges(sys: &LinearSystem, budget: u64) -> Vec<(i64, i64)> {
    let wide = |v: &str| matches!(v, "s" | "alpha" | "beta");
    let mut fixed: u64 = 1;
    let mut narrow = 0u32;
    for v in &sys.variables {
        if wide(v) {
            fixed *= if v == "s" { 25 } else { 13 };
        } else {
            narrow += 1;
        }
    }
    let mut hi = 24i64;
    while hi > 1 && narrow > 0 && fixed.saturating_mul((hi as u64 + 1).saturating_pow(narrow)) > budget {
        hi -= 1;
    }
    sys.variables
        .iter()
        .map(|v| match v.as_str() {
            "s" => (0, 24),
            "alpha" | "beta" => (0, 12),
            _ => (0, hi),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpAgreement {
    pub outcome: String,
    pub witness_verified: Option<bool>,
    pub counterexample_verified: Option<bool>,
    pub box_counterexample: Option<Vec<i64>>,
    pub agrees: bool,
}

/// Solves `sys` and compares with an integer box scan: a valid answer
/// needs a re-verified witness and an empty scan, a counterexample must
/// satisfy every hypothesis and violate the target exactly, and a scan hit
/// rules out validity.
pub fn lp_agreement(sys: &LinearSystem, ranges: &[(i64, i64)]) -> Result<LpAgreement> {
    let outcome = entails(sys)?;
    let scan = box_counterexample(sys, ranges)?;
    let (name, witness_verified, counterexample_verified) = match &outcome {
        Entailment::Valid { witness } => ("valid", Some(witness.verify(sys)), None),
        Entailment::VacuouslyValid => ("vacuously_valid", None, None),
        Entailment::CounterexampleFound { point } => {
            ("counterexample", None, Some(sys.satisfies_constraints(point) && !sys.target.holds(point)))
        }
    };
    let agrees = match &outcome {
        Entailment::Valid { .. } | Entailment::VacuouslyValid => scan.is_none() && witness_verified != Some(false),
        Entailment::CounterexampleFound { .. } => counterexample_verified == Some(true),
    };
    Ok(LpAgreement {
        outcome: name.into(),
        witness_verified,
        counterexample_verified,
        box_counterexample: scan,
        agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpInstance {
    pub step: String,
    pub system: LinearSystem,
    pub recorded_valid: bool,
    pub agreement: LpAgreement,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LpCheckSummary {
    pub reports: usize,
    pub instances: usize,
    pub distinct_systems: usize,
    pub valid: usize,
    pub disagreements: Vec<LpInstance>,
}

impl LpCheckSummary {
    pub fn all_passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

pub const BOX_BUDGET: u64 = 200_000;

/// Re-solves every implication instance held by the given reports.
pub fn lp_check_reports(reports: &[Arc<NonFibreReport>]) -> Result<LpCheckSummary> {
    use rayon::prelude::*;
    let mut seen: HashSet<&LinearSystem> = HashSet::new();
    let mut work: Vec<(&str, &LinearSystem, bool)> = Vec::new();
    let mut instances = 0;
    for rep in reports {
        for u in &rep.unbounded {
            if let Some(sys) = &u.system {
                instances += 1;
                if seen.insert(sys) {
                    work.push((&u.step, sys, u.passed));
                }
            }
        }
    }
    let results: Vec<Result<LpInstance>> = work
        .par_iter()
        .map(|&(step, sys, recorded_valid)| {
            let agreement = lp_agreement(sys, &box_ranges(sys, BOX_BUDGET))?;
            Ok(LpInstance { step: step.into(), system: sys.clone(), recorded_valid, agreement })
        })
        .collect();
    let mut summary = LpCheckSummary { reports: reports.len(), instances, distinct_systems: work.len(), ..Default::default() };
    for r in results {
        let inst = r?;
        let valid = inst.agreement.outcome == "valid" && inst.agreement.witness_verified == Some(true);
        summary.valid += usize::from(valid);
        if !inst.agreement.agrees || valid != inst.recorded_valid {
            summary.disagreements.push(inst);
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Entry point.

fn write_doc(cfg: &RunConfig, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn envelope<T: Serialize>(cfg: &RunConfig, body_key: &str, body: &T, extra: serde_json::Value) -> Result<String> {
    let mut doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode.name(),
    });
    doc[body_key] = serde_json::to_value(body).map_err(|e| Error::Io(e.to_string()))?;
    if let serde_json::Value::Object(m) = extra {
        for (k, v) in m {
            doc[k] = v;
        }
    }
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render_lemma_table(rows: &[LemmaRow]) -> String {
    let mut s = format!("{:<5} {:<12} {:>5} {:>10} {:>3} {:>3} {:>5}\n", "row", "class", "max m", "auto bound", "m1", "m2", "tail");
    for r in rows {
        let classes: Vec<String> = r.classes.iter().map(|(a, b)| format!("({a},{b})")).collect();
        let (m1, m2) = r.pairs.first().map_or((String::new(), String::new()), |p| (p.0.to_string(), p.1.to_string()));
        let _ = writeln!(
            s,
            "{:<5} {:<12} {:>5} {:>10} {:>3} {:>3} {:>5}",
            r.row,
            classes.join("|"),
            r.max_m,
            r.auto_bound,
            m1,
            m2,
            r.tail
        );
        for p in r.pairs.iter().skip(1) {
            let _ = writeln!(s, "{:<5} {:<12} {:>5} {:>10} {:>3} {:>3}", "", "", "", "", p.0, p.1);
        }
    }
    s
}

fn render_diffs(title: &str, diffs: &[CellDiff]) -> String {
    if diffs.is_empty() {
        return format!("{title}: matches golden copy\n");
    }
    let mut s = format!("{title}: {} cell(s) differ from golden copy\n", diffs.len());
    for d in diffs {
        let _ = writeln!(s, "  row {:<5} {:<14} golden {:<10} computed {}", d.row, d.column, d.expected, d.actual);
    }
    s
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn bundle_sink(cfg: &RunConfig) -> Result<Box<dyn CertificateSink>> {
    let Some(path) = &cfg.output else { return Ok(Box::new(NullSink)) };
    let file = BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
    Ok(match cfg.format {
        Format::Json => Box::new(JsonBundle::start(file, cfg)?),
        Format::Text => Box::new(TextBundle::start(file)?),
    })
}

fn verify_doc(cfg: &RunConfig, summary: &VerifySummary) -> Result<String> {
    match cfg.format {
        Format::Json => envelope(cfg, "summary", summary, serde_json::json!({ "run": cfg })),
        Format::Text => Ok(render_summary(summary)),
    }
}

/// Runs one mode and returns the process exit code: 0 when every check
/// passes (for `negative-control`, when a failure witness is found) and 1
/// otherwise. Errors are returned to the caller.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Table => {
            let computed = recompute_lemma_table()?;
            let diffs = diff_lemma_table(&golden_lemma_table(), &computed);
            let text = match cfg.format {
                Format::Json => envelope(cfg, "rows", &computed, serde_json::json!({ "diff": diffs }))?,
                Format::Text => render_lemma_table(&computed) + &render_diffs("table", &diffs),
            };
            write_doc(cfg, stdout, &text)?;
            Ok(i32::from(!diffs.is_empty()))
        }
        Mode::Catalog => {
            let entries = crate::surface::catalog_entries();
            let diffs = diff_catalog();
            let text = match cfg.format {
                Format::Json => envelope(cfg, "catalog", &entries, serde_json::json!({ "diff": diffs }))?,
                Format::Text => {
                    let mut s = format!("{:<4} {:<6} {:<12} {:>3} {:>5}  {}\n", "type", "group", "mults", "mu", "gamma", "basis");
                    for (e, s_) in entries.iter().zip(catalog()) {
                        let row = type_row(s_);
                        let mults: Vec<String> = e.multiplicities.iter().map(u32::to_string).collect();
                        let _ = writeln!(
                            s,
                            "{:<4} {:<6} {:<12} {:>3} {:>5}  {}, {}",
                            e.type_id,
                            e.group,
                            mults.join(","),
                            e.mu,
                            e.gamma,
                            row.basis.0,
                            row.basis.1
                        );
                    }
                    s + &render_diffs("catalog", &diffs)
                }
            };
            write_doc(cfg, stdout, &text)?;
            Ok(i32::from(!diffs.is_empty()))
        }
        Mode::Verify | Mode::NegativeControl => {
            let summary = with_pool(cfg.jobs, || -> Result<VerifySummary> {
                let engine = Engine::new();
                let mut libs = Libraries::new(cfg.k_max);
                let mut sink = bundle_sink(cfg)?;
                run_verify(cfg, &engine, &mut libs, sink.as_mut())
            })??;
            stdout.write_all(verify_doc(cfg, &summary)?.as_bytes())?;
            let ok = if cfg.mode == Mode::Verify { summary.all_passed() } else { !summary.witnesses.is_empty() };
            Ok(i32::from(!ok))
        }
        Mode::LpCheck => {
            let summary = with_pool(cfg.jobs, || -> Result<LpCheckSummary> {
                let engine = Engine::new();
                let mut libs = Libraries::new(cfg.k_max);
                run_verify(cfg, &engine, &mut libs, &mut NullSink)?;
                lp_check_reports(&engine.reports())
            })??;
            let text = match cfg.format {
                Format::Json => envelope(cfg, "summary", &summary, serde_json::json!({ "run": cfg }))?,
                Format::Text => {
                    let mut s = format!(
                        "reports {}  instances {}  distinct systems {}  valid {}  disagreements {}\n",
                        summary.reports,
                        summary.instances,
                        summary.distinct_systems,
                        summary.valid,
                        summary.disagreements.len()
                    );
                    for d in &summary.disagreements {
                        let _ = writeln!(s, "  {}: {:?}", d.step, d.agreement);
                    }
                    s
                }
            };
            write_doc(cfg, stdout, &text)?;
            Ok(i32::from(!summary.all_passed()))
        }
    }
}

/// Machine-readable error record for stderr.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": e.kind(), "message": e.to_string() },
    })
    .to_string()
}
