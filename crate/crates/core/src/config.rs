//! Jet configurations up to relabelling, and their case classification.
//!
//! A configuration is a set of `r` distinct points with positive jet weights
//! `k_1, ..., k_r` summing to `k + 1`, together with the way the points share
//! fibres. Every point lies on exactly one fibre of each fibration, so the
//! incidence data is a pair of set partitions of the points: one into
//! A-fibres (each tagged with its kind) and one into B-fibres. An A-fibre and
//! a B-fibre share at most one point.
//!
//! Enumeration works on connected components of the bipartite incidence
//! graph. A component is a matrix whose rows are A-fibres, columns are
//! B-fibres and nonzero cells are points carrying their weight. Components
//! are generated by adding one point at a time and deduplicated by a
//! canonical form; configurations are multisets of components.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{FibreKind, SurfaceType};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FibreBlock {
    pub kind: FibreKind,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetConfiguration {
    pub k: u32,
    pub weights: Vec<u32>,
    pub a_blocks: Vec<FibreBlock>,
    pub b_blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseLabel {
    R1,
    I,
    IIa,
    IIb,
    IIIa,
    IIIb,
    IV,
    #[serde(rename = "SingM-a")]
    SingMa,
    #[serde(rename = "SingM-b")]
    SingMb,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 9] = [
        CaseLabel::R1,
        CaseLabel::I,
        CaseLabel::IIa,
        CaseLabel::IIb,
        CaseLabel::IIIa,
        CaseLabel::IIIb,
        CaseLabel::IV,
        CaseLabel::SingMa,
        CaseLabel::SingMb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::R1 => "R1",
            CaseLabel::I => "I",
            CaseLabel::IIa => "IIa",
            CaseLabel::IIb => "IIb",
            CaseLabel::IIIa => "IIIa",
            CaseLabel::IIIb => "IIIb",
            CaseLabel::IV => "IV",
            CaseLabel::SingMa => "SingM-a",
            CaseLabel::SingMb => "SingM-b",
        }
    }

    /// Cases proved with Kawamata-Viehweg (nef and big twist); the others use
    /// Norimatsu's lemma with an SNC correction.
    pub fn uses_kawamata_viehweg(self) -> bool {
        matches!(self, CaseLabel::R1 | CaseLabel::I | CaseLabel::IIIa | CaseLabel::SingMa)
    }

    pub fn has_correction(self) -> bool {
        !self.uses_kawamata_viehweg()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VanishingTheorem {
    KawamataViehweg,
    Norimatsu,
}

impl CaseLabel {
    pub fn vanishing_theorem(self) -> VanishingTheorem {
        if self.uses_kawamata_viehweg() {
            VanishingTheorem::KawamataViehweg
        } else {
            VanishingTheorem::Norimatsu
        }
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown case label {s:?}")))
    }
}

impl JetConfiguration {
    pub fn r(&self) -> usize {
        self.weights.len()
    }

    /// The single-point configuration on an A-fibre of the given kind.
    pub fn single_point(k: u32, kind: FibreKind) -> Self {
        JetConfiguration {
            k,
            weights: vec![k + 1],
            a_blocks: vec![FibreBlock { kind, points: vec![0] }],
            b_blocks: vec![vec![0]],
        }
    }

    pub fn a_block_of(&self, point: usize) -> Option<usize> {
        self.a_blocks.iter().position(|b| b.points.contains(&point))
    }

    pub fn b_block_of(&self, point: usize) -> Option<usize> {
        self.b_blocks.iter().position(|b| b.contains(&point))
    }

    pub fn block_weight(&self, points: &[usize]) -> u32 {
        points.iter().map(|&i| self.weights[i]).sum()
    }

    /// Structural validity: weights, both partitions, the one-point rule.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfiguration(m));
        let r = self.r();
        if r == 0 {
            return bad("configuration has no points".into());
        }
        if self.weights.contains(&0) {
            return bad("jet weights must be positive".into());
        }
        let total: u64 = self.weights.iter().map(|&w| u64::from(w)).sum();
        if total != u64::from(self.k) + 1 {
            return bad(format!("weights sum to {total}, expected k+1 = {}", self.k + 1));
        }
        let check_partition = |blocks: Vec<&Vec<usize>>, name: &str| -> Result<()> {
            let mut seen = vec![false; r];
            for b in blocks {
                if b.is_empty() {
                    return Err(Error::InvalidConfiguration(format!("empty {name} block")));
                }
                for &p in b {
                    if p >= r || seen[p] {
                        return Err(Error::InvalidConfiguration(format!(
                            "{name} blocks are not a partition of the points"
                        )));
                    }
                    seen[p] = true;
                }
            }
            if seen.iter().all(|&s| s) {
                Ok(())
            } else {
                Err(Error::InvalidConfiguration(format!("{name} blocks miss a point")))
            }
        };
        check_partition(self.a_blocks.iter().map(|b| &b.points).collect(), "A")?;
        check_partition(self.b_blocks.iter().collect(), "B")?;
        if self.a_blocks.iter().any(|b| !b.kind.is_a()) {
            return bad("A block tagged with kind b".into());
        }
        for a in &self.a_blocks {
            for b in &self.b_blocks {
                if a.points.iter().filter(|p| b.contains(p)).count() > 1 {
                    return bad("an A-fibre and a B-fibre share more than one point".into());
                }
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, s: &SurfaceType) -> Result<()> {
        self.validate()?;
        let kinds = s.a_kinds();
        match self.a_blocks.iter().find(|b| !kinds.contains(&b.kind)) {
            Some(b) => Err(Error::InvalidConfiguration(format!(
                "fibre kind {:?} does not occur on type {}",
                b.kind, s.type_id
            ))),
            None => Ok(()),
        }
    }
}

/// Weight sum of a block as an exact rational.
pub fn fibre_weight_sum(cfg: &JetConfiguration, points: &[usize]) -> Rational64 {
    Rational64::from_integer(i64::from(cfg.block_weight(points)))
}

/// The threshold `(k+1)/2` separating light and heavy fibres.
pub fn heavy_threshold(k: u32) -> Rational64 {
    Rational64::new(i64::from(k) + 1, 2)
}

/// Compares a block weight with `(k+1)/2` without leaving the integers.
fn cmp_half(weight: u32, k: u32) -> Ordering {
    (2 * u64::from(weight)).cmp(&(u64::from(k) + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: CaseLabel,
    /// Index into `a_blocks` of the fibre with weight above `(k+1)/2`.
    pub heavy_a: Option<usize>,
    /// Index into `b_blocks` of the B-fibre used by the b-variants and IV.
    pub heavy_b: Option<usize>,
    /// Point lying on both heavy fibres (IIb, IIIb, SingM-b).
    pub shared: Option<usize>,
}

pub fn classify(cfg: &JetConfiguration, s: &SurfaceType) -> Result<Classification> {
    match cfg.k {
        0 => return Err(Error::UnsupportedK(0)),
        1 => return Err(Error::ExternallyCertified),
        _ => {}
    }
    cfg.validate_for(s)?;
    let k = cfg.k;
    let mut out = Classification { label: CaseLabel::I, heavy_a: None, heavy_b: None, shared: None };
    if cfg.r() == 1 {
        out.label = CaseLabel::R1;
        return Ok(out);
    }
    let use_b = s.has_unit_b_fibre();
    let heavy_a = cfg
        .a_blocks
        .iter()
        .position(|b| cmp_half(cfg.block_weight(&b.points), k) == Ordering::Greater);
    if let Some(ai) = heavy_a {
        let block = &cfg.a_blocks[ai];
        out.heavy_a = Some(ai);
        let partner = if use_b {
            // Among qualifying B-fibres prefer the heaviest, then the one
            // through most points, then the first.
            let mut best: Option<(usize, usize, (u32, usize))> = None;
            for (bi, b) in cfg.b_blocks.iter().enumerate() {
                let Some(shared) = block.points.iter().copied().find(|p| b.contains(p)) else {
                    continue;
                };
                let w = cfg.block_weight(b);
                if cmp_half(w, k) != Ordering::Less && best.is_none_or(|(_, _, key)| (w, b.len()) > key) {
                    best = Some((bi, shared, (w, b.len())));
                }
            }
            best.map(|(bi, shared, _)| (bi, shared))
        } else {
            None
        };
        if let Some((bi, p)) = partner {
            out.heavy_b = Some(bi);
            out.shared = Some(p);
        }
        out.label = match (block.kind, partner.is_some()) {
            (FibreKind::SingularA, false) => CaseLabel::IIa,
            (FibreKind::SingularA, true) => CaseLabel::IIb,
            (FibreKind::FullA, false) => CaseLabel::IIIa,
            (FibreKind::FullA, true) => CaseLabel::IIIb,
            (FibreKind::IntermediateA, false) => CaseLabel::SingMa,
            (FibreKind::IntermediateA, true) => CaseLabel::SingMb,
            (FibreKind::B, _) => unreachable!("validated A blocks carry A kinds"),
        };
        return Ok(out);
    }
    if use_b {
        if let Some(bi) = cfg
            .b_blocks
            .iter()
            .position(|b| cmp_half(cfg.block_weight(b), k) == Ordering::Greater)
        {
            out.heavy_b = Some(bi);
            out.label = CaseLabel::IV;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Components.

/// A connected incidence component. Row kinds are indices into the kind list
/// of the owning [`ComponentLibrary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub weight: u32,
    pub row_kinds: Vec<u8>,
    pub ncols: u8,
    /// `(row, col, weight)` for each point.
    pub cells: Vec<(u8, u8, u8)>,
}

impl Component {
    pub fn points(&self) -> usize {
        self.cells.len()
    }

    fn matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; usize::from(self.ncols)]; self.row_kinds.len()];
        for &(r, c, w) in &self.cells {
            m[usize::from(r)][usize::from(c)] = w;
        }
        m
    }

    /// Canonical form under row and column permutations. Permutes whichever
    /// side is shorter and sorts the other.
    fn canonical(&self) -> (Vec<u8>, Component) {
        let m = self.matrix();
        let nr = self.row_kinds.len();
        let nc = usize::from(self.ncols);
        let mut best: Option<Vec<u8>> = None;
        if nr <= nc {
            for p in permutations(nr) {
                let mut cols: Vec<Vec<u8>> =
                    (0..nc).map(|j| p.iter().map(|&i| m[i][j]).collect()).collect();
                cols.sort_unstable();
                let mut key = vec![0u8, nr as u8, nc as u8];
                key.extend(p.iter().map(|&i| self.row_kinds[i]));
                key.extend(cols.into_iter().flatten());
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        } else {
            for p in permutations(nc) {
                let mut rows: Vec<Vec<u8>> = (0..nr)
                    .map(|i| {
                        let mut row = vec![self.row_kinds[i]];
                        row.extend(p.iter().map(|&j| m[i][j]));
                        row
                    })
                    .collect();
                rows.sort_unstable();
                let mut key = vec![1u8, nr as u8, nc as u8];
                key.extend(rows.into_iter().flatten());
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        }
        let key = best.expect("at least one permutation");
        let comp = Component::decode(&key, self.weight);
        (key, comp)
    }

    fn decode(key: &[u8], weight: u32) -> Component {
        let (side, nr, nc) = (key[0], usize::from(key[1]), usize::from(key[2]));
        let body = &key[3..];
        let mut cells = Vec::new();
        let row_kinds;
        if side == 0 {
            row_kinds = body[..nr].to_vec();
            for j in 0..nc {
                for i in 0..nr {
                    let w = body[nr + j * nr + i];
                    if w > 0 {
                        cells.push((i as u8, j as u8, w));
                    }
                }
            }
        } else {
            let mut kinds = Vec::with_capacity(nr);
            for i in 0..nr {
                let row = &body[i * (nc + 1)..(i + 1) * (nc + 1)];
                kinds.push(row[0]);
                for j in 0..nc {
                    if row[1 + j] > 0 {
                        cells.push((i as u8, j as u8, row[1 + j]));
                    }
                }
            }
            row_kinds = kinds;
        }
        Component { weight, row_kinds, ncols: nc as u8, cells }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).permutations(n).collect()
}

/// All connected components up to a maximum weight for a given list of
/// A-fibre kinds, sorted by weight and then canonical key.
#[derive(Debug)]
pub struct ComponentLibrary {
    pub kinds: Vec<FibreKind>,
    pub max_weight: u32,
    pub components: Vec<Component>,
    /// `starts[w]..starts[w+1]` is the index range of weight `w`.
    starts: Vec<usize>,
}

impl ComponentLibrary {
    pub fn build(kinds: &[FibreKind], max_weight: u32) -> ComponentLibrary {
        let nk = kinds.len() as u8;
        let mw = max_weight as usize;
        let mut levels: Vec<BTreeSet<Vec<u8>>> = vec![BTreeSet::new(); mw + 1];
        for w in 1..=max_weight {
            for kd in 0..nk {
                let c = Component { weight: w, row_kinds: vec![kd], ncols: 1, cells: vec![(0, 0, w as u8)] };
                levels[w as usize].insert(c.canonical().0);
            }
        }
        for tot in 1..=mw {
            let keys: Vec<Vec<u8>> = levels[tot].iter().cloned().collect();
            for key in keys {
                let base = Component::decode(&key, tot as u32);
                let nr = base.row_kinds.len() as u8;
                let nc = base.ncols;
                let occupied: HashSet<(u8, u8)> = base.cells.iter().map(|&(r, c, _)| (r, c)).collect();
                for w in 1..=(mw - tot) {
                    let new_weight = (tot + w) as u32;
                    let mut push = |c: Component| {
                        levels[tot + w].insert(c.canonical().0);
                    };
                    let with_cell = |row_kinds: Vec<u8>, ncols: u8, cell: (u8, u8, u8)| {
                        let mut cells = base.cells.clone();
                        cells.push(cell);
                        Component { weight: new_weight, row_kinds, ncols, cells }
                    };
                    for r in 0..nr {
                        for c in 0..nc {
                            if !occupied.contains(&(r, c)) {
                                push(with_cell(base.row_kinds.clone(), nc, (r, c, w as u8)));
                            }
                        }
                        push(with_cell(base.row_kinds.clone(), nc + 1, (r, nc, w as u8)));
                    }
                    for c in 0..nc {
                        for kd in 0..nk {
                            let mut kinds = base.row_kinds.clone();
                            kinds.push(kd);
                            push(with_cell(kinds, nc, (nr, c, w as u8)));
                        }
                    }
                }
            }
        }
        let mut components = Vec::new();
        let mut starts = vec![0usize; mw + 2];
        for w in 1..=mw {
            starts[w] = components.len();
            components.extend(levels[w].iter().map(|key| Component::decode(key, w as u32)));
        }
        starts[mw + 1] = components.len();
        starts[0] = 0;
        ComponentLibrary { kinds: kinds.to_vec(), max_weight, components, starts }
    }

    pub fn count_of_weight(&self, w: u32) -> usize {
        let w = w as usize;
        if w == 0 || w > self.max_weight as usize {
            return 0;
        }
        self.starts[w + 1] - self.starts[w]
    }

    /// Largest index `<= limit` whose component fits the remaining budget.
    fn candidate(&self, limit: usize, rem_w: u32, rem_p: usize) -> Option<usize> {
        let w = rem_w.min(self.max_weight) as usize;
        let top = limit.min(self.starts[w + 1].checked_sub(1)?);
        (0..=top).rev().find(|&j| self.components[j].points() <= rem_p)
    }

    fn assemble(&self, k: u32, chosen: &[usize]) -> JetConfiguration {
        // Points in component order, then relabelled by non-increasing weight.
        let mut points: Vec<(u32, usize, usize)> = Vec::new();
        let mut row_kinds: Vec<FibreKind> = Vec::new();
        let mut ncols = 0usize;
        for &ci in chosen {
            let c = &self.components[ci];
            let (row0, col0) = (row_kinds.len(), ncols);
            row_kinds.extend(c.row_kinds.iter().map(|&kd| self.kinds[usize::from(kd)]));
            ncols += usize::from(c.ncols);
            for &(r, col, w) in &c.cells {
                points.push((u32::from(w), row0 + usize::from(r), col0 + usize::from(col)));
            }
        }
        points.sort_by_key(|p| std::cmp::Reverse(p.0));
        let weights = points.iter().map(|p| p.0).collect();
        let mut a_points = vec![Vec::new(); row_kinds.len()];
        let mut b_points = vec![Vec::new(); ncols];
        for (i, &(_, r, c)) in points.iter().enumerate() {
            a_points[r].push(i);
            b_points[c].push(i);
        }
        let mut a_blocks: Vec<FibreBlock> = a_points
            .into_iter()
            .zip(row_kinds)
            .map(|(points, kind)| FibreBlock { kind, points })
            .collect();
        a_blocks.sort_by(|x, y| x.points[0].cmp(&y.points[0]));
        b_points.sort_by_key(|b| b[0]);
        JetConfiguration { k, weights, a_blocks, b_blocks: b_points }
    }
}

/// Streams every configuration with `sum k_i = k+1` and at most `r_max`
/// points, one per isomorphism class.
pub struct ConfigurationIter {
    lib: Arc<ComponentLibrary>,
    k: u32,
    chosen: Vec<usize>,
    rem_w: u32,
    rem_p: usize,
    started: bool,
    done: bool,
}

impl ConfigurationIter {
    pub fn new(lib: Arc<ComponentLibrary>, k: u32, r_max: usize) -> Result<Self> {
        if k + 1 > lib.max_weight {
            return Err(Error::InvalidInput(format!(
                "component library built up to weight {}, need {}",
                lib.max_weight,
                k + 1
            )));
        }
        Ok(ConfigurationIter {
            lib,
            k,
            chosen: Vec::new(),
            rem_w: k + 1,
            rem_p: r_max,
            started: false,
            done: false,
        })
    }

    fn push(&mut self, j: usize) {
        let c = &self.lib.components[j];
        self.rem_w -= c.weight;
        self.rem_p -= c.points();
        self.chosen.push(j);
    }

    fn pop(&mut self) -> Option<usize> {
        let j = self.chosen.pop()?;
        let c = &self.lib.components[j];
        self.rem_w += c.weight;
        self.rem_p += c.points();
        Some(j)
    }

    /// Replaces the top of the stack with the next smaller candidate,
    /// popping exhausted levels.
    fn backtrack(&mut self) -> bool {
        while let Some(j) = self.pop() {
            if j == 0 {
                continue;
            }
            let upper = self.chosen.last().copied().unwrap_or(usize::MAX).min(j - 1);
            if let Some(next) = self.lib.candidate(upper, self.rem_w, self.rem_p) {
                self.push(next);
                return true;
            }
        }
        false
    }
}

impl Iterator for ConfigurationIter {
    type Item = JetConfiguration;

    fn next(&mut self) -> Option<JetConfiguration> {
        if self.done {
            return None;
        }
        if self.started && !self.backtrack() {
            self.done = true;
            return None;
        }
        self.started = true;
        loop {
            if self.rem_w == 0 {
                return Some(self.lib.assemble(self.k, &self.chosen));
            }
            let upper = self.chosen.last().copied().unwrap_or(usize::MAX);
            match self.lib.candidate(upper, self.rem_w, self.rem_p) {
                Some(j) => self.push(j),
                None => {
                    if !self.backtrack() {
                        self.done = true;
                        return None;
                    }
                }
            }
        }
    }
}

/// Configurations for one surface type, building a fresh component library.
pub fn enumerate_configurations(k: u32, s: &SurfaceType, r_max: Option<usize>) -> Result<ConfigurationIter> {
    if k < 2 {
        return Err(if k == 1 { Error::ExternallyCertified } else { Error::UnsupportedK(k) });
    }
    let n = k as usize + 1;
    let r_max = r_max.unwrap_or(n);
    if r_max == 0 || r_max > n {
        return Err(Error::InvalidInput(format!("r_max must lie in 1..={n}")));
    }
    let lib = Arc::new(ComponentLibrary::build(&s.a_kinds(), k + 1));
    ConfigurationIter::new(lib, k, r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::surface;
    use std::collections::HashMap;

    fn cfg(k: u32, weights: &[u32], a: &[(FibreKind, &[usize])], b: &[&[usize]]) -> JetConfiguration {
        JetConfiguration {
            k,
            weights: weights.to_vec(),
            a_blocks: a.iter().map(|(kind, p)| FibreBlock { kind: *kind, points: p.to_vec() }).collect(),
            b_blocks: b.iter().map(|p| p.to_vec()).collect(),
        }
    }

    use FibreKind::*;

    #[test]
    fn threshold_examples() {
        let c = cfg(3, &[2, 2], &[(SingularA, &[0, 1])], &[&[0], &[1]]);
        assert!(fibre_weight_sum(&c, &[0, 1]) > heavy_threshold(3));
        let c = cfg(2, &[2, 1], &[(FullA, &[0]), (FullA, &[1])], &[&[0], &[1]]);
        assert!(fibre_weight_sum(&c, &[0]) > heavy_threshold(2));
        assert!(fibre_weight_sum(&c, &[1]) < heavy_threshold(2));
        let c = cfg(5, &[1; 6], &[(FullA, &[0, 1, 2]), (FullA, &[3, 4, 5])], &[&[0, 3], &[1, 4], &[2, 5]]);
        for b in &c.a_blocks {
            assert!(fibre_weight_sum(&c, &b.points) <= heavy_threshold(5));
        }
    }

    #[test]
    fn classification_examples() {
        let t1 = surface(1).unwrap();
        let c = cfg(2, &[1, 1, 1], &[(FullA, &[0]), (FullA, &[1]), (FullA, &[2])], &[&[0], &[1], &[2]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::I);
        let c = cfg(3, &[1, 1, 1, 1], &[(SingularA, &[0, 1, 2]), (FullA, &[3])], &[&[0], &[1], &[2], &[3]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::IIa);
        // The B-fibre through a point of weight 2 > 3/2 is itself heavy.
        let c = cfg(2, &[2, 1], &[(SingularA, &[0, 1])], &[&[0], &[1]]);
        let cl = classify(&c, t1).unwrap();
        assert_eq!((cl.label, cl.shared, cl.heavy_b), (CaseLabel::IIb, Some(0), Some(0)));
        let c = cfg(3, &[2, 1, 1], &[(SingularA, &[0, 1]), (FullA, &[2])], &[&[0], &[1, 2]]);
        let cl = classify(&c, t1).unwrap();
        assert_eq!(cl.label, CaseLabel::IIb);
        assert_eq!(cl.shared, Some(1));
        let c = cfg(3, &[2, 1, 1], &[(FullA, &[0, 1]), (FullA, &[2])], &[&[0], &[1, 2]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::IIIb);
        let c = cfg(2, &[2, 1], &[(FullA, &[0]), (FullA, &[1])], &[&[0, 1]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::IIIb);
        let four_singles: Vec<(FibreKind, &[usize])> = vec![(FullA, &[0]), (FullA, &[1]), (FullA, &[2]), (FullA, &[3])];
        let c = cfg(3, &[1, 1, 1, 1], &four_singles, &[&[0, 1, 2], &[3]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::IV);
        // A B block of weight exactly (k+1)/2 is not heavy for IV.
        let c = cfg(3, &[1, 1, 1, 1], &[(FullA, &[0]), (FullA, &[1]), (FullA, &[2]), (FullA, &[3])], &[&[0, 1], &[2, 3]]);
        assert_eq!(classify(&c, t1).unwrap().label, CaseLabel::I);
        let single = JetConfiguration::single_point(4, FullA);
        assert_eq!(classify(&single, t1).unwrap().label, CaseLabel::R1);
    }

    #[test]
    fn even_types_ignore_b_blocks() {
        let t2 = surface(2).unwrap();
        let c = cfg(3, &[2, 1, 1], &[(SingularA, &[0, 1]), (FullA, &[2])], &[&[0], &[1, 2]]);
        assert_eq!(classify(&c, t2).unwrap().label, CaseLabel::IIa);
        let four_singles: Vec<(FibreKind, &[usize])> = vec![(FullA, &[0]), (FullA, &[1]), (FullA, &[2]), (FullA, &[3])];
        let c = cfg(3, &[1, 1, 1, 1], &four_singles, &[&[0, 1, 2], &[3]]);
        assert_eq!(classify(&c, t2).unwrap().label, CaseLabel::I);
    }

    #[test]
    fn intermediate_kind_only_where_it_exists() {
        let c = cfg(2, &[1, 1, 1], &[(IntermediateA, &[0, 1, 2])], &[&[0], &[1], &[2]]);
        assert!(classify(&c, surface(1).unwrap()).is_err());
        assert_eq!(classify(&c, surface(3).unwrap()).unwrap().label, CaseLabel::SingMa);
        let c = cfg(2, &[2, 1], &[(IntermediateA, &[0, 1])], &[&[0, 1]]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let t1 = surface(1).unwrap();
        let c = cfg(2, &[1, 1], &[(FullA, &[0]), (FullA, &[1])], &[&[0], &[1]]);
        assert!(matches!(classify(&c, t1), Err(Error::InvalidConfiguration(_))));
        let c = cfg(1, &[1, 1], &[(FullA, &[0]), (FullA, &[1])], &[&[0], &[1]]);
        assert_eq!(classify(&c, t1), Err(Error::ExternallyCertified));
        let c = cfg(2, &[2, 1], &[(FullA, &[0])], &[&[0], &[1]]);
        assert!(c.validate().is_err());
        let c = cfg(2, &[2, 1], &[(B, &[0, 1])], &[&[0], &[1]]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn labels_round_trip() {
        for l in CaseLabel::ALL {
            assert_eq!(l.name().parse::<CaseLabel>().unwrap(), l);
            let js = serde_json::to_string(&l).unwrap();
            assert_eq!(js, format!("\"{}\"", l.name()));
        }
    }

    #[test]
    fn component_counts_by_weight() {
        let lib = ComponentLibrary::build(&[SingularA, FullA], 4);
        // Weight 1: one point on either kind. Weight 2: a single point of
        // weight 2 (2 kinds), or two weight-1 points sharing an A-fibre
        // (2 kinds) or a B-fibre (3 kind multisets).
        assert_eq!(lib.count_of_weight(1), 2);
        assert_eq!(lib.count_of_weight(2), 2 + 2 + 3);
    }

    fn count(kinds: &[FibreKind], k: u32) -> usize {
        let lib = Arc::new(ComponentLibrary::build(kinds, k + 1));
        ConfigurationIter::new(lib, k, k as usize + 1).unwrap().count()
    }

    #[test]
    fn counts_match_reference() {
        let two = [SingularA, FullA];
        let three = [SingularA, IntermediateA, FullA];
        let expect2 = [2, 10, 36, 152, 590, 2472, 10206];
        let expect3 = [3, 18, 83, 423, 2043, 10296];
        for (i, &e) in expect2.iter().enumerate() {
            assert_eq!(count(&two, i as u32), e, "two kinds, n = {}", i + 1);
        }
        for (i, &e) in expect3.iter().enumerate() {
            assert_eq!(count(&three, i as u32), e, "three kinds, n = {}", i + 1);
        }
    }

    /// Canonical form of a labelled configuration under point relabelling.
    fn brute_canonical(c: &JetConfiguration) -> Vec<u64> {
        use itertools::Itertools;
        let r = c.r();
        let mut best: Option<Vec<u64>> = None;
        for p in (0..r).permutations(r) {
            // p[old] = new
            let mut w = vec![0u64; r];
            for i in 0..r {
                w[p[i]] = u64::from(c.weights[i]);
            }
            let mut a: Vec<Vec<u64>> = c
                .a_blocks
                .iter()
                .map(|b| {
                    let mut v: Vec<u64> = b.points.iter().map(|&i| p[i] as u64).collect();
                    v.sort();
                    let mut row = vec![b.kind as u64, v.len() as u64];
                    row.extend(v);
                    row
                })
                .collect();
            a.sort();
            let mut bb: Vec<Vec<u64>> = c
                .b_blocks
                .iter()
                .map(|b| {
                    let mut v: Vec<u64> = b.iter().map(|&i| p[i] as u64).collect();
                    v.sort();
                    v.insert(0, v.len() as u64);
                    v
                })
                .collect();
            bb.sort();
            let mut key = w;
            key.push(u64::MAX);
            key.extend(a.into_iter().flatten());
            key.push(u64::MAX);
            key.extend(bb.into_iter().flatten());
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
        best.unwrap()
    }

    fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = vec![vec![]];
        for i in 0..n {
            let mut next = Vec::new();
            for p in out {
                for j in 0..p.len() {
                    let mut q: Vec<Vec<usize>> = p.clone();
                    q[j].push(i);
                    next.push(q);
                }
                let mut q = p.clone();
                q.push(vec![i]);
                next.push(q);
            }
            out = next;
        }
        out
    }

    fn compositions(n: u32) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        (1..=n)
            .flat_map(|first| {
                compositions(n - first).into_iter().map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
            })
            .collect()
    }

    /// Every labelled configuration, reduced to isomorphism classes.
    fn brute_force_classes(kinds: &[FibreKind], k: u32) -> HashSet<Vec<u64>> {
        use itertools::Itertools;
        let mut out = HashSet::new();
        for weights in compositions(k + 1) {
            let r = weights.len();
            for ap in set_partitions(r) {
                for kind_choice in (0..ap.len()).map(|_| kinds.iter().copied()).multi_cartesian_product() {
                    for bp in set_partitions(r) {
                        let c = JetConfiguration {
                            k,
                            weights: weights.clone(),
                            a_blocks: ap
                                .iter()
                                .zip(&kind_choice)
                                .map(|(p, &kind)| FibreBlock { kind, points: p.clone() })
                                .collect(),
                            b_blocks: bp.clone(),
                        };
                        if c.validate().is_ok() {
                            out.insert(brute_canonical(&c));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for kinds in [&[SingularA, FullA][..], &[SingularA, IntermediateA, FullA][..]] {
            for k in 2..=4 {
                let lib = Arc::new(ComponentLibrary::build(kinds, k + 1));
                let got: Vec<JetConfiguration> =
                    ConfigurationIter::new(lib, k, k as usize + 1).unwrap().collect();
                let mut seen = HashSet::new();
                for c in &got {
                    c.validate().unwrap();
                    assert!(c.weights.windows(2).all(|w| w[0] >= w[1]));
                    assert!(seen.insert(brute_canonical(c)), "duplicate class {c:?}");
                }
                assert_eq!(seen, brute_force_classes(kinds, k), "k = {k}, {} kinds", kinds.len());
            }
        }
    }

    #[test]
    fn r_max_restricts_point_count() {
        let lib = Arc::new(ComponentLibrary::build(&[SingularA, FullA], 4));
        let all: Vec<_> = ConfigurationIter::new(lib.clone(), 3, 4).unwrap().collect();
        let capped: Vec<_> = ConfigurationIter::new(lib, 3, 2).unwrap().collect();
        assert!(capped.iter().all(|c| c.r() <= 2));
        assert_eq!(capped.len(), all.iter().filter(|c| c.r() <= 2).count());
    }

    #[test]
    fn k2_weight_multisets_and_two_point_patterns() {
        let t1 = surface(1).unwrap();
        let all: Vec<_> = enumerate_configurations(2, t1, None).unwrap().collect();
        let multisets: BTreeSet<Vec<u32>> = all.iter().map(|c| c.weights.clone()).collect();
        assert_eq!(multisets, BTreeSet::from([vec![3], vec![2, 1], vec![1, 1, 1]]));
        // Two points with weights (2,1) and both on full fibres: same A,
        // same B, or neither.
        let pats = all
            .iter()
            .filter(|c| c.weights == [2, 1] && c.a_blocks.iter().all(|b| b.kind == FullA))
            .count();
        assert_eq!(pats, 3);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let t3 = surface(3).unwrap();
        let a: Vec<_> = enumerate_configurations(4, t3, None).unwrap().collect();
        let b: Vec<_> = enumerate_configurations(4, t3, None).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn label_coverage_on_type_one() {
        let t1 = surface(1).unwrap();
        let mut seen: HashMap<CaseLabel, usize> = HashMap::new();
        for c in enumerate_configurations(3, t1, None).unwrap() {
            *seen.entry(classify(&c, t1).unwrap().label).or_default() += 1;
        }
        for l in [CaseLabel::R1, CaseLabel::I, CaseLabel::IIa, CaseLabel::IIb, CaseLabel::IIIa, CaseLabel::IIIb, CaseLabel::IV] {
            assert!(seen.contains_key(&l), "missing {l}");
        }
        let t7 = surface(7).unwrap();
        let labels: HashSet<CaseLabel> =
            enumerate_configurations(3, t7, None).unwrap().map(|c| classify(&c, t7).unwrap().label).collect();
        assert!(labels.contains(&CaseLabel::SingMa) && labels.contains(&CaseLabel::SingMb));
    }

    #[test]
    fn even_types_never_get_b_variants() {
        for t in [2, 4, 6] {
            let s = surface(t).unwrap();
            for c in enumerate_configurations(4, s, None).unwrap() {
                let l = classify(&c, s).unwrap().label;
                assert!(!matches!(l, CaseLabel::IIb | CaseLabel::IIIb | CaseLabel::SingMb | CaseLabel::IV));
            }
        }
    }
}
