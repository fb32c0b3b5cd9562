//! The seven types of hyperelliptic surfaces.
//!
//! Each type is stored with its group label, the multiplicities of the
//! singular fibres of the elliptic fibration onto P^1, and the two invariants
//! `mu = lcm(m_1, ..., m_s)` and `gamma = |G|`. Divisor classes are written in
//! the basis `A/mu, (mu/gamma) B`, so that fibre classes become small integer
//! pairs (see [`SurfaceType::fibre_classes`]).

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::DivisorClass;

/// The kind of a fibre a configuration point can lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FibreKind {
    /// Reduced singular fibre of minimal class `A/mu`.
    SingularA,
    /// Singular fibre `m A/mu` with `1 < m < mu` (types 3, 4, 7 only).
    IntermediateA,
    /// Smooth fibre `A`.
    FullA,
    /// Fibre of the other fibration, in its minimal effective multiple.
    B,
}

impl FibreKind {
    pub fn is_a(self) -> bool {
        !matches!(self, FibreKind::B)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurfaceType {
    pub type_id: u32,
    pub group: &'static str,
    pub multiplicities: &'static [u32],
    pub mu: u32,
    pub gamma: u32,
}

static CATALOG: [SurfaceType; 7] = [
    SurfaceType { type_id: 1, group: "Z2", multiplicities: &[2, 2, 2, 2], mu: 2, gamma: 2 },
    SurfaceType { type_id: 2, group: "Z2xZ2", multiplicities: &[2, 2, 2, 2], mu: 2, gamma: 4 },
    SurfaceType { type_id: 3, group: "Z4", multiplicities: &[2, 4, 4], mu: 4, gamma: 4 },
    SurfaceType { type_id: 4, group: "Z4xZ2", multiplicities: &[2, 4, 4], mu: 4, gamma: 8 },
    SurfaceType { type_id: 5, group: "Z3", multiplicities: &[3, 3, 3], mu: 3, gamma: 3 },
    SurfaceType { type_id: 6, group: "Z3xZ3", multiplicities: &[3, 3, 3], mu: 3, gamma: 9 },
    SurfaceType { type_id: 7, group: "Z6", multiplicities: &[2, 3, 6], mu: 6, gamma: 6 },
];

/// All seven types, in type order.
pub fn catalog() -> &'static [SurfaceType] {
    &CATALOG
}

pub fn surface(type_id: u32) -> Result<&'static SurfaceType> {
    CATALOG
        .iter()
        .find(|s| s.type_id == type_id)
        .ok_or(Error::UnknownSurfaceType(type_id))
}

impl SurfaceType {
    /// `mu / gamma` as a reduced fraction `(num, den)`.
    pub fn mu_over_gamma(&self) -> (u32, u32) {
        let g = self.mu.gcd(&self.gamma);
        (self.mu / g, self.gamma / g)
    }

    /// Whether the vertical class `(0, b) = b (mu/gamma) B` is effective,
    /// i.e. `b * mu / gamma` is a non-negative integer.
    pub fn is_vertical_effective(&self, b: i64) -> bool {
        b >= 0 && (b * i64::from(self.mu)) % i64::from(self.gamma) == 0
    }

    /// True when `(0,1)` itself is the class of a fibre of the second
    /// fibration. This holds exactly for the odd types; on even types the
    /// minimal effective vertical class is a proper multiple.
    pub fn has_unit_b_fibre(&self) -> bool {
        self.is_vertical_effective(1)
    }

    /// Coefficient `gamma/mu` of the fibre `B` in the basis `A/mu, (mu/gamma) B`.
    pub fn b_multiple(&self) -> i64 {
        i64::from(self.gamma / self.mu)
    }

    /// Smallest coefficient `c` with `1 < c < mu` such that `c A/mu` is a
    /// singular fibre, if any.
    pub fn intermediate_multiple(&self) -> Option<i64> {
        self.multiplicities
            .iter()
            .map(|m| self.mu / m)
            .filter(|&c| c > 1 && c < self.mu)
            .min()
            .map(i64::from)
    }

    /// The A-fibre kinds that occur on this type.
    pub fn a_kinds(&self) -> Vec<FibreKind> {
        let mut kinds = vec![FibreKind::SingularA];
        if self.intermediate_multiple().is_some() {
            kinds.push(FibreKind::IntermediateA);
        }
        kinds.push(FibreKind::FullA);
        kinds
    }

    /// Class checked against a fibre of the given kind. Intermediate singular
    /// fibres are represented by the smallest intermediate multiple, whose
    /// intersections bound all of them from below.
    pub fn fibre_class(&self, kind: FibreKind) -> Result<DivisorClass> {
        match kind {
            FibreKind::SingularA => Ok(DivisorClass::new(1, 0)),
            FibreKind::IntermediateA => self
                .intermediate_multiple()
                .map(|c| DivisorClass::new(c, 0))
                .ok_or_else(|| {
                    Error::InvalidConfiguration(format!(
                        "type {} has no intermediate singular fibres",
                        self.type_id
                    ))
                }),
            FibreKind::FullA => Ok(DivisorClass::new(i64::from(self.mu), 0)),
            FibreKind::B => Ok(DivisorClass::new(0, self.b_multiple())),
        }
    }

    /// Every fibre class the case engine intersects against.
    pub fn fibre_classes(&self) -> Vec<(DivisorClass, FibreKind)> {
        let mut out: Vec<_> = self
            .a_kinds()
            .into_iter()
            .map(|k| (self.fibre_class(k).expect("kind listed for this type"), k))
            .collect();
        out.push((DivisorClass::new(0, self.b_multiple()), FibreKind::B));
        out
    }
}

/// JSON shape of one catalog row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub type_id: u32,
    pub group: String,
    pub multiplicities: Vec<u32>,
    pub mu: u32,
    pub gamma: u32,
    pub fibre_classes: Vec<FibreClassEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibreClassEntry {
    pub class: DivisorClass,
    pub kind: FibreKind,
}

impl From<&SurfaceType> for CatalogEntry {
    fn from(s: &SurfaceType) -> Self {
        CatalogEntry {
            type_id: s.type_id,
            group: s.group.to_string(),
            multiplicities: s.multiplicities.to_vec(),
            mu: s.mu,
            gamma: s.gamma,
            fibre_classes: s
                .fibre_classes()
                .into_iter()
                .map(|(class, kind)| FibreClassEntry { class, kind })
                .collect(),
        }
    }
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    catalog().iter().map(CatalogEntry::from).collect()
}
