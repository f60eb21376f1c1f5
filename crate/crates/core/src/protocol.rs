//! Communication-component algebra and the builtin protocol structures.
//!
//! A protocol is an ordered list of components, one per phase. Phase 0 is
//! the fault-status phase (non-faulty nodes are its activated nodes);
//! component `k` of the list is phase `k + 1`.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Message-exchange pattern of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    /// One-to-many: primary to every node.
    A,
    /// Many-to-one: every node to the primary.
    B,
    /// Many-to-many: every activated node to every other.
    C,
}

/// Minimum number of activated nodes a phase requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdSpec {
    NMinusF,
    FPlusOne,
    Explicit(u32),
}

impl ThresholdSpec {
    pub fn resolve(self, n: usize, f: usize) -> i64 {
        match self {
            ThresholdSpec::NMinusF => n as i64 - f as i64,
            ThresholdSpec::FPlusOne => f as i64 + 1,
            ThresholdSpec::Explicit(v) => v as i64,
        }
    }

    /// Whether the phase counts towards the first-order failure term.
    fn is_quorum(self, n: usize, f: usize) -> bool {
        match self {
            ThresholdSpec::NMinusF => true,
            ThresholdSpec::FPlusOne => false,
            ThresholdSpec::Explicit(v) => v as usize + f == n,
        }
    }
}

impl Serialize for ThresholdSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThresholdSpec::NMinusF => s.serialize_str("n-f"),
            ThresholdSpec::FPlusOne => s.serialize_str("f+1"),
            ThresholdSpec::Explicit(v) => s.serialize_u32(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ThresholdVisitor;

        impl Visitor<'_> for ThresholdVisitor {
            type Value = ThresholdSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"n-f\", \"f+1\" or a positive integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v {
                    "n-f" => Ok(ThresholdSpec::NMinusF),
                    "f+1" => Ok(ThresholdSpec::FPlusOne),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                match u32::try_from(v) {
                    Ok(v) if v >= 1 => Ok(ThresholdSpec::Explicit(v)),
                    _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                if v >= 1 {
                    self.visit_u64(v as u64)
                } else {
                    Err(E::invalid_value(de::Unexpected::Signed(v), &self))
                }
            }
        }

        d.deserialize_any(ThresholdVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Component {
    pub kind: GraphKind,
    /// Phase-dependence offset: phase `j` draws its candidates from phase `j - r`.
    pub r: u32,
    pub m: ThresholdSpec,
}

impl Component {
    pub const fn new(kind: GraphKind, r: u32, m: ThresholdSpec) -> Self {
        Component { kind, r, m }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolStructure {
    pub name: String,
    pub components: Vec<Component>,
}

/// Crash (n = 2f-ish) or Byzantine (n = 3f-ish) fault model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cft,
    Bft,
}

impl Family {
    /// Largest tolerated fault count for `n` backups.
    pub fn default_f(self, n: usize) -> usize {
        match self {
            Family::Cft => n / 2,
            Family::Bft => n / 3,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cft" => Ok(Family::Cft),
            "bft" => Ok(Family::Bft),
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Raft,
    Paxos,
    Pbft,
    Hotstuff,
    HotstuffVariant,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Raft,
        Builtin::Paxos,
        Builtin::Pbft,
        Builtin::Hotstuff,
        Builtin::HotstuffVariant,
    ];

    /// The four protocols of the classic comparison tables.
    pub const CLASSIC: [Builtin; 4] = [
        Builtin::Raft,
        Builtin::Paxos,
        Builtin::Pbft,
        Builtin::Hotstuff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Raft => "raft",
            Builtin::Paxos => "paxos",
            Builtin::Pbft => "pbft",
            Builtin::Hotstuff => "hotstuff",
            Builtin::HotstuffVariant => "hotstuff_variant",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Builtin::Raft | Builtin::Paxos => Family::Cft,
            Builtin::Pbft | Builtin::Hotstuff | Builtin::HotstuffVariant => Family::Bft,
        }
    }

    pub fn structure(self) -> ProtocolStructure {
        use GraphKind::*;
        use ThresholdSpec::*;
        let c = Component::new;
        let components = match self {
            Builtin::Raft => vec![c(A, 1, NMinusF), c(B, 1, NMinusF)],
            Builtin::Paxos => vec![
                c(A, 1, NMinusF),
                c(B, 1, NMinusF),
                c(A, 3, NMinusF),
                c(B, 1, NMinusF),
            ],
            Builtin::Pbft => vec![
                c(A, 1, NMinusF),
                c(C, 1, NMinusF),
                c(C, 1, FPlusOne),
                c(B, 1, FPlusOne),
            ],
            Builtin::Hotstuff => vec![
                c(A, 1, NMinusF),
                c(B, 1, NMinusF),
                c(A, 2, NMinusF),
                c(B, 1, NMinusF),
                c(A, 2, NMinusF),
                c(B, 1, NMinusF),
                c(A, 2, NMinusF),
                c(B, 1, FPlusOne),
            ],
            Builtin::HotstuffVariant => vec![
                c(A, 1, NMinusF),
                c(B, 1, NMinusF),
                c(A, 3, NMinusF),
                c(B, 1, NMinusF),
                c(A, 5, NMinusF),
                c(B, 1, NMinusF),
                c(A, 7, NMinusF),
                c(B, 1, FPlusOne),
            ],
        };
        ProtocolStructure {
            name: self.name().to_string(),
            components,
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

pub fn builtin_protocol(name: &str) -> Result<ProtocolStructure> {
    Ok(name.parse::<Builtin>()?.structure())
}

/// Phase-dependence tree: edge `(j - r_j) -> j` for every phase `j ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceTree {
    /// `children[j]` in ascending order, for `j` in `0..=|G|`.
    pub children: Vec<Vec<usize>>,
    /// `parent[j]`; `None` only for the root.
    pub parent: Vec<Option<usize>>,
    pub leaves: Vec<usize>,
    /// Root-to-leaf phase lists, ordered by leaf.
    pub paths: Vec<Vec<usize>>,
}

impl DependenceTree {
    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }
}

impl ProtocolStructure {
    pub fn new(name: impl Into<String>, components: Vec<Component>) -> Self {
        ProtocolStructure {
            name: name.into(),
            components,
        }
    }

    pub fn phases(&self) -> usize {
        self.components.len()
    }

    /// Component of phase `j` (1-based).
    pub fn component(&self, phase: usize) -> &Component {
        &self.components[phase - 1]
    }

    pub fn parent_of(&self, phase: usize) -> usize {
        phase - self.component(phase).r as usize
    }

    pub fn has_c_graph(&self) -> bool {
        self.components.iter().any(|c| c.kind == GraphKind::C)
    }

    fn check_shape(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::EmptyStructure);
        }
        for (idx, c) in self.components.iter().enumerate() {
            let phase = idx + 1;
            if c.r == 0 || c.r as usize > phase {
                return Err(Error::ROutOfRange {
                    phase,
                    r: c.r as usize,
                });
            }
        }
        Ok(())
    }

    pub fn dependence_tree(&self) -> Result<DependenceTree> {
        self.check_shape()?;
        let size = self.phases() + 1;
        let mut children = vec![Vec::new(); size];
        let mut parent = vec![None; size];
        for j in 1..size {
            let p = self.parent_of(j);
            children[p].push(j);
            parent[j] = Some(p);
        }
        let leaves: Vec<usize> = (0..size).filter(|&j| children[j].is_empty()).collect();
        let paths = leaves
            .iter()
            .map(|&leaf| {
                let mut path = vec![leaf];
                let mut cur = leaf;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                path
            })
            .collect();
        Ok(DependenceTree {
            children,
            parent,
            leaves,
            paths,
        })
    }

    pub fn validate(&self, n: usize, f: usize) -> Result<ResolvedStructure> {
        validate_structure(self, n, f)
    }

    /// Root-to-leaf paths truncated after their last quorum (`n - f`) phase.
    ///
    /// Phases requiring only `f + 1` activated nodes are dropped; a path left
    /// with nothing beyond phase 0 is discarded. Duplicates are kept.
    pub fn first_order_paths(&self, n: usize, f: usize) -> Result<Vec<Vec<usize>>> {
        let resolved = self.validate(n, f)?;
        Ok(resolved.first_order_paths())
    }

    /// Chain structure (all `r = 1`) visiting the given phases in order.
    pub fn path_structure(&self, path: &[usize]) -> Result<ProtocolStructure> {
        if path.first() != Some(&0) {
            return Err(Error::InvalidStructure(
                "path must start at phase 0".to_string(),
            ));
        }
        let mut components = Vec::with_capacity(path.len().saturating_sub(1));
        for &phase in &path[1..] {
            if phase == 0 || phase > self.phases() {
                return Err(Error::InvalidStructure(format!(
                    "phase {phase} is not in {}",
                    self.name
                )));
            }
            let c = self.component(phase);
            components.push(Component::new(c.kind, 1, c.m));
        }
        let label: Vec<String> = path.iter().map(usize::to_string).collect();
        Ok(ProtocolStructure::new(
            format!("{}[{}]", self.name, label.join(",")),
            components,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("protocol structures always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: ProtocolStructure =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        g.check_shape()?;
        Ok(g)
    }
}

/// A structure checked against a concrete `(n, f)` with every threshold resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedStructure {
    pub structure: ProtocolStructure,
    pub n: usize,
    pub f: usize,
    /// `m[j]` for `j` in `0..=|G|`; `m[0] = n - f`.
    pub m: Vec<usize>,
    pub tree: DependenceTree,
}

impl ResolvedStructure {
    pub fn phases(&self) -> usize {
        self.structure.phases()
    }

    pub fn kind(&self, phase: usize) -> GraphKind {
        self.structure.component(phase).kind
    }

    pub fn parent_of(&self, phase: usize) -> usize {
        self.structure.parent_of(phase)
    }

    /// Resolved thresholds for phases `1..=|G|`.
    pub fn thresholds(&self) -> &[usize] {
        &self.m[1..]
    }

    /// Explicit thresholds below `f + 1` sit outside the analysed regime.
    pub fn outside_regime(&self) -> bool {
        self.structure.components.iter().any(|c| {
            matches!(c.m, ThresholdSpec::Explicit(v) if (v as usize) < self.f + 1)
        })
    }

    pub fn first_order_paths(&self) -> Vec<Vec<usize>> {
        let (n, f) = (self.n, self.f);
        self.tree
            .paths
            .iter()
            .filter_map(|path| {
                let last = path
                    .iter()
                    .rposition(|&j| j != 0 && self.structure.component(j).m.is_quorum(n, f))?;
                Some(path[..=last].to_vec())
            })
            .collect()
    }
}

pub fn validate_structure(g: &ProtocolStructure, n: usize, f: usize) -> Result<ResolvedStructure> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".to_string()));
    }
    if f >= n {
        return Err(Error::InvalidParams(format!("f = {f} must be below n = {n}")));
    }
    g.check_shape()?;
    let mut m = Vec::with_capacity(g.phases() + 1);
    m.push(n - f);
    for (idx, c) in g.components.iter().enumerate() {
        let value = c.m.resolve(n, f);
        if value < 1 || value > n as i64 {
            return Err(Error::MOutOfRange {
                phase: idx + 1,
                m: value,
                n,
            });
        }
        m.push(value as usize);
    }
    Ok(ResolvedStructure {
        structure: g.clone(),
        n,
        f,
        m,
        tree: g.dependence_tree()?,
    })
}
