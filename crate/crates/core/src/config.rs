//! Initial rotor configurations: total maps from lattice points to labels.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Dimension, Direction, LatticePoint};

/// Label used wherever no coordinate strictly dominates the others.
pub const DEFAULT_CASE_LABEL: Direction = Direction(1);

/// A finite point→label table with a fallback label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitTable {
    pub default: Direction,
    entries: HashMap<LatticePoint, Direction>,
}

impl ExplicitTable {
    pub fn new(
        dim: Dimension,
        default: Direction,
        entries: impl IntoIterator<Item = (LatticePoint, Direction)>,
    ) -> Result<Self> {
        check_label(dim, default)?;
        let mut map = HashMap::new();
        for (p, label) in entries {
            p.check_dim(dim)?;
            check_label(dim, label)?;
            map.insert(p, label);
        }
        Ok(ExplicitTable {
            default,
            entries: map,
        })
    }

    pub fn get(&self, p: &LatticePoint) -> Direction {
        self.entries.get(p).copied().unwrap_or(self.default)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn sorted_entries(&self) -> Vec<(LatticePoint, Direction)> {
        let mut v: Vec<_> = self.entries.iter().map(|(p, l)| (p.clone(), *l)).collect();
        v.sort();
        v
    }
}

/// On-disk form of a table rule: `{"default": label, "entries": [[[coords], label], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableFile {
    default: u64,
    entries: Vec<(LatticePoint, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// The first departure from every site with a strictly dominant
    /// coordinate moves one step toward the origin along that axis.
    TowardOrigin,
    /// The published case table, reproduced line for line. Its `x_1 < 0`
    /// and `x_d > 0` lines point away from the origin.
    PaperLiteral,
    Uniform(Direction),
    Table(Arc<ExplicitTable>),
}

/// An initial rotor configuration in a fixed dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigRule {
    dim: Dimension,
    kind: RuleKind,
}

fn check_label(dim: Dimension, label: Direction) -> Result<()> {
    dim.check_label(label.0 as u64).map(|_| ())
}

/// Axis `i` with `|p_i| > |p_j|` for every `j != i` and `p_i != 0`.
fn strict_max_axis(p: &LatticePoint) -> Option<usize> {
    let coords = p.coords();
    let mut best = 0usize;
    let mut best_abs = 0u64;
    let mut tied = true;
    for (i, c) in coords.iter().enumerate() {
        let a = c.unsigned_abs();
        if i == 0 || a > best_abs {
            best = i;
            best_abs = a;
            tied = false;
        } else if a == best_abs {
            tied = true;
        }
    }
    if tied || best_abs == 0 {
        None
    } else {
        Some(best)
    }
}

impl ConfigRule {
    pub fn toward_origin(dim: Dimension) -> Self {
        ConfigRule {
            dim,
            kind: RuleKind::TowardOrigin,
        }
    }

    pub fn paper_literal(dim: Dimension) -> Self {
        ConfigRule {
            dim,
            kind: RuleKind::PaperLiteral,
        }
    }

    pub fn uniform(dim: Dimension, label: Direction) -> Result<Self> {
        check_label(dim, label)?;
        Ok(ConfigRule {
            dim,
            kind: RuleKind::Uniform(label),
        })
    }

    pub fn table(dim: Dimension, table: ExplicitTable) -> Self {
        ConfigRule {
            dim,
            kind: RuleKind::Table(Arc::new(table)),
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    /// The label of `p` before any rotor has moved. `p` must have `d`
    /// coordinates; this is checked in debug builds only since it sits on
    /// the step path.
    pub fn initial_label(&self, p: &LatticePoint) -> Direction {
        debug_assert_eq!(p.dim(), self.dim.get());
        let d = self.dim.get();
        match &self.kind {
            RuleKind::TowardOrigin => match strict_max_axis(p) {
                Some(i) if p.coords()[i] < 0 => Direction(i as u8),
                Some(i) => Direction((d + i) as u8),
                None => DEFAULT_CASE_LABEL,
            },
            RuleKind::PaperLiteral => match strict_max_axis(p) {
                Some(0) if p.coords()[0] < 0 => Direction((2 * d - 1) as u8),
                Some(i) if p.coords()[i] < 0 => Direction(i as u8),
                Some(i) if i == d - 1 => Direction((2 * d - 2) as u8),
                Some(i) => Direction((d + i) as u8),
                None => DEFAULT_CASE_LABEL,
            },
            RuleKind::Uniform(label) => *label,
            RuleKind::Table(t) => t.get(p),
        }
    }

    /// Checked variant of [`ConfigRule::initial_label`].
    pub fn label_at(&self, p: &LatticePoint) -> Result<Direction> {
        p.check_dim(self.dim)?;
        Ok(self.initial_label(p))
    }

    /// Parses `toward-origin | paper-literal | uniform:<label> | table:<path>`.
    pub fn parse(spec: &str, dim: Dimension) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "toward-origin" => return Ok(Self::toward_origin(dim)),
            "paper-literal" => return Ok(Self::paper_literal(dim)),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("uniform:") {
            let label: u64 = rest
                .parse()
                .map_err(|_| Error::InvalidRule(format!("bad uniform label {rest:?}")))?;
            return Self::uniform(dim, dim.check_label(label)?);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Self::load_table(Path::new(path), dim);
        }
        Err(Error::InvalidRule(format!(
            "unknown rule {spec:?} (expected toward-origin, paper-literal, uniform:<label> or table:<path>)"
        )))
    }

    pub fn load_table(path: &Path, dim: Dimension) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TableFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidRule(format!("{}: {e}", path.display())))?;
        Self::from_table_file(file, dim)
    }

    fn from_table_file(file: TableFile, dim: Dimension) -> Result<Self> {
        let default = dim.check_label(file.default)?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for (p, label) in file.entries {
            entries.push((p, dim.check_label(label)?));
        }
        Ok(Self::table(dim, ExplicitTable::new(dim, default, entries)?))
    }

    /// Self-contained JSON description, used in checkpoints.
    pub fn to_json(&self) -> serde_json::Value {
        match &self.kind {
            RuleKind::TowardOrigin => serde_json::json!({"kind": "toward-origin"}),
            RuleKind::PaperLiteral => serde_json::json!({"kind": "paper-literal"}),
            RuleKind::Uniform(l) => serde_json::json!({"kind": "uniform", "label": l.0}),
            RuleKind::Table(t) => {
                let file = TableFile {
                    default: t.default.0 as u64,
                    entries: t
                        .sorted_entries()
                        .into_iter()
                        .map(|(p, l)| (p, l.0 as u64))
                        .collect(),
                };
                serde_json::json!({"kind": "table", "default": file.default, "entries": file.entries})
            }
        }
    }

    pub fn from_json(value: &serde_json::Value, dim: Dimension) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::InvalidRule("missing rule kind".into()))?;
        match kind {
            "toward-origin" => Ok(Self::toward_origin(dim)),
            "paper-literal" => Ok(Self::paper_literal(dim)),
            "uniform" => {
                let label = value
                    .get("label")
                    .and_then(|l| l.as_u64())
                    .ok_or_else(|| Error::InvalidRule("uniform rule without label".into()))?;
                Self::uniform(dim, dim.check_label(label)?)
            }
            "table" => {
                let file: TableFile = serde_json::from_value(value.clone())
                    .map_err(|e| Error::InvalidRule(format!("table rule: {e}")))?;
                Self::from_table_file(file, dim)
            }
            other => Err(Error::InvalidRule(format!("unknown rule kind {other:?}"))),
        }
    }
}

impl fmt::Display for ConfigRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RuleKind::TowardOrigin => write!(f, "toward-origin"),
            RuleKind::PaperLiteral => write!(f, "paper-literal"),
            RuleKind::Uniform(l) => write!(f, "uniform:{l}"),
            RuleKind::Table(t) => write!(f, "table({} entries, default {})", t.len(), t.default),
        }
    }
}
