//! JSON checkpoints of a walk, so long sweeps can stop and resume.
//!
//! Saving streams the overlay straight to disk and loading parses it into a
//! flat buffer, so checkpoints of very long walks stay within memory.

use std::collections::HashMap;
use std::fmt;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::{self, DeserializeSeed, IgnoredAny, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::config::ConfigRule;
use crate::error::{Error, Result};
use crate::lattice::{Dimension, Direction, LatticePoint};
use crate::output::write_atomic_with;
use crate::rotor::{ExitRecord, RotorOrder, WalkState, DEFAULT_DENSE_SITE_LIMIT};

pub const FORMAT: &str = "rotorlab-ckpt";
pub const VERSION: u64 = 1;

/// One overlay site: `[[coords], label]` or `[[coords], label, [per-direction departures]]`.
#[derive(Serialize)]
#[serde(untagged)]
enum EntryOut<'a> {
    Counted(LatticePoint, u8, &'a [u64]),
    Plain(LatticePoint, u8),
}

struct OverlayOut<'a>(&'a WalkState);

impl Serialize for OverlayOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let departures = self.0.departures();
        s.collect_seq(self.0.field().overlay_iter().map(|(p, label)| {
            match departures.and_then(|m| m.get(&p)) {
                Some(counts) => EntryOut::Counted(p, label.0, counts),
                None => EntryOut::Plain(p, label.0),
            }
        }))
    }
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    format: &'static str,
    version: u64,
    d: usize,
    rule: serde_json::Value,
    order: String,
    step_count: u64,
    position: &'a LatticePoint,
    origin_visits: u64,
    max_norm_seen: u64,
    instrumented: bool,
    exit_records: &'a [ExitRecord],
    overlay: OverlayOut<'a>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<serde_json::Value>,
    version: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct CheckpointIn {
    d: usize,
    rule: serde_json::Value,
    order: String,
    step_count: u64,
    position: LatticePoint,
    origin_visits: u64,
    max_norm_seen: u64,
    #[serde(default)]
    instrumented: bool,
    exit_records: Vec<ExitRecord>,
    overlay: FlatOverlay,
}

/// Overlay entries packed into flat arrays: `width` coordinates per entry,
/// and `counts_width` departure counts for each entry flagged in `counted`.
#[derive(Default)]
struct FlatOverlay {
    width: Option<usize>,
    coords: Vec<i64>,
    labels: Vec<u8>,
    counted: Vec<bool>,
    counts_width: Option<usize>,
    counts: Vec<u64>,
}

impl FlatOverlay {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn push(
        &mut self,
        coords: &[i64],
        label: u64,
        counts: Option<&[u64]>,
    ) -> std::result::Result<(), String> {
        if *self.width.get_or_insert(coords.len()) != coords.len() {
            return Err("overlay entries have mixed dimensions".into());
        }
        let label = u8::try_from(label).map_err(|_| format!("label {label} out of range"))?;
        self.coords.extend_from_slice(coords);
        self.labels.push(label);
        self.counted.push(counts.is_some());
        if let Some(c) = counts {
            if *self.counts_width.get_or_insert(c.len()) != c.len() {
                return Err("departure counts have mixed lengths".into());
            }
            self.counts.extend_from_slice(c);
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for FlatOverlay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct OverlayVisitor;
        impl<'de> Visitor<'de> for OverlayVisitor {
            type Value = FlatOverlay;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of overlay entries")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<FlatOverlay, A::Error> {
                let mut out = FlatOverlay::default();
                while seq.next_element_seed(EntrySeed(&mut out))?.is_some() {}
                Ok(out)
            }
        }
        d.deserialize_seq(OverlayVisitor)
    }
}

struct EntrySeed<'a>(&'a mut FlatOverlay);

impl<'de> DeserializeSeed<'de> for EntrySeed<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<(), D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for EntrySeed<'_> {
    type Value = ();
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("[[coords], label] or [[coords], label, [departures]]")
    }
    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
        let coords: SmallVec<[i64; 4]> = seq
            .next_element()?
            .ok_or_else(|| de::Error::invalid_length(0, &self))?;
        let label: u64 = seq
            .next_element()?
            .ok_or_else(|| de::Error::invalid_length(1, &self))?;
        let counts: Option<SmallVec<[u64; 8]>> = seq.next_element()?;
        if seq.next_element::<IgnoredAny>()?.is_some() {
            return Err(de::Error::invalid_length(4, &self));
        }
        self.0
            .push(&coords, label, counts.as_deref())
            .map_err(de::Error::custom)
    }
}

/// A restored walk together with the exit records gathered before the save.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: WalkState,
    pub exit_records: Vec<ExitRecord>,
}

pub fn save(state: &WalkState, exit_records: &[ExitRecord], path: &Path) -> Result<()> {
    let file = CheckpointOut {
        format: FORMAT,
        version: VERSION,
        d: state.dim().get(),
        rule: state.rule().to_json(),
        order: state.order().to_string(),
        step_count: state.step_count(),
        position: state.position(),
        origin_visits: state.origin_visits(),
        max_norm_seen: state.max_norm_seen(),
        instrumented: state.departures().is_some(),
        exit_records,
        overlay: OverlayOut(state),
    };
    write_atomic_with(path, |w| {
        serde_json::to_writer(w, &file).map_err(std::io::Error::from)
    })
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let corrupt = |reason: String| Error::CorruptCheckpoint {
        path: PathBuf::from(path),
        reason,
    };
    let open = || {
        std::fs::File::open(path)
            .map(BufReader::new)
            .map_err(|e| Error::io(path, e))
    };
    let header: Header = serde_json::from_reader(open()?).map_err(|e| corrupt(e.to_string()))?;
    if header.format.as_ref().and_then(|f| f.as_str()) != Some(FORMAT) {
        return Err(corrupt("missing or unknown format tag".into()));
    }
    match header.version.as_ref().and_then(|v| v.as_u64()) {
        Some(VERSION) => {}
        Some(found) => {
            return Err(Error::CheckpointVersion {
                found,
                expected: VERSION,
            })
        }
        None => return Err(corrupt("missing version".into())),
    }
    let file: CheckpointIn =
        serde_json::from_reader(open()?).map_err(|e| corrupt(e.to_string()))?;
    restore(file).map_err(|e| match e {
        Error::CorruptCheckpoint { .. } => e,
        other => corrupt(other.to_string()),
    })
}

/// Loads and rejects checkpoints written for another dimension.
pub fn load_expecting(path: &Path, dim: Dimension) -> Result<Checkpoint> {
    let ck = load(path)?;
    if ck.state.dim() != dim {
        return Err(Error::CheckpointDimension {
            expected: dim.get(),
            found: ck.state.dim().get(),
        });
    }
    Ok(ck)
}

fn restore(file: CheckpointIn) -> Result<Checkpoint> {
    let dim = Dimension::new(file.d)?;
    let rule = ConfigRule::from_json(&file.rule, dim)?;
    let order = RotorOrder::parse(&file.order, dim)?;
    file.position.check_dim(dim)?;
    let overlay = file.overlay;
    let malformed = |message: &str| Error::InvalidConfig {
        field: "overlay".into(),
        message: message.into(),
    };
    if let Some(got) = overlay.width.filter(|&w| w != dim.get()) {
        return Err(Error::DimensionMismatch {
            expected: dim.get(),
            got,
        });
    }
    if overlay.counts_width.is_some_and(|w| w != dim.directions()) {
        return Err(malformed("departure counts have wrong length"));
    }
    let mut state = WalkState::starting_at(rule, order, file.position)?;
    state.step_count = file.step_count;
    state.origin_visits = file.origin_visits;
    state.max_norm_seen = file.max_norm_seen;
    let radius = overlay
        .coords
        .iter()
        .map(|c| c.unsigned_abs())
        .max()
        .unwrap_or(0);
    state.declare_box(radius, DEFAULT_DENSE_SITE_LIMIT);

    let mut departures = file.instrumented.then(HashMap::new);
    let (w, cw) = (dim.get(), dim.directions());
    let mut counts = overlay.counts.chunks_exact(cw);
    for i in 0..overlay.len() {
        let p = LatticePoint::from_slice(&overlay.coords[i * w..(i + 1) * w]);
        let label: Direction = dim.check_label(overlay.labels[i] as u64)?;
        if overlay.counted[i] {
            let c = counts.next().expect("one count row per counted entry");
            if let Some(map) = departures.as_mut() {
                map.insert(p.clone(), c.to_vec());
            }
        }
        state.field.set(p, label);
    }
    if let Some(map) = &departures {
        let total: u64 = map.values().flatten().sum();
        if total != state.step_count {
            return Err(malformed(&format!(
                "departures sum to {total}, step_count is {}",
                state.step_count
            )));
        }
    }
    state.departures = departures;
    Ok(Checkpoint {
        state,
        exit_records: file.exit_records,
    })
}
