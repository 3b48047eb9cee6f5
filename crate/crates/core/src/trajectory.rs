//! Time-ordered snapshots with optional dyadic thinning.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::SmallnessReport;
use crate::grid::Field;

/// Snapshots kept per octave once they are older than half the latest time.
pub const DYADIC_PER_OCTAVE: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    All,
    #[default]
    Dyadic,
}

/// Per-snapshot diagnostics recorded by the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub smallness: SmallnessReport,
    /// Mean of the slope (periodic grids) or of the stored field.
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub field: Field,
    pub info: Option<SnapshotInfo>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    snapshots: Vec<Snapshot>,
    retention: Retention,
}

impl Trajectory {
    pub fn new(retention: Retention) -> Self {
        Self {
            snapshots: Vec::new(),
            retention,
        }
    }

    /// Build from fields with strictly increasing times (no thinning applied).
    pub fn from_fields(fields: Vec<Field>) -> Result<Self> {
        let mut traj = Self::new(Retention::All);
        for f in fields {
            traj.push(f, None)?;
        }
        Ok(traj)
    }

    pub fn retention(&self) -> Retention {
        self.retention
    }

    pub fn push(&mut self, field: Field, info: Option<SnapshotInfo>) -> Result<()> {
        if let Some(last) = self.snapshots.last() {
            if !(field.time() > last.field.time()) {
                return Err(invalid(format!(
                    "snapshot at t = {} does not follow t = {}",
                    field.time(),
                    last.field.time()
                )));
            }
            last.field.ensure_same_grid(&field)?;
        }
        self.snapshots.push(Snapshot { field, info });
        if self.retention == Retention::Dyadic {
            self.thin();
        }
        Ok(())
    }

    // Older than t_latest / 2: keep, per slot [2^{j + i/8}, 2^{j + (i+1)/8}),
    // the snapshot closest (in log time) to the slot's left edge.
    fn thin(&mut self) {
        let latest = match self.snapshots.last() {
            Some(s) => s.field.time(),
            None => return,
        };
        let cutoff = 0.5 * latest;
        let per = DYADIC_PER_OCTAVE as f64;
        let slot_of = |t: f64| {
            let l = t.log2() * per;
            // tolerate rounding just below a slot edge
            let s = (l + 1e-9).floor();
            (s as i64, l - s)
        };
        let mut keep = vec![true; self.snapshots.len()];
        let mut best: std::collections::HashMap<i64, (usize, f64)> = Default::default();
        for (i, s) in self.snapshots.iter().enumerate() {
            let t = s.field.time();
            if t <= 0.0 || t > cutoff {
                continue;
            }
            let (slot, offset) = slot_of(t);
            match best.get(&slot) {
                Some(&(_, d)) if d <= offset.abs() => keep[i] = false,
                Some(&(j, _)) => {
                    keep[j] = false;
                    best.insert(slot, (i, offset.abs()));
                }
                None => {
                    best.insert(slot, (i, offset.abs()));
                }
            }
        }
        if keep.iter().all(|&k| k) {
            return;
        }
        let mut it = keep.into_iter();
        self.snapshots.retain(|_| it.next().unwrap_or(true));
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn fields(&self) -> impl Iterator<Item = &Field> {
        self.snapshots.iter().map(|s| &s.field)
    }

    pub fn times(&self) -> Vec<f64> {
        self.fields().map(Field::time).collect()
    }

    pub fn first(&self) -> Option<&Field> {
        self.snapshots.first().map(|s| &s.field)
    }

    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last().map(|s| &s.field)
    }

    /// Snapshot whose time equals `t` up to `1e-9` relative.
    pub fn at(&self, t: f64) -> Option<&Field> {
        let tol = 1e-9 * t.abs().max(1e-300);
        self.fields().find(|f| (f.time() - t).abs() <= tol)
    }

    /// Snapshots with time in `(t/2, t]`, sorted by time.
    pub fn window(&self, t: f64) -> Result<Vec<&Field>> {
        let tol = 1e-12 * t.abs();
        let w: Vec<&Field> = self
            .fields()
            .filter(|f| f.time() > 0.5 * t + tol && f.time() <= t + tol)
            .collect();
        if w.len() < 2 {
            return Err(Error::EmptyWindow { t });
        }
        Ok(w)
    }

    /// Map every snapshot through `f`, keeping times and diagnostics.
    pub fn map_fields(&self, f: impl Fn(&Field) -> Result<Field>) -> Result<Self> {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| {
                Ok(Snapshot {
                    field: f(&s.field)?,
                    info: s.info.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            snapshots,
            retention: self.retention,
        })
    }
}
