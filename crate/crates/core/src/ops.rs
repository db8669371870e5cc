//! Operation accounting at the algebra layer.
//!
//! Every pairing, G1 scalar multiplication, target-group exponentiation,
//! protocol hash and MAC reports itself through [`record`]. Counts land in the
//! `(entity, phase)` scope that is active on the current thread, and only while
//! a [`count`] call is collecting. Outside of a collection, recording is a
//! thread-local lookup and nothing else.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    User,
    Gateway,
    Sensor,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entity::User => "user",
            Entity::Gateway => "gateway",
            Entity::Sensor => "sensor",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Setup,
    Registration,
    Authentication,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Setup => "setup",
            Phase::Registration => "registration",
            Phase::Authentication => "authentication",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// P
    Pairing,
    /// M
    ScalarMul,
    /// E
    GtExp,
    /// H
    Hash,
    /// Tracked apart from H.
    Mac,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub pairings: u64,
    pub scalar_mults: u64,
    pub gt_exps: u64,
    pub hashes: u64,
    pub macs: u64,
}

impl OpCounts {
    pub const fn new(pairings: u64, scalar_mults: u64, gt_exps: u64, hashes: u64) -> Self {
        OpCounts {
            pairings,
            scalar_mults,
            gt_exps,
            hashes,
            macs: 0,
        }
    }

    fn bump(&mut self, op: Op) {
        match op {
            Op::Pairing => self.pairings += 1,
            Op::ScalarMul => self.scalar_mults += 1,
            Op::GtExp => self.gt_exps += 1,
            Op::Hash => self.hashes += 1,
            Op::Mac => self.macs += 1,
        }
    }

    /// Same counts without the MAC column.
    pub fn without_macs(self) -> Self {
        OpCounts { macs: 0, ..self }
    }

    /// Compact `3P+4M+6H` notation. MACs are not part of it.
    pub fn notation(&self) -> String {
        let parts: Vec<String> = [
            (self.pairings, "P"),
            (self.gt_exps, "E"),
            (self.scalar_mults, "M"),
            (self.hashes, "H"),
        ]
        .iter()
        .filter(|(n, _)| *n > 0)
        .map(|(n, sym)| format!("{n}{sym}"))
        .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("+")
        }
    }

    /// Signed difference `self - other` in the same notation, e.g. `+1H`.
    pub fn delta_notation(&self, other: &OpCounts) -> String {
        let parts: Vec<String> = [
            (self.pairings as i64 - other.pairings as i64, "P"),
            (self.gt_exps as i64 - other.gt_exps as i64, "E"),
            (self.scalar_mults as i64 - other.scalar_mults as i64, "M"),
            (self.hashes as i64 - other.hashes as i64, "H"),
        ]
        .iter()
        .filter(|(n, _)| *n != 0)
        .map(|(n, sym)| format!("{n:+}{sym}"))
        .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("")
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(mut self, rhs: OpCounts) -> OpCounts {
        self += rhs;
        self
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        self.pairings += rhs.pairings;
        self.scalar_mults += rhs.scalar_mults;
        self.gt_exps += rhs.gt_exps;
        self.hashes += rhs.hashes;
        self.macs += rhs.macs;
    }
}

impl fmt::Display for OpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.notation())?;
        if self.macs > 0 {
            write!(f, " (+{} MAC)", self.macs)?;
        }
        Ok(())
    }
}

/// Counts collected by [`count`], keyed by scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    scopes: BTreeMap<(Entity, Phase), OpCounts>,
    unscoped: OpCounts,
}

impl OpCounter {
    pub fn get(&self, entity: Entity, phase: Phase) -> OpCounts {
        self.scopes
            .get(&(entity, phase))
            .copied()
            .unwrap_or_default()
    }

    pub fn entity_total(&self, entity: Entity) -> OpCounts {
        self.scopes
            .iter()
            .filter(|((e, _), _)| *e == entity)
            .fold(OpCounts::default(), |acc, (_, c)| acc + *c)
    }

    /// Operations recorded while no scope was active.
    pub fn unscoped(&self) -> OpCounts {
        self.unscoped
    }

    pub fn total(&self) -> OpCounts {
        self.scopes.values().fold(self.unscoped, |acc, c| acc + *c)
    }

    pub fn scopes(&self) -> impl Iterator<Item = (Entity, Phase, OpCounts)> + '_ {
        self.scopes.iter().map(|(&(e, p), &c)| (e, p, c))
    }

    fn merge(&mut self, other: &OpCounter) {
        for (k, v) in &other.scopes {
            *self.scopes.entry(*k).or_default() += *v;
        }
        self.unscoped += other.unscoped;
    }
}

thread_local! {
    static SCOPE: Cell<Option<(Entity, Phase)>> = const { Cell::new(None) };
    static TALLY: RefCell<Option<OpCounter>> = const { RefCell::new(None) };
}

/// Report one operation to the active collection, if any.
pub fn record(op: Op) {
    TALLY.with(|tally| {
        if let Some(counter) = tally.borrow_mut().as_mut() {
            match SCOPE.with(Cell::get) {
                Some(scope) => counter.scopes.entry(scope).or_default().bump(op),
                None => counter.unscoped.bump(op),
            }
        }
    });
}

struct ScopeGuard(Option<(Entity, Phase)>);

impl Drop for ScopeGuard {
    fn drop(&mut self) {
        SCOPE.with(|s| s.set(self.0));
    }
}

/// Attribute everything `f` does on this thread to `(entity, phase)`.
pub fn within<T>(entity: Entity, phase: Phase, f: impl FnOnce() -> T) -> T {
    let previous = SCOPE.with(|s| s.replace(Some((entity, phase))));
    let _guard = ScopeGuard(previous);
    f()
}

struct TallyGuard(Option<OpCounter>);

impl Drop for TallyGuard {
    fn drop(&mut self) {
        let inner = TALLY.with(|t| t.replace(self.0.take()));
        // Nested collections stay visible to the enclosing one.
        if let Some(inner) = inner {
            TALLY.with(|t| {
                if let Some(outer) = t.borrow_mut().as_mut() {
                    outer.merge(&inner);
                }
            });
        }
    }
}

/// Run `f` and return what it computed together with every operation it
/// recorded on this thread.
pub fn count<T>(f: impl FnOnce() -> T) -> (T, OpCounter) {
    let previous = TALLY.with(|t| t.replace(Some(OpCounter::default())));
    let guard = TallyGuard(previous);
    let value = f();
    let counter = TALLY.with(|t| t.borrow().clone()).unwrap_or_default();
    drop(guard);
    (value, counter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_only_while_collecting() {
        record(Op::Pairing);
        let ((), counter) = count(|| {
            within(Entity::Sensor, Phase::Registration, || {
                record(Op::Pairing);
                record(Op::ScalarMul);
            });
            record(Op::Hash);
        });
        assert_eq!(
            counter.get(Entity::Sensor, Phase::Registration),
            OpCounts::new(1, 1, 0, 0)
        );
        assert_eq!(counter.unscoped(), OpCounts::new(0, 0, 0, 1));
        assert_eq!(counter.total(), OpCounts::new(1, 1, 0, 1));
    }

    #[test]
    fn nested_collections_merge_outward() {
        let ((), outer) = count(|| {
            within(Entity::User, Phase::Authentication, || {
                record(Op::ScalarMul);
                let ((), inner) = count(|| record(Op::Hash));
                assert_eq!(inner.total(), OpCounts::new(0, 0, 0, 1));
            });
        });
        assert_eq!(
            outer.get(Entity::User, Phase::Authentication),
            OpCounts::new(0, 1, 0, 1)
        );
    }

    #[test]
    fn scope_restored_after_panic() {
        let result = std::panic::catch_unwind(|| {
            within(Entity::Gateway, Phase::Setup, || panic!("boom"));
        });
        assert!(result.is_err());
        assert_eq!(SCOPE.with(Cell::get), None);
    }

    #[test]
    fn notation() {
        assert_eq!(OpCounts::new(3, 4, 0, 6).notation(), "3P+4M+6H");
        assert_eq!(OpCounts::new(0, 3, 0, 4).notation(), "3M+4H");
        assert_eq!(OpCounts::default().notation(), "0");
        assert_eq!(
            OpCounts::new(0, 2, 0, 3).delta_notation(&OpCounts::new(0, 2, 0, 2)),
            "+1H"
        );
    }
}
