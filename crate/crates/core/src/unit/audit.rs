//! Parameter-access audit.
//!
//! Every trainable map carries the tag of the unit that owns it. While an
//! audit is active on the current thread, each parameter read or write is
//! checked against the innermost open unit scope; a mismatch is counted as a
//! locality violation. When no audit is active the checks cost one
//! thread-local flag read.

use std::cell::{Cell, RefCell};
use std::sync::atomic::{AtomicU64, Ordering};

/// Identity of one trainable unit instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitTag(u64);

static NEXT_TAG: AtomicU64 = AtomicU64::new(1);

impl UnitTag {
    pub fn fresh() -> Self {
        UnitTag(NEXT_TAG.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    /// Parameter accesses made inside some unit scope.
    pub checked: u64,
    /// Accesses whose owner differed from the innermost scope.
    pub violations: u64,
}

thread_local! {
    static ACTIVE: Cell<bool> = const { Cell::new(false) };
    static SCOPES: RefCell<Vec<UnitTag>> = const { RefCell::new(Vec::new()) };
    static REPORT: Cell<AuditReport> = const { Cell::new(AuditReport { checked: 0, violations: 0 }) };
}

/// Runs `f` with auditing enabled and returns its result with the report.
pub fn audited<T>(f: impl FnOnce() -> T) -> (T, AuditReport) {
    let was = ACTIVE.with(|a| a.replace(true));
    let before = REPORT.with(|r| r.replace(AuditReport::default()));
    let out = f();
    let report = REPORT.with(|r| r.replace(before));
    ACTIVE.with(|a| a.set(was));
    (out, report)
}

/// Marks `tag` as the unit currently operating for the duration of `f`.
pub fn scoped<T>(tag: UnitTag, f: impl FnOnce() -> T) -> T {
    if !ACTIVE.with(|a| a.get()) {
        return f();
    }
    SCOPES.with(|s| s.borrow_mut().push(tag));
    let out = f();
    SCOPES.with(|s| s.borrow_mut().pop());
    out
}

pub(crate) fn touch(owner: UnitTag) {
    if !ACTIVE.with(|a| a.get()) {
        return;
    }
    let top = SCOPES.with(|s| s.borrow().last().copied());
    if let Some(top) = top {
        REPORT.with(|r| {
            let mut rep = r.get();
            rep.checked += 1;
            if top != owner {
                rep.violations += 1;
            }
            r.set(rep);
        });
    }
}
