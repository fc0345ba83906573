//! Cooperative work budgets.
//!
//! The core has no clock, so anything that may need to stop early (branch and
//! bound, RTV enumeration) polls a [`Budget`]. The std companion crate wraps a
//! wall-clock deadline in a closure.

/// Polled by long-running searches; returning `true` asks the search to stop
/// and hand back its best incumbent.
pub trait Budget {
    fn exhausted(&mut self) -> bool;
}

/// Never runs out.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn exhausted(&mut self) -> bool {
        false
    }
}

/// Runs out after a fixed number of polls.
#[derive(Debug, Clone, Copy)]
pub struct StepBudget {
    remaining: u64,
}

impl StepBudget {
    pub fn new(steps: u64) -> Self {
        Self { remaining: steps }
    }
}

impl Budget for StepBudget {
    fn exhausted(&mut self) -> bool {
        if self.remaining == 0 {
            return true;
        }
        self.remaining -= 1;
        false
    }
}

impl<F: FnMut() -> bool> Budget for F {
    fn exhausted(&mut self) -> bool {
        self()
    }
}
