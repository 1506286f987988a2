//! Cooperative resource budgets.
//!
//! Long-running operations poll a [`Budget`] at loop heads; when a cap is
//! hit they stop with [`Error::BudgetExceeded`] so the caller can surface
//! partial results instead of spinning.  Caps default to unlimited; the
//! trial cap additionally lets experiments shrink the Hoeffding trial
//! counts of table building when the approximator's own failure bound
//! already pins the estimates (see `psi::build_psi_table`).

use std::time::{Duration, Instant};

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone)]
pub struct Budget {
    /// Cap on examples drawn from the target oracle.
    pub max_examples: Option<u64>,
    /// Wall-clock cap for the whole run.
    pub max_wall: Option<Duration>,
    /// Cap on accepted trials per table entry (None → Hoeffding count).
    pub max_trials_per_d: Option<u64>,
    started: Instant,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_examples: None,
            max_wall: None,
            max_trials_per_d: None,
            started: Instant::now(),
        }
    }

    pub fn with_examples(mut self, cap: u64) -> Self {
        self.max_examples = Some(cap);
        self
    }

    pub fn with_wall(mut self, cap: Duration) -> Self {
        self.max_wall = Some(cap);
        self
    }

    pub fn with_trials_per_d(mut self, cap: u64) -> Self {
        self.max_trials_per_d = Some(cap);
        self
    }

    /// Restart the wall clock (call when a stored config becomes a run).
    pub fn start(&mut self) {
        self.started = Instant::now();
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    /// Check caps against the examples drawn so far.
    pub fn poll(&self, examples_drawn: u64) -> Result<()> {
        if let Some(cap) = self.max_examples {
            if examples_drawn > cap {
                return Err(Error::BudgetExceeded(format!(
                    "{examples_drawn} examples drawn, cap {cap}"
                )));
            }
        }
        if let Some(cap) = self.max_wall {
            let elapsed = self.started.elapsed();
            if elapsed > cap {
                return Err(Error::BudgetExceeded(format!(
                    "wall clock {:.1}s, cap {:.1}s",
                    elapsed.as_secs_f64(),
                    cap.as_secs_f64()
                )));
            }
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::unlimited()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlimited_never_trips() {
        let b = Budget::unlimited();
        assert!(b.poll(u64::MAX - 1).is_ok());
    }

    #[test]
    fn example_cap_trips_past_cap() {
        let b = Budget::unlimited().with_examples(100);
        assert!(b.poll(100).is_ok());
        assert!(matches!(b.poll(101), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn wall_cap_trips_after_deadline() {
        let b = Budget::unlimited().with_wall(Duration::from_millis(1));
        std::thread::sleep(Duration::from_millis(5));
        assert!(matches!(b.poll(0), Err(Error::BudgetExceeded(_))));
    }
}
