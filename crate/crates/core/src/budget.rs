use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Node and wall-clock limits shared by the search routines.
#[derive(Clone, Debug)]
pub struct Budget {
    nodes_left: u64,
    deadline: Option<Instant>,
    ticks: u64,
}

impl Budget {
    pub fn nodes(limit: u64) -> Self {
        Self {
            nodes_left: limit,
            deadline: None,
            ticks: 0,
        }
    }

    pub fn unlimited() -> Self {
        Self::nodes(u64::MAX)
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_timeout(self, timeout: Duration) -> Self {
        self.with_deadline(Some(Instant::now() + timeout))
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn used(&self) -> u64 {
        self.ticks
    }

    /// Charges one search node. Time is polled every 256 nodes.
    #[inline]
    pub fn tick(&mut self) -> Result<()> {
        if self.nodes_left == 0 {
            return Err(Error::BudgetExceeded);
        }
        self.nodes_left -= 1;
        self.ticks += 1;
        if self.ticks & 0xff == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Error::Timeout);
                }
            }
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::nodes(50_000_000)
    }
}
