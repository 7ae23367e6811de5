//! Exponentially decaying exploration rate.

/// `eps = max(eps0 * decay^step, eps_min)`, stepped once per decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub decay: f64,
    pub eps_min: f64,
    step: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            eps0: 1.0,
            decay: 0.99985,
            eps_min: 0.03,
            step: 0,
        }
    }
}

impl EpsilonSchedule {
    pub fn new(eps0: f64, decay: f64, eps_min: f64) -> Self {
        EpsilonSchedule {
            eps0,
            decay,
            eps_min,
            step: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.eps0) || !(0.0..=1.0).contains(&self.eps_min) {
            return Err(format!("eps0/eps_min must be in [0,1], got {} / {}", self.eps0, self.eps_min));
        }
        if !(0.0 < self.decay && self.decay <= 1.0) {
            return Err(format!("decay must be in (0,1], got {}", self.decay));
        }
        if self.eps_min > self.eps0 {
            return Err("eps_min must not exceed eps0".into());
        }
        Ok(())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Restore the decision counter (checkpoint resume).
    pub fn with_step(mut self, step: u64) -> Self {
        self.step = step;
        self
    }

    /// Value at the current step.
    pub fn value(&self) -> f64 {
        epsilon(self, self.step)
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Evaluate the schedule at an arbitrary step.
pub fn epsilon(schedule: &EpsilonSchedule, step: u64) -> f64 {
    (schedule.eps0 * schedule.decay.powf(step as f64)).max(schedule.eps_min)
}
