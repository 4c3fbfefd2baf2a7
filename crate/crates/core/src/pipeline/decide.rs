use super::config::AlertPolicy;
use crate::rules::FatigueLevel;

/// Streaming form of [`decide`]. An absent level counts as below threshold.
#[derive(Debug, Clone)]
pub struct AlertTracker {
    policy: AlertPolicy,
    run: usize,
    armed: bool,
}

impl AlertTracker {
    pub fn new(policy: AlertPolicy) -> Self {
        Self { policy, run: 0, armed: true }
    }

    /// Feeds the next window's Overall level; true if it raises an alert.
    pub fn push(&mut self, level: Option<FatigueLevel>) -> bool {
        if level.is_some_and(|l| l >= self.policy.threshold) {
            self.run += 1;
            if self.armed && self.run >= self.policy.consecutive {
                self.armed = false;
                return true;
            }
        } else {
            self.run = 0;
            self.armed = true;
        }
        false
    }
}

/// Indices of windows that raise an alert: the last `consecutive` levels all
/// reach the threshold and no alert has fired since the level last dropped.
pub fn decide(levels: &[FatigueLevel], policy: &AlertPolicy) -> Vec<usize> {
    let mut t = AlertTracker::new(*policy);
    levels.iter().enumerate().filter(|(_, l)| t.push(Some(**l))).map(|(i, _)| i).collect()
}
