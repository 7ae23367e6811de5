//! The discrete lateral decision space.

use serde::{Deserialize, Serialize};

/// High-level lane decision: keep, change left, change right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "a0")]
    KeepLane,
    #[serde(rename = "a1")]
    ChangeLeft,
    #[serde(rename = "a2")]
    ChangeRight,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::KeepLane, Action::ChangeLeft, Action::ChangeRight];

    pub fn index(self) -> usize {
        match self {
            Action::KeepLane => 0,
            Action::ChangeLeft => 1,
            Action::ChangeRight => 2,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    pub fn is_change(self) -> bool {
        self != Action::KeepLane
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Action::KeepLane => "a0",
            Action::ChangeLeft => "a1",
            Action::ChangeRight => "a2",
        };
        f.write_str(name)
    }
}
