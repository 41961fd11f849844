//! The four prototype scenarios, embedded so tests and tools can load them
//! without touching the filesystem.

use crate::patterns::EventKind;
use crate::simulator::{load_scenario, ScenarioConfig, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prototype {
    pub id: &'static str,
    pub document: &'static str,
    /// Event sequence a noise-free run produces.
    pub expected: &'static [EventKind],
}

pub const ENTERTAINMENT: Prototype = Prototype {
    id: "entertainment",
    document: include_str!("../scenarios/entertainment.json"),
    expected: &[EventKind::Pause, EventKind::Resume],
};

pub const EMAIL: Prototype = Prototype {
    id: "email",
    document: include_str!("../scenarios/email.json"),
    expected: &[
        EventKind::LevelChanged { from: 0, to: 1 },
        EventKind::LevelChanged { from: 1, to: 2 },
    ],
};

pub const SCROLL_BY_VOICE: Prototype = Prototype {
    id: "scroll_by_voice",
    document: include_str!("../scenarios/scroll_by_voice.json"),
    expected: &[EventKind::WakeUp, EventKind::Sleep],
};

pub const RECIPE: Prototype = Prototype {
    id: "recipe",
    document: include_str!("../scenarios/recipe.json"),
    expected: &[EventKind::Pause, EventKind::Resume],
};

pub const ALL: [Prototype; 4] = [ENTERTAINMENT, EMAIL, SCROLL_BY_VOICE, RECIPE];

impl Prototype {
    pub fn config(&self) -> Result<ScenarioConfig, ScenarioError> {
        load_scenario(self.document)
    }
}
