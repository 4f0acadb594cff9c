use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventTag {
    Epoch,
    LeakedData,
    LeakedKey,
    LeakedToken,
    Insec,
}

impl EventTag {
    /// Events only the environment (interface W) may trigger.
    pub fn environment_owned(self) -> bool {
        matches!(self, EventTag::Insec | EventTag::LeakedKey | EventTag::LeakedToken)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventName {
    pub tag: EventTag,
    pub index: u64,
}

impl EventName {
    pub fn epoch(e: u64) -> Self {
        EventName { tag: EventTag::Epoch, index: e }
    }
    pub fn leaked_data(i: u64) -> Self {
        EventName { tag: EventTag::LeakedData, index: i }
    }
    pub fn leaked_key(i: u64) -> Self {
        EventName { tag: EventTag::LeakedKey, index: i }
    }
    pub fn leaked_token(i: u64) -> Self {
        EventName { tag: EventTag::LeakedToken, index: i }
    }
    pub fn insec(j: u64) -> Self {
        EventName { tag: EventTag::Insec, index: j }
    }
}

impl fmt::Display for EventName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.tag {
            EventTag::Epoch => "epoch",
            EventTag::LeakedData => "leaked/Data",
            EventTag::LeakedKey => "leaked/Key",
            EventTag::LeakedToken => "leaked/Token",
            EventTag::Insec => "insec",
        };
        write!(f, "{prefix}/{}", self.index)
    }
}

impl FromStr for EventName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CoreError::Config(format!("unrecognised event name {s:?}"));
        let (head, idx) = s.rsplit_once('/').ok_or_else(bad)?;
        let index: u64 = idx.parse().map_err(|_| bad())?;
        let tag = match head {
            "epoch" => EventTag::Epoch,
            "leaked/Data" => EventTag::LeakedData,
            "leaked/Key" => EventTag::LeakedKey,
            "leaked/Token" => EventTag::LeakedToken,
            "insec" => EventTag::Insec,
            _ => return Err(bad()),
        };
        Ok(EventName { tag, index })
    }
}

impl Serialize for EventName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Append-only, duplicate-free global event list.
#[derive(Clone, Debug, Default)]
pub struct EventHistory {
    entries: Vec<EventName>,
    position: HashMap<EventName, usize>,
}

impl PartialEq for EventHistory {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}
impl Eq for EventHistory {}

impl EventHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events<I: IntoIterator<Item = EventName>>(events: I) -> Self {
        let mut h = Self::new();
        for e in events {
            h.append(e);
        }
        h
    }

    /// Returns true if the event was new.
    pub fn append(&mut self, e: EventName) -> bool {
        if self.position.contains_key(&e) {
            return false;
        }
        self.position.insert(e, self.entries.len());
        self.entries.push(e);
        true
    }

    pub fn contains(&self, e: EventName) -> bool {
        self.position.contains_key(&e)
    }

    pub fn position(&self, e: EventName) -> Option<usize> {
        self.position.get(&e).copied()
    }

    /// a ≺ b: both present and a was appended first.
    pub fn precedes(&self, a: EventName, b: EventName) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(x), Some(y)) => x < y,
            _ => false,
        }
    }

    pub fn entries(&self) -> &[EventName] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest epoch announced so far, 0 if none.
    pub fn current_epoch(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.tag == EventTag::Epoch)
            .map(|e| e.index)
            .max()
            .unwrap_or(0)
    }
}

impl Serialize for EventHistory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}
