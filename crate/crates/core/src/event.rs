use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::symbol::Sym;
use crate::value::Value;

/// A visible communication: a channel together with the value it carries.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub channel: Sym,
    pub value: Value,
}

impl Event {
    pub fn new(channel: impl Into<Sym>, value: Value) -> Event {
        Event { channel: channel.into(), value }
    }

    pub fn unit(channel: impl Into<Sym>) -> Event {
        Event::new(channel, Value::Unit)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Value::Unit => write!(f, "{}", self.channel),
            v => write!(f, "{}.{}", self.channel, v),
        }
    }
}

/// Transition label of the operational semantics.
///
/// `Tick` is successful termination. It is consumed by sequential
/// composition and never appears in observable traces.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tock,
    Tau,
    Tick,
    Event(Event),
}

impl Label {
    pub fn event(channel: impl Into<Sym>, value: Value) -> Label {
        Label::Event(Event::new(channel, value))
    }

    /// Labels that appear in traces: visible events and tock.
    pub fn is_observable(self) -> bool {
        matches!(self, Label::Tock | Label::Event(_))
    }

    pub fn is_internal(self) -> bool {
        matches!(self, Label::Tau | Label::Tick)
    }

    pub fn as_event(self) -> Option<Event> {
        match self {
            Label::Event(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tock => f.write_str("tock"),
            Label::Tau => f.write_str("tau"),
            Label::Tick => f.write_str("tick"),
            Label::Event(e) => write!(f, "{e}"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A finite set of events: whole channels, individual events, and
/// optionally `tock`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct EventSet {
    channels: Vec<Sym>,
    events: Vec<Event>,
    tock: bool,
}

impl EventSet {
    pub fn new(channels: impl IntoIterator<Item = Sym>, events: impl IntoIterator<Item = Event>, tock: bool) -> EventSet {
        let mut channels: Vec<Sym> = channels.into_iter().collect();
        channels.sort();
        channels.dedup();
        let mut events: Vec<Event> = events
            .into_iter()
            .filter(|e| channels.binary_search(&e.channel).is_err())
            .collect();
        events.sort();
        events.dedup();
        EventSet { channels, events, tock }
    }

    pub fn empty() -> EventSet {
        EventSet::default()
    }

    pub fn channels<I, S>(names: I) -> EventSet
    where
        I: IntoIterator<Item = S>,
        S: Into<Sym>,
    {
        EventSet::new(names.into_iter().map(Into::into), [], false)
    }

    pub fn events(events: impl IntoIterator<Item = Event>) -> EventSet {
        EventSet::new([], events, false)
    }

    pub fn with_tock(mut self) -> EventSet {
        self.tock = true;
        self
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        EventSet::new(
            self.channels.iter().chain(&other.channels).copied(),
            self.events.iter().chain(&other.events).copied(),
            self.tock || other.tock,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty() && self.events.is_empty() && !self.tock
    }

    pub fn has_tock(&self) -> bool {
        self.tock
    }

    pub fn channel_list(&self) -> &[Sym] {
        &self.channels
    }

    pub fn event_list(&self) -> &[Event] {
        &self.events
    }

    pub fn contains_event(&self, e: &Event) -> bool {
        self.channels.binary_search(&e.channel).is_ok() || self.events.binary_search(e).is_ok()
    }

    pub fn mentions_channel(&self, c: Sym) -> bool {
        self.channels.binary_search(&c).is_ok() || self.events.iter().any(|e| e.channel == c)
    }

    pub fn contains(&self, label: &Label) -> bool {
        match label {
            Label::Tock => self.tock,
            Label::Event(e) => self.contains_event(e),
            Label::Tau | Label::Tick => false,
        }
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.channels.iter().map(|c| c.to_string()).collect();
        parts.extend(self.events.iter().map(|e| e.to_string()));
        if self.tock {
            parts.push("tock".into());
        }
        write!(f, "{{|{}|}}", parts.join(", "))
    }
}

/// Shared handle used inside process terms.
pub type EventSetRef = Arc<EventSet>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_membership_covers_all_values() {
        let set = EventSet::channels(["in"]);
        assert!(set.contains(&Label::event("in", Value::Int(2))));
        assert!(!set.contains(&Label::event("out", Value::Int(2))));
        assert!(!set.contains(&Label::Tock));
        assert!(set.clone().with_tock().contains(&Label::Tock));
    }

    #[test]
    fn individual_events_are_exact() {
        let set = EventSet::events([Event::new("e", Value::Int(0))]);
        assert!(set.contains(&Label::event("e", Value::Int(0))));
        assert!(!set.contains(&Label::event("e", Value::Int(1))));
        assert!(set.mentions_channel(Sym::new("e")));
    }

    #[test]
    fn visible_labels_compare_by_channel_and_value() {
        assert_eq!(Label::event("a", Value::Int(1)), Label::event("a", Value::Int(1)));
        assert_ne!(Label::event("a", Value::Int(1)), Label::event("a", Value::Int(2)));
        assert_ne!(Label::event("a", Value::Int(1)), Label::event("b", Value::Int(1)));
    }
}
