use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Point;

use super::agent::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventType {
    Accident,
    Police,
    Hazard,
    RoadClosure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vote {
    Thanks,
    NotThere,
}

/// Consecutive "not there" votes that remove an event.
pub const NOT_THERE_LIMIT: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEvent {
    pub id: EventId,
    pub event_type: EventType,
    pub location: Point,
    pub reporter: VehicleId,
    pub created_at: f64,
    pub last_refreshed: f64,
    pub thanks_count: u32,
    pub not_there_streak: u32,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VoteOutcome {
    Alive(MapEvent),
    Removed(MapEvent),
    /// The event was already gone; nothing changed.
    IgnoredDead(MapEvent),
}

impl VoteOutcome {
    pub fn event(&self) -> &MapEvent {
        match self {
            VoteOutcome::Alive(e) | VoteOutcome::Removed(e) | VoteOutcome::IgnoredDead(e) => e,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventBoard {
    events: BTreeMap<EventId, MapEvent>,
    next_id: u32,
    pub merge_radius_m: f64,
    pub ttl_s: f64,
}

impl EventBoard {
    pub fn new(merge_radius_m: f64, ttl_s: f64) -> Self {
        Self { events: BTreeMap::new(), next_id: 0, merge_radius_m, ttl_s }
    }

    fn live(&self, e: &MapEvent, now: f64) -> bool {
        e.alive && now - e.last_refreshed <= self.ttl_s
    }

    /// Files a report, merging it into the nearest live event of the same
    /// type within the merge radius.
    pub fn report(&mut self, reporter: VehicleId, event_type: EventType, location: Point, now: f64) -> EventId {
        let merge = self
            .events
            .values()
            .filter(|e| e.event_type == event_type && self.live(e, now))
            .map(|e| (e.location.distance_m(&location), e.id))
            .filter(|(d, _)| *d <= self.merge_radius_m)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, id)) = merge {
            let e = self.events.get_mut(&id).expect("merge target exists");
            e.last_refreshed = now;
            return id;
        }
        let id = EventId(self.next_id);
        self.next_id += 1;
        self.events.insert(
            id,
            MapEvent {
                id,
                event_type,
                location,
                reporter,
                created_at: now,
                last_refreshed: now,
                thanks_count: 0,
                not_there_streak: 0,
                alive: true,
            },
        );
        id
    }

    pub fn vote(&mut self, id: EventId, vote: Vote, now: f64) -> Result<VoteOutcome> {
        let ttl = self.ttl_s;
        let e = self.events.get_mut(&id).ok_or(Error::UnknownEvent(id))?;
        if !e.alive || now - e.last_refreshed > ttl {
            return Ok(VoteOutcome::IgnoredDead(e.clone()));
        }
        match vote {
            Vote::Thanks => {
                e.thanks_count += 1;
                e.not_there_streak = 0;
                e.last_refreshed = now;
            }
            Vote::NotThere => {
                e.not_there_streak += 1;
                if e.not_there_streak >= NOT_THERE_LIMIT {
                    e.alive = false;
                    return Ok(VoteOutcome::Removed(e.clone()));
                }
            }
        }
        Ok(VoteOutcome::Alive(e.clone()))
    }

    /// Marks events whose last refresh is older than the TTL as dead.
    pub fn expire(&mut self, now: f64) -> Vec<EventId> {
        let ttl = self.ttl_s;
        let mut out = Vec::new();
        for e in self.events.values_mut() {
            if e.alive && now - e.last_refreshed > ttl {
                e.alive = false;
                out.push(e.id);
            }
        }
        out
    }

    pub fn get(&self, id: EventId) -> Option<&MapEvent> {
        self.events.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MapEvent> {
        self.events.values()
    }

    pub fn alive(&self) -> impl Iterator<Item = &MapEvent> {
        self.events.values().filter(|e| e.alive)
    }
}
