//! JSON documents for instances and schedules.
//!
//! ```json
//! {"rho": 2, "jobs": [{"id": "a", "size": 1}], "machines": [{"id": "m0", "speed": 1}], "edges": []}
//! {"placements": [{"job": "a", "machine": "m0", "start": 0}]}
//! ```
//!
//! Floats are written with shortest round-trip formatting and parsed exactly,
//! so a write/read cycle reproduces every value bit for bit.

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::Instance;
use crate::error::{Error, Result};
use crate::schedmodel::Schedule;

fn parse<T: DeserializeOwned>(what: &'static str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        what,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn write<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data always serializes")
}

pub fn instance_to_json(inst: &Instance) -> String {
    write(inst)
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    parse("instance", text)
}

pub fn schedule_to_json(sched: &Schedule) -> String {
    write(sched)
}

pub fn schedule_from_json(text: &str) -> Result<Schedule> {
    parse("schedule", text)
}
