//! Event log: one line per event, `time,worker,kind,center_version`, no header.
//! Times use the shortest decimal form that reads back to the same `f64`.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    GradStep,
    Comm,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::GradStep => "grad_step",
            EventKind::Comm => "comm",
        }
    }
}

/// One simulated occurrence. `center_version` is the center version the worker
/// observed: the pre-exchange version for communication events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub worker: usize,
    pub kind: EventKind,
    pub center_version: u64,
}

impl SimEvent {
    /// Bitwise equality, so replay catches any perturbation of the time.
    pub fn same_as(&self, other: &SimEvent) -> bool {
        self.time.to_bits() == other.time.to_bits()
            && self.worker == other.worker
            && self.kind == other.kind
            && self.center_version == other.center_version
    }
}

pub fn events_to_text(events: &[SimEvent]) -> String {
    let mut out = String::with_capacity(32 * events.len());
    for e in events {
        let _ = writeln!(out, "{},{},{},{}", e.time, e.worker, e.kind.as_str(), e.center_version);
    }
    out
}

pub fn parse_events(text: &str) -> Result<Vec<SimEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let line_no = i as u64 + 1;
            let bad = |msg: &str| Error::Parse { line: line_no, message: format!("{msg}: {line:?}") };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(bad("expected time,worker,kind,center_version"));
            }
            let kind = match cells[2] {
                "grad_step" => EventKind::GradStep,
                "comm" => EventKind::Comm,
                _ => return Err(bad("unknown event kind")),
            };
            Ok(SimEvent {
                time: cells[0].parse().map_err(|_| bad("bad time"))?,
                worker: cells[1].parse().map_err(|_| bad("bad worker"))?,
                kind,
                center_version: cells[3].parse().map_err(|_| bad("bad center_version"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn text_round_trip(raw in proptest::collection::vec((0.0f64..1e9, 0usize..64, any::<bool>(), any::<u64>()), 0..40)) {
            let events: Vec<SimEvent> = raw
                .into_iter()
                .map(|(time, worker, comm, v)| SimEvent {
                    time,
                    worker,
                    kind: if comm { EventKind::Comm } else { EventKind::GradStep },
                    center_version: v,
                })
                .collect();
            let back = parse_events(&events_to_text(&events)).unwrap();
            prop_assert_eq!(back.len(), events.len());
            prop_assert!(back.iter().zip(&events).all(|(a, b)| a.same_as(b)));
        }
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_events("1,0,grad_step\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_events("1,0,grad_step,0\n1,0,jump,0\n"), Err(Error::Parse { line: 2, .. })));
    }
}
