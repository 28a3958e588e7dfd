//! Stage timelines: what each worker did when, for overlap analysis.
//!
//! Stage numbering matches the training pipeline:
//! 1 sample load, 2 stage-out of trained rows to the host arena,
//! 3 train, 4 intra-node peer transfer, 5 stage-in of rows from the
//! arena, 6 inter-node transfer, 7 next-episode sample prefetch.

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageEvent {
    pub worker: usize,
    pub stage: u8,
    pub subpart: Option<usize>,
    pub start_ns: u64,
    pub end_ns: u64,
}

#[derive(Debug, Clone, Default)]
pub struct StageTimeline {
    pub events: Vec<StageEvent>,
}

impl StageTimeline {
    pub fn push(&mut self, ev: StageEvent) {
        self.events.push(ev);
    }

    pub fn extend(&mut self, other: StageTimeline) {
        self.events.extend(other.events);
    }

    pub fn sort(&mut self) {
        self.events
            .sort_by_key(|e| (e.start_ns, e.worker, e.stage, e.end_ns));
    }

    pub fn wall_seconds(&self) -> f64 {
        let start = self.events.iter().map(|e| e.start_ns).min().unwrap_or(0);
        let end = self.events.iter().map(|e| e.end_ns).max().unwrap_or(0);
        (end - start) as f64 / 1e9
    }

    pub fn stage_events(&self, stage: u8) -> impl Iterator<Item = &StageEvent> {
        self.events.iter().filter(move |e| e.stage == stage)
    }

    pub fn stage_total_seconds(&self, stage: u8) -> f64 {
        self.stage_events(stage)
            .map(|e| (e.end_ns - e.start_ns) as f64 / 1e9)
            .sum()
    }

    /// Structural checks: stages in 1..=7, ordered intervals, and a
    /// worker never trains two things at once.
    pub fn validate(&self) -> Result<()> {
        for e in &self.events {
            if !(1..=7).contains(&e.stage) {
                return Err(Error::InvalidArgument(format!("stage {} out of range", e.stage)));
            }
            if e.end_ns < e.start_ns {
                return Err(Error::InvalidArgument("event ends before it starts".into()));
            }
        }
        let workers: std::collections::BTreeSet<usize> =
            self.events.iter().map(|e| e.worker).collect();
        for w in workers {
            let mut train: Vec<(u64, u64)> = self
                .stage_events(3)
                .filter(|e| e.worker == w)
                .map(|e| (e.start_ns, e.end_ns))
                .collect();
            train.sort_unstable();
            for pair in train.windows(2) {
                if pair[1].0 < pair[0].1 {
                    return Err(Error::InvalidArgument(format!(
                        "worker {w} has overlapping training intervals"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Does any in-flight interval of `stage_a` intersect a `stage_b`
    /// interval (on any pair of workers)? Used to confirm that
    /// communication stages actually overlap training.
    pub fn stages_overlap(&self, stage_a: u8, stage_b: u8) -> bool {
        let a: Vec<(u64, u64)> = self
            .stage_events(stage_a)
            .map(|e| (e.start_ns, e.end_ns))
            .collect();
        self.stage_events(stage_b)
            .any(|b| a.iter().any(|&(s, e)| b.start_ns < e && s < b.end_ns))
    }

    /// Log format: one "worker stage subpart t_start_ns t_end_ns" line
    /// per event, `-` for events not tied to a sub-part.
    pub fn to_log_string(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 32);
        for e in &self.events {
            let sp = match e.subpart {
                Some(s) => s.to_string(),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                e.worker, e.stage, sp, e.start_ns, e.end_ns
            ));
        }
        out
    }

    pub fn write_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_log_string()).map_err(|e| Error::io(path, e))
    }
}
