//! Plays: ordered records of generation events. Replaying a play's event
//! list reconstructs its tapestries exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tapestry::{CausalTapestry, Informon, InformonId, TapestryBuilder};

/// A single generation event. Events are ordered; `step` groups the
/// emissions of one short round (a product's correlated set shares a step).
#[derive(Clone, Debug)]
pub enum PlayEvent {
    Emit { step: u32, subprocess: String, informon: Informon },
    Merge { step: u32, subprocess: String, into: InformonId, delta: Complex64 },
    /// Strengths of the named tick were scaled after sealing.
    Renormalize { tick: i64, scale: f64 },
}

/// One realized generation history: every event across all ticks, plus the
/// final tapestry.
#[derive(Clone, Debug)]
pub struct Play {
    pub events: Vec<PlayEvent>,
    pub final_tapestry: CausalTapestry,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    /// Every informon of a tick propagated from an empty cone.
    DegeneratePropagation { tick: i64 },
}

impl Play {
    pub fn new(events: Vec<PlayEvent>, final_tapestry: CausalTapestry) -> Self {
        Play { events, final_tapestry, warnings: Vec::new() }
    }

    /// Reconstructs the final tapestry from the event list alone.
    pub fn replay(&self) -> Result<CausalTapestry> {
        let mut informons: BTreeMap<InformonId, Informon> = BTreeMap::new();
        for event in &self.events {
            match event {
                PlayEvent::Emit { informon, .. } => {
                    informons.insert(informon.id, informon.clone());
                }
                PlayEvent::Merge { into, delta, .. } => {
                    let target = informons.get_mut(into).ok_or_else(|| {
                        Error::Integrity(format!("merge into unknown informon {into}"))
                    })?;
                    target.strength += delta;
                }
                PlayEvent::Renormalize { tick, scale } => {
                    for n in informons.values_mut() {
                        if n.point.tick == *tick {
                            n.strength *= scale;
                        }
                    }
                }
            }
        }
        let final_tick = self.final_tapestry.tick();
        let mut builder = TapestryBuilder::new(final_tick, self.final_tapestry.provenance());
        for n in informons.into_values() {
            if n.point.tick == final_tick {
                builder.push(n);
            }
        }
        builder.seal()
    }

    /// Deterministic text log; byte-identical for identical (config, seed).
    pub fn to_log(&self, play_index: usize) -> String {
        let mut out = String::new();
        out.push_str(&format!("play {play_index}\n"));
        for event in &self.events {
            match event {
                PlayEvent::Emit { step, subprocess, informon } => {
                    out.push_str(&format!(
                        "emit step={} by={} id={} tick={} site={} re={} im={}\n",
                        step,
                        subprocess,
                        informon.id,
                        informon.point.tick,
                        informon.point.site,
                        informon.strength.re,
                        informon.strength.im
                    ));
                }
                PlayEvent::Merge { step, subprocess, into, delta } => {
                    out.push_str(&format!(
                        "merge step={} by={} into={} dre={} dim={}\n",
                        step, subprocess, into, delta.re, delta.im
                    ));
                }
                PlayEvent::Renormalize { tick, scale } => {
                    out.push_str(&format!("renormalize tick={tick} scale={scale}\n"));
                }
            }
        }
        out
    }
}
