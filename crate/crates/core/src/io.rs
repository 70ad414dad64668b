//! On-disk formats: tapestry snapshots, grid/PCM/configuration exports and
//! the convergence table. Every artifact carries a `#`-prefixed header with
//! the config hash and seed; float fields use the shortest representation
//! that round-trips bit-exactly.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interp::{ConfigurationInterpretationWithPools, GlobalInterpretation};
use crate::lattice::{ManifoldPoint, Site};
use crate::oracle::StudyReport;
use crate::tapestry::{
    no_properties, properties, CausalTapestry, ContentRef, GeneratorTag, Informon, InformonId,
    TapestryBuilder,
};

/// FNV-1a 64-bit hash; stable fingerprint for artifact headers.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// Standard artifact header lines.
pub fn artifact_header(kind: &str, config_hash: u64, seed: u64) -> String {
    format!("# {kind}\n# config_hash=0x{config_hash:016x} seed={seed}\n")
}

fn fmt_props(informon: &Informon) -> String {
    if informon.properties.is_empty() {
        "-".to_string()
    } else {
        informon
            .properties
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn fmt_generator(informon: &Informon) -> String {
    match &informon.generator {
        None => "-".to_string(),
        Some(tag) => {
            if tag.slot.is_empty() {
                format!("@{}", tag.primitive)
            } else {
                format!("{}@{}", tag.slot_key(), tag.primitive)
            }
        }
    }
}

/// One informon per line: id, tick, site, re, im, properties, content ids,
/// generator. Tab-separated; bit-exact round-trip.
pub fn write_snapshot(t: &CausalTapestry, config_hash: u64, seed: u64) -> String {
    let mut out = artifact_header("tapestry-snapshot", config_hash, seed);
    let _ = writeln!(out, "# tick={} provenance={}", t.tick(), t.provenance());
    for n in t.informons() {
        let content = if n.content.is_empty() {
            "-".to_string()
        } else {
            n.content.iter().map(|c| c.id.to_string()).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.id,
            n.point.tick,
            n.point.site,
            n.strength.re,
            n.strength.im,
            fmt_props(n),
            content,
            fmt_generator(n),
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRecord {
    pub id: u64,
    pub tick: i64,
    pub site: Vec<i64>,
    pub strength: Complex64,
    pub properties: Vec<(String, String)>,
    pub content_ids: Vec<u64>,
    pub generator: Option<(Vec<u32>, String)>,
}

#[derive(Clone, Debug)]
pub struct SnapshotMeta {
    pub tick: i64,
    pub provenance: String,
}

/// Parses a snapshot back into records. The records round-trip bit-exactly;
/// resolving them into a tapestry needs the prior tapestry for content
/// points (the snapshot stores content ids only).
pub fn parse_snapshot(text: &str) -> Result<(SnapshotMeta, Vec<SnapshotRecord>)> {
    let mut meta = SnapshotMeta { tick: 0, provenance: String::new() };
    let mut records = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# tick=") {
            let (tick, prov) = rest.split_once(" provenance=").ok_or_else(|| {
                Error::Parameter(format!("snapshot line {}: bad meta", lineno + 1))
            })?;
            meta.tick = tick
                .parse()
                .map_err(|_| Error::Parameter(format!("snapshot line {}: bad tick", lineno + 1)))?;
            meta.provenance = prov.to_string();
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(Error::Parameter(format!(
                "snapshot line {}: expected 8 fields, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let bad = |what: &str| Error::Parameter(format!("snapshot line {}: bad {what}", lineno + 1));
        let id: u64 = cols[0].parse().map_err(|_| bad("id"))?;
        let tick: i64 = cols[1].parse().map_err(|_| bad("tick"))?;
        let site: Vec<i64> = cols[2]
            .split(',')
            .map(|c| c.parse().map_err(|_| bad("site")))
            .collect::<Result<_>>()?;
        let re: f64 = cols[3].parse().map_err(|_| bad("re"))?;
        let im: f64 = cols[4].parse().map_err(|_| bad("im"))?;
        let props = if cols[5] == "-" {
            Vec::new()
        } else {
            cols[5]
                .split(';')
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| bad("properties"))
                })
                .collect::<Result<_>>()?
        };
        let content_ids = if cols[6] == "-" {
            Vec::new()
        } else {
            cols[6]
                .split(',')
                .map(|c| c.parse().map_err(|_| bad("content")))
                .collect::<Result<_>>()?
        };
        let generator = if cols[7] == "-" {
            None
        } else {
            let (slot_text, name) = cols[7].split_once('@').ok_or_else(|| bad("generator"))?;
            let slot = if slot_text.is_empty() {
                Vec::new()
            } else {
                slot_text
                    .split('.')
                    .map(|s| s.parse().map_err(|_| bad("generator slot")))
                    .collect::<Result<_>>()?
            };
            Some((slot, name.to_string()))
        };
        records.push(SnapshotRecord {
            id,
            tick,
            site,
            strength: Complex64::new(re, im),
            properties: props,
            content_ids,
            generator,
        });
    }
    Ok((meta, records))
}

/// Rebuilds a tapestry from snapshot records, resolving content ids against
/// the prior tapestry. A dangling reference is an integrity error.
pub fn resolve_snapshot(
    meta: &SnapshotMeta,
    records: &[SnapshotRecord],
    prior: Option<&CausalTapestry>,
) -> Result<CausalTapestry> {
    let mut builder = TapestryBuilder::new(meta.tick, meta.provenance.clone());
    for r in records {
        let props = if r.properties.is_empty() {
            no_properties()
        } else {
            properties(r.properties.clone())
        };
        let mut informon = Informon::new(
            InformonId(r.id),
            ManifoldPoint::new(r.tick, Site::new(&r.site)),
            r.strength,
            props,
        );
        if !r.content_ids.is_empty() {
            let prior = prior.ok_or_else(|| {
                Error::Integrity("content references need the prior tapestry".into())
            })?;
            informon.content = r
                .content_ids
                .iter()
                .map(|&id| {
                    prior
                        .get(InformonId(id))
                        .map(|src| ContentRef { id: src.id, point: src.point })
                        .ok_or_else(|| {
                            Error::Integrity(format!("dangling content reference {id}"))
                        })
                })
                .collect::<Result<_>>()?;
        }
        if let Some((slot, name)) = &r.generator {
            informon = informon.with_generator(GeneratorTag::new(slot.clone(), name.clone()));
        }
        builder.push(informon);
    }
    builder.seal()
}

/// Grid export: coordinates, re, im, |Phi|^2 per line.
pub fn write_grid(
    interp: &GlobalInterpretation,
    points: &[Vec<f64>],
    config_hash: u64,
    seed: u64,
) -> Result<String> {
    let values = interp.eval_grid(points)?;
    let mut out = artifact_header("grid", config_hash, seed);
    let axes: Vec<String> = (0..interp.d).map(|a| format!("z{a}")).collect();
    let _ = writeln!(out, "# columns: {} re im abs2", axes.join(" "));
    for (p, v) in points.iter().zip(values) {
        let coords: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", coords.join("\t"), v.re, v.im, v.norm_sqr());
    }
    Ok(out)
}

/// PCM export: one strength-vector record per set element.
pub fn write_pcm(elements: &[GlobalInterpretation], config_hash: u64, seed: u64) -> String {
    let mut out = artifact_header("pcm", config_hash, seed);
    let _ = writeln!(out, "# elements={}", elements.len());
    for (i, e) in elements.iter().enumerate() {
        let terms: Vec<String> = e
            .terms()
            .map(|(site, g)| format!("{site}:{},{}", g.re, g.im))
            .collect();
        let _ = writeln!(out, "{i}\t{}", terms.join(";"));
    }
    out
}

/// Configuration export: one record per tuple term.
pub fn write_configuration(
    ci: &ConfigurationInterpretationWithPools,
    config_hash: u64,
    seed: u64,
) -> String {
    let mut out = artifact_header("configuration", config_hash, seed);
    let interp = &ci.interpretation;
    let _ = writeln!(out, "# slots={} terms={}", interp.slots, interp.terms.len());
    for term in &interp.terms {
        let sites: Vec<String> = term.sites.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}\t{}\t{}", sites.join("|"), term.coeff.re, term.coeff.im);
    }
    out
}

/// Convergence table: plot-ready `l_p tau t l2_error norm_leak runtime` rows.
pub fn write_convergence_table(report: &StudyReport, config_hash: u64, seed: u64) -> String {
    let mut out = artifact_header("convergence", config_hash, seed);
    let _ = writeln!(
        out,
        "# fitted_order={} monotone={}",
        report.fitted_order, report.monotone
    );
    let _ = writeln!(out, "# columns: l_p tau t_final l2_error norm_leak runtime_s");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.l_p, r.tau, r.t_final, r.l2_error, r.norm_leak, r.runtime_s
        );
    }
    out
}

/// Detection report: region id and probability per line.
pub fn write_detection_report(probabilities: &[(String, f64)], config_hash: u64, seed: u64) -> String {
    let mut out = artifact_header("detection", config_hash, seed);
    for (region, p) in probabilities {
        let _ = writeln!(out, "{region}\t{p}");
    }
    out
}
