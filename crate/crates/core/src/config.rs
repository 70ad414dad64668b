//! Run configuration: a line-oriented `key = value` format with primitive
//! declarations. Parsing validates everything with line-anchored errors and
//! the canonical rendering round-trips.
//!
//! ```text
//! # free particle demo
//! d = 1
//! extent = 201
//! l_p = 0.1
//! tau = 0.1
//! c_hat = 30
//! regime = exhaustive
//! seed = 42
//! ticks = 5
//! renormalize = true
//! primitive P1 kernel=free species=a
//! primitive P2 kernel=table:kernel.tsv species=b
//! expr = 0.5*P1 (+) 0.5*P2
//! initial = gaussian sigma=1 k0=1 x0=0
//! out_dir = out
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{parse_expr, KernelKind, PrimitiveSpec, PrimitiveTable, ProcessExpr};
use crate::engine::{GenerationConfig, Regime};
use crate::error::{ConfigErrorKind, Error, Result};
use crate::lattice::{Domain, LatticeParams, Site};
use crate::tapestry::properties;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelDecl {
    Free,
    /// Path to a tabulated-kernel text file, resolved relative to the config.
    Table(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveDecl {
    pub name: String,
    pub kernel: KernelDecl,
    pub properties: BTreeMap<String, String>,
    /// Per-round emission count override (`n=<count>`).
    pub per_round: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialDecl {
    /// Single unit-strength informon at a site.
    Delta { site: Vec<i64> },
    /// Gaussian packet sampled on the lattice, then renormalized.
    Gaussian { sigma: f64, k0: Vec<f64>, x0: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyDecl {
    pub spacings: Vec<f64>,
    pub t_final: f64,
    pub tau: f64,
    pub cone_base_sigmas: f64,
    pub cone_growth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub extent: Vec<usize>,
    pub l_p: f64,
    pub tau: f64,
    pub c_hat: f64,
    pub n_per_round: usize,
    pub regime: Regime,
    pub seed: u64,
    pub ticks: usize,
    pub renormalize: bool,
    pub record_content: bool,
    pub budget_leaves: usize,
    pub out_dir: String,
    pub primitives: Vec<PrimitiveDecl>,
    pub expr_text: String,
    pub initial: InitialDecl,
    pub study: Option<StudyDecl>,
}

fn cfg_err(line: usize, kind: ConfigErrorKind, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into(), kind }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| cfg_err(line, ConfigErrorKind::BadValue, format!("bad {key}: {value:?}")))
}

fn parse_f64_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_f64(line, key, v.trim())).collect()
}

/// Parses the configuration text. Defaults: `tau = l_p`, `c_hat = 1`,
/// `n_per_round = 1`, `regime = sampled`, `seed = 0`, `ticks = 1`,
/// `renormalize = true`, `record_content = true`, `initial = delta 0`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut primitives: Vec<PrimitiveDecl> = Vec::new();
    let mut expr_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("primitive ") {
            let mut parts = rest.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| {
                    cfg_err(lineno, ConfigErrorKind::MissingField, "primitive needs a name")
                })?
                .to_string();
            if primitives.iter().any(|p| p.name == name) {
                return Err(cfg_err(
                    lineno,
                    ConfigErrorKind::DuplicateDeclaration,
                    format!("primitive {name:?} declared twice"),
                ));
            }
            let mut kernel = KernelDecl::Free;
            let mut per_round = None;
            let mut props = BTreeMap::new();
            for item in parts {
                let (k, v) = item.split_once('=').ok_or_else(|| {
                    cfg_err(lineno, ConfigErrorKind::BadValue, format!("expected k=v, got {item:?}"))
                })?;
                if k == "n" {
                    per_round = Some(v.parse().map_err(|_| {
                        cfg_err(lineno, ConfigErrorKind::BadValue, format!("bad primitive n {v:?}"))
                    })?);
                } else if k == "kernel" {
                    kernel = match v {
                        "free" => KernelDecl::Free,
                        other => match other.strip_prefix("table:") {
                            Some(path) => KernelDecl::Table(path.to_string()),
                            None => {
                                return Err(cfg_err(
                                    lineno,
                                    ConfigErrorKind::BadValue,
                                    format!("unknown kernel {other:?}"),
                                ))
                            }
                        },
                    };
                } else {
                    props.insert(k.to_string(), v.to_string());
                }
            }
            primitives.push(PrimitiveDecl { name, kernel, properties: props, per_round });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            cfg_err(lineno, ConfigErrorKind::BadValue, format!("expected key = value, got {line:?}"))
        })?;
        let key = key.trim().to_string();
        if key == "expr" {
            expr_line = lineno;
        }
        if keys.contains_key(&key) {
            return Err(cfg_err(
                lineno,
                ConfigErrorKind::DuplicateDeclaration,
                format!("key {key:?} set twice"),
            ));
        }
        keys.insert(key, (lineno, value.trim().to_string()));
    }

    let take = |keys: &mut BTreeMap<String, (usize, String)>, key: &str| keys.remove(key);

    let (d_line, d_text) = take(&mut keys, "d")
        .ok_or_else(|| cfg_err(0, ConfigErrorKind::MissingField, "missing required key d"))?;
    let d: usize = d_text
        .parse()
        .map_err(|_| cfg_err(d_line, ConfigErrorKind::BadValue, "d must be 1, 2 or 3"))?;

    let (e_line, e_text) = take(&mut keys, "extent")
        .ok_or_else(|| cfg_err(0, ConfigErrorKind::MissingField, "missing required key extent"))?;
    let extent: Vec<usize> = e_text
        .split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| {
                cfg_err(e_line, ConfigErrorKind::BadValue, format!("bad extent {v:?}"))
            })
        })
        .collect::<Result<_>>()?;
    let extent = if extent.len() == 1 && d > 1 { vec![extent[0]; d] } else { extent };
    if extent.len() != d {
        return Err(cfg_err(e_line, ConfigErrorKind::BadValue, "extent dimension differs from d"));
    }

    let (l_line, l_text) = take(&mut keys, "l_p")
        .ok_or_else(|| cfg_err(0, ConfigErrorKind::MissingField, "missing required key l_p"))?;
    let l_p = parse_f64(l_line, "l_p", &l_text)?;

    let tau = match take(&mut keys, "tau") {
        Some((line, v)) => parse_f64(line, "tau", &v)?,
        None => l_p,
    };
    let c_hat = match take(&mut keys, "c_hat") {
        Some((line, v)) => parse_f64(line, "c_hat", &v)?,
        None => 1.0,
    };
    let n_per_round = match take(&mut keys, "n_per_round") {
        Some((line, v)) => v
            .parse()
            .map_err(|_| cfg_err(line, ConfigErrorKind::BadValue, "bad n_per_round"))?,
        None => 1,
    };
    let regime = match take(&mut keys, "regime") {
        Some((_, v)) if v == "exhaustive" => Regime::Exhaustive,
        Some((_, v)) if v == "sampled" => Regime::Sampled,
        Some((line, v)) => {
            return Err(cfg_err(line, ConfigErrorKind::BadValue, format!("unknown regime {v:?}")))
        }
        None => Regime::Sampled,
    };
    let seed = match take(&mut keys, "seed") {
        Some((line, v)) => {
            v.parse().map_err(|_| cfg_err(line, ConfigErrorKind::BadValue, "bad seed"))?
        }
        None => 0,
    };
    let ticks = match take(&mut keys, "ticks") {
        Some((line, v)) => {
            v.parse().map_err(|_| cfg_err(line, ConfigErrorKind::BadValue, "bad ticks"))?
        }
        None => 1,
    };
    let parse_bool = |line: usize, v: &str| match v {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(cfg_err(line, ConfigErrorKind::BadValue, format!("bad bool {other:?}"))),
    };
    let renormalize = match take(&mut keys, "renormalize") {
        Some((line, v)) => parse_bool(line, &v)?,
        None => true,
    };
    let record_content = match take(&mut keys, "record_content") {
        Some((line, v)) => parse_bool(line, &v)?,
        None => true,
    };
    let budget_leaves = match take(&mut keys, "budget_leaves") {
        Some((line, v)) => {
            v.parse().map_err(|_| cfg_err(line, ConfigErrorKind::BadValue, "bad budget_leaves"))?
        }
        None => 0,
    };
    let out_dir = match take(&mut keys, "out_dir") {
        Some((_, v)) => v,
        None => "out".to_string(),
    };

    let initial = match take(&mut keys, "initial") {
        None => InitialDecl::Delta { site: vec![0; d] },
        Some((line, v)) => {
            let mut parts = v.split_whitespace();
            match parts.next() {
                Some("delta") => {
                    let site_text = parts.next().unwrap_or("0");
                    let site: Vec<i64> = site_text
                        .split(',')
                        .map(|c| {
                            c.parse().map_err(|_| {
                                cfg_err(line, ConfigErrorKind::BadValue, "bad delta site")
                            })
                        })
                        .collect::<Result<_>>()?;
                    let site = if site.len() == 1 && d > 1 { vec![site[0]; d] } else { site };
                    InitialDecl::Delta { site }
                }
                Some("gaussian") => {
                    let mut sigma = 1.0;
                    let mut k0 = vec![0.0; d];
                    let mut x0 = vec![0.0; d];
                    for item in parts {
                        let (k, v) = item.split_once('=').ok_or_else(|| {
                            cfg_err(line, ConfigErrorKind::BadValue, "expected k=v in initial")
                        })?;
                        match k {
                            "sigma" => sigma = parse_f64(line, "sigma", v)?,
                            "k0" => k0 = parse_f64_list(line, "k0", v)?,
                            "x0" => x0 = parse_f64_list(line, "x0", v)?,
                            other => {
                                return Err(cfg_err(
                                    line,
                                    ConfigErrorKind::BadValue,
                                    format!("unknown initial field {other:?}"),
                                ))
                            }
                        }
                    }
                    let k0 = if k0.len() == 1 && d > 1 { vec![k0[0]; d] } else { k0 };
                    let x0 = if x0.len() == 1 && d > 1 { vec![x0[0]; d] } else { x0 };
                    InitialDecl::Gaussian { sigma, k0, x0 }
                }
                other => {
                    return Err(cfg_err(
                        line,
                        ConfigErrorKind::BadValue,
                        format!("unknown initial kind {other:?}"),
                    ))
                }
            }
        }
    };

    let study = {
        let spacings = take(&mut keys, "study_spacings");
        let t_final = take(&mut keys, "study_t_final");
        let s_tau = take(&mut keys, "study_tau");
        let base = take(&mut keys, "study_cone_sigmas");
        let growth = take(&mut keys, "study_cone_growth");
        match spacings {
            None => None,
            Some((line, v)) => {
                let spacings = parse_f64_list(line, "study_spacings", &v)?;
                let t_final = match t_final {
                    Some((l2, v2)) => parse_f64(l2, "study_t_final", &v2)?,
                    None => 1.0,
                };
                let tau = match s_tau {
                    Some((l2, v2)) => parse_f64(l2, "study_tau", &v2)?,
                    None => t_final / 2.0,
                };
                let cone_base_sigmas = match base {
                    Some((l2, v2)) => parse_f64(l2, "study_cone_sigmas", &v2)?,
                    None => 6.0,
                };
                let cone_growth = match growth {
                    Some((l2, v2)) => parse_f64(l2, "study_cone_growth", &v2)?,
                    None => 2.0,
                };
                Some(StudyDecl { spacings, t_final, tau, cone_base_sigmas, cone_growth })
            }
        }
    };

    let (expr_ln, expr_text) = take(&mut keys, "expr")
        .ok_or_else(|| cfg_err(0, ConfigErrorKind::MissingField, "missing required key expr"))?;
    let _ = expr_ln;

    if let Some((line, _)) = keys.values().next() {
        let unknown: Vec<&String> = keys.keys().collect();
        return Err(cfg_err(
            *line,
            ConfigErrorKind::BadValue,
            format!("unknown keys: {unknown:?}"),
        ));
    }

    let config = RunConfig {
        d,
        extent,
        l_p,
        tau,
        c_hat,
        n_per_round,
        regime,
        seed,
        ticks,
        renormalize,
        record_content,
        budget_leaves,
        out_dir,
        primitives,
        expr_text,
        initial,
        study,
    };

    // Validate the expression against the declared primitives now so the
    // error carries the config's line number.
    config.build_expr(&config.primitive_table(None)?).map_err(|e| match e {
        Error::Expr { message, .. } => cfg_err(
            expr_line,
            ConfigErrorKind::MalformedExpression,
            format!("{message} (in expr)"),
        ),
        other => other,
    })?;
    Ok(config)
}

/// Loader callback resolving a tabulated-kernel path into its table.
pub type TableLoader<'a> = &'a dyn Fn(&str) -> Result<crate::kernel::KernelTable>;

impl RunConfig {
    /// Builds the primitive table. Tabulated kernels are loaded through
    /// `load_table`; pass `None` to treat table declarations as free kernels
    /// (pure parsing).
    pub fn primitive_table(&self, load_table: Option<TableLoader>) -> Result<PrimitiveTable> {
        let mut table = PrimitiveTable::new();
        for decl in &self.primitives {
            let kernel = match &decl.kernel {
                KernelDecl::Free => KernelKind::Free,
                KernelDecl::Table(path) => match load_table {
                    Some(loader) => KernelKind::Tabulated(loader(path)?),
                    None => KernelKind::Free,
                },
            };
            let spec = PrimitiveSpec::with_emissions(
                decl.name.clone(),
                kernel,
                properties(decl.properties.clone()),
                decl.per_round,
            );
            table.insert(decl.name.clone(), spec);
        }
        Ok(table)
    }

    pub fn build_expr(&self, table: &PrimitiveTable) -> Result<ProcessExpr> {
        parse_expr(&self.expr_text, table)
    }

    pub fn lattice_params(&self) -> Result<LatticeParams> {
        LatticeParams::new(self.d, self.l_p, self.tau, self.c_hat)
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.extent.clone())
    }

    pub fn generation_config(&self) -> Result<GenerationConfig> {
        Ok(GenerationConfig {
            domain: self.domain()?,
            params: self.lattice_params()?,
            n_per_round: self.n_per_round,
            regime: self.regime,
            seed: self.seed,
            renormalize: self.renormalize,
            record_content: self.record_content,
            budget_leaves: self.budget_leaves,
            site_strategy: Default::default(),
        })
    }

    pub fn initial_tapestry(&self) -> Result<crate::tapestry::CausalTapestry> {
        match &self.initial {
            InitialDecl::Delta { site } => Ok(crate::engine::initial_delta(
                Site::new(site),
                num_complex::Complex64::new(1.0, 0.0),
                crate::tapestry::no_properties(),
            )),
            InitialDecl::Gaussian { sigma, k0, x0 } => {
                let state = crate::oracle::AnalyticState::new(*sigma, x0.clone(), k0.clone())?;
                crate::engine::initial_gaussian(&state, &self.domain()?, &self.lattice_params()?, 0)
            }
        }
    }

    /// Canonical text rendering; parse(render(c)) == c.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("d = {}\n", self.d));
        let extent: Vec<String> = self.extent.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("extent = {}\n", extent.join(",")));
        out.push_str(&format!("l_p = {}\n", self.l_p));
        out.push_str(&format!("tau = {}\n", self.tau));
        out.push_str(&format!("c_hat = {}\n", self.c_hat));
        out.push_str(&format!("n_per_round = {}\n", self.n_per_round));
        out.push_str(&format!(
            "regime = {}\n",
            match self.regime {
                Regime::Exhaustive => "exhaustive",
                Regime::Sampled => "sampled",
            }
        ));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("ticks = {}\n", self.ticks));
        out.push_str(&format!("renormalize = {}\n", self.renormalize));
        out.push_str(&format!("record_content = {}\n", self.record_content));
        out.push_str(&format!("budget_leaves = {}\n", self.budget_leaves));
        out.push_str(&format!("out_dir = {}\n", self.out_dir));
        for p in &self.primitives {
            out.push_str(&format!("primitive {}", p.name));
            match &p.kernel {
                KernelDecl::Free => out.push_str(" kernel=free"),
                KernelDecl::Table(path) => out.push_str(&format!(" kernel=table:{path}")),
            }
            if let Some(n) = p.per_round {
                out.push_str(&format!(" n={n}"));
            }
            for (k, v) in &p.properties {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        match &self.initial {
            InitialDecl::Delta { site } => {
                let site: Vec<String> = site.iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("initial = delta {}\n", site.join(",")));
            }
            InitialDecl::Gaussian { sigma, k0, x0 } => {
                let fmt = |v: &[f64]| {
                    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                };
                out.push_str(&format!(
                    "initial = gaussian sigma={} k0={} x0={}\n",
                    sigma,
                    fmt(k0),
                    fmt(x0)
                ));
            }
        }
        if let Some(study) = &self.study {
            let spacings: Vec<String> = study.spacings.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("study_spacings = {}\n", spacings.join(",")));
            out.push_str(&format!("study_t_final = {}\n", study.t_final));
            out.push_str(&format!("study_tau = {}\n", study.tau));
            out.push_str(&format!("study_cone_sigmas = {}\n", study.cone_base_sigmas));
            out.push_str(&format!("study_cone_growth = {}\n", study.cone_growth));
        }
        out.push_str(&format!("expr = {}\n", self.expr_text));
        out
    }
}

/// Resolves primitives with filesystem-backed tabulated kernels.
pub fn load_primitive_table(config: &RunConfig, base_dir: &std::path::Path) -> Result<PrimitiveTable> {
    let loader = |path: &str| -> Result<crate::kernel::KernelTable> {
        let full = base_dir.join(path);
        let text = std::fs::read_to_string(&full)?;
        crate::kernel::parse_kernel_table(&text)
    };
    let mut table = PrimitiveTable::new();
    for decl in &config.primitives {
        let kernel = match &decl.kernel {
            KernelDecl::Free => KernelKind::Free,
            KernelDecl::Table(path) => KernelKind::Tabulated(loader(path)?),
        };
        table.insert(
            decl.name.clone(),
            PrimitiveSpec::with_emissions(
                decl.name.clone(),
                kernel,
                properties(decl.properties.clone()),
                decl.per_round,
            ),
        );
    }
    Ok(table)
}

pub type SharedPrimitive = Arc<PrimitiveSpec>;
