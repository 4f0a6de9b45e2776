//! Command drivers and their JSON reports.
//!
//! Reports are `serde_json` values with sorted keys, and every number is an
//! exact `p/q` string, so identical inputs give byte-identical output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::arith::{format_rational, gcd_certificate_condition, rat_int, Moduli, Rational};
use crate::designer::design_all_nonzero;
use crate::error::{Error, Result};
use crate::hitting::{
    hit_profile, minimal_level, closed_form_alpha, closed_form_level, preimage_connected_check,
    preimage_containment_check, preimage_equality_check, HittingCertificate,
};
use crate::lifting::{image_set_guarded, PLLoop, WindingVector};
use crate::tower::{
    build_tower, choose_params, deep_candidates, epsilon_bound_check, grid_base_points,
    recipe_identity_check, verify_tower, EpsilonSummary, TowerParams, TowerReport, LEVEL_SEARCH_LIMIT,
};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_SIZE_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit code for a failed run.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::SizeGuardExceeded { .. } => EXIT_SIZE_GUARD,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID_INPUT,
    }
}

fn num(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn int<T: Into<BigInt>>(x: T) -> Value {
    num(&rat_int(&x.into()))
}

fn ints<T: Copy + Into<BigInt>>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|&x| int(x)).collect())
}

fn big(x: &BigInt) -> Value {
    num(&rat_int(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub notes: Vec<String>,
    /// Wall-clock milliseconds, only when requested.
    pub timing_ms: Option<u128>,
    pub verification_failed: bool,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("inputs".into(), self.inputs.clone());
        m.insert("results".into(), self.results.clone());
        m.insert("notes".into(), json!(self.notes));
        m.insert("verified".into(), json!(!self.verification_failed));
        if let Some(ms) = self.timing_ms {
            m.insert("timing".into(), json!({ "elapsed_ms": format!("{ms}/1") }));
        }
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.verification_failed {
            EXIT_VERIFICATION_FAILED
        } else {
            EXIT_OK
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// `"2,3"` or `"2, 3"`.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &'static str) -> Result<Vec<T>> {
    let err = || Error::Parse {
        what,
        input: s.to_string(),
    };
    if s.trim().is_empty() {
        return Err(err());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| err())).collect()
}

/// `"a..b"` or `"a..=b"`, both inclusive; a single `"n"` is `n..n`.
pub fn parse_range(s: &str) -> Result<(u32, u32)> {
    let err = || Error::Parse {
        what: "range",
        input: s.to_string(),
    };
    let t = s.trim();
    let (a, b) = match t.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (t, t),
    };
    let a: u32 = a.trim().parse().map_err(|_| err())?;
    let b: u32 = b.trim().parse().map_err(|_| err())?;
    if a > b {
        return Err(err());
    }
    Ok((a, b))
}

/// `"3,0;-2,1"`: loops separated by `;`.
pub fn parse_loops(s: &str) -> Result<Vec<WindingVector>> {
    s.split(';')
        .map(|part| parse_list::<i64>(part, "loop winding").map(WindingVector::new))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifyConfig {
    pub moduli: Moduli,
    pub winding: WindingVector,
    pub range: (u32, u32),
    pub guard: u64,
}

fn base_inputs(moduli: &Moduli, winding: &WindingVector, guard: u64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("moduli".into(), ints(moduli.values()));
    m.insert("winding".into(), ints(winding.entries()));
    m.insert("size_guard".into(), int(guard));
    m
}

fn witness_key(j: &[u64]) -> String {
    j.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Levels, per-stage verdicts and witnesses for one winding.
pub fn cmd_certify(cfg: &CertifyConfig) -> Result<Report> {
    let (s, moduli, guard) = (&cfg.winding, &cfg.moduli, cfg.guard);
    if s.rank() != moduli.rank() {
        return Err(Error::DimensionMismatch {
            expected: moduli.rank(),
            got: s.rank(),
        });
    }
    s.require_admissible()?;
    let mut notes = Vec::new();
    let minimal = minimal_level(s, moduli, LEVEL_SEARCH_LIMIT)?;
    let closed_form = match closed_form_level(s, moduli) {
        Ok(n) => {
            let alpha = closed_form_alpha(s, moduli)?;
            json!({ "alpha": int(alpha), "level": big(&n) })
        }
        Err(Error::NoDecomposition { s: v, m }) => {
            notes.push(format!("closed-form level undefined: {v} has no decomposition m^a*q with gcd(q,{m})=1"));
            Value::Null
        }
        Err(e) => return Err(e),
    };

    let looped = PLLoop::straight(s);
    let mut failed = false;
    let mut stages = Vec::new();
    for n in cfg.range.0..=cfg.range.1 {
        let profile = hit_profile(s, moduli, n, guard)?;
        let predicted = (0..s.rank()).all(|i| gcd_certificate_condition(&s.big(i), moduli.get(i), n));
        let equality = preimage_equality_check(&looped, moduli, n, guard)?;
        let containment = preimage_containment_check(&looped, moduli, n, guard)?;
        let (connected, components) = preimage_connected_check(&looped, moduli, n, guard)?;
        let at_level = n >= minimal;
        if profile.complete() != predicted || !containment || (at_level && !(equality && connected)) {
            failed = true;
        }
        let mut stage = Map::new();
        stage.insert("n".into(), int(n));
        stage.insert("hitting".into(), json!(profile.complete()));
        stage.insert("gcd_criterion".into(), json!(predicted));
        stage.insert("preimages_hit".into(), int(profile.hit.len() as u64));
        stage.insert("preimages_total".into(), int(profile.total as u64));
        stage.insert("period".into(), big(&profile.period));
        stage.insert("preimage_equality".into(), json!(equality));
        stage.insert("preimage_containment".into(), json!(containment));
        stage.insert("preimage_connected".into(), json!(connected));
        stage.insert("preimage_components".into(), int(components as u64));
        if predicted {
            let cert = HittingCertificate::build(s, moduli, n)?;
            if !cert.verify() {
                failed = true;
            }
            let witnesses: Map<String, Value> = cert
                .witnesses
                .iter()
                .map(|(j, k)| (witness_key(j), big(k)))
                .collect();
            let recipe = match &cert.recipe {
                Some(r) => json!({
                    "alpha": ints(&r.alpha),
                    "beta": ints(&r.beta),
                    "q": Value::Array(r.q.iter().map(big).collect()),
                    "u": big(&r.u),
                    "u_i": Value::Array(r.u_i.iter().map(big).collect()),
                }),
                None => Value::Null,
            };
            stage.insert(
                "certificate".into(),
                json!({ "verified": cert.verify(), "witnesses": witnesses, "recipe": recipe }),
            );
        } else {
            stage.insert("certificate".into(), Value::Null);
        }
        stages.push(Value::Object(stage));
    }

    let mut inputs = base_inputs(moduli, s, guard);
    inputs.insert("range".into(), json!([int(cfg.range.0), int(cfg.range.1)]));
    Ok(Report {
        command: "certify".into(),
        inputs: Value::Object(inputs),
        results: json!({
            "minimal_level": int(minimal),
            "closed_form_level": closed_form,
            "stages": stages,
        }),
        notes,
        timing_ms: None,
        verification_failed: failed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerConfig {
    pub moduli: Moduli,
    pub winding: WindingVector,
    pub epsilon: Rational,
    pub depth: u32,
    /// Coherent points drawn through the deepest level for the ε check.
    pub samples: usize,
    /// Replaces the chosen `n1`, e.g. to probe levels below the certificate.
    pub n1_override: Option<u32>,
    pub guard: u64,
}

pub fn params_value(p: &TowerParams) -> Value {
    json!({
        "epsilon": num(&p.epsilon),
        "clamped": p.clamped,
        "n0": int(p.n0),
        "delta": num(&p.delta),
        "n1": int(p.n1),
        "n1_exceeds_n0": p.n1_exceeds_n0(),
        "closed_form_level": p.closed_form_level.as_ref().map(big).unwrap_or(Value::Null),
        "minimal_level": int(p.minimal_level),
        "depth": int(p.depth),
    })
}

fn levels_value(r: &TowerReport) -> Value {
    Value::Array(
        r.levels
            .iter()
            .map(|l| {
                json!({
                    "index": int(l.index as u64),
                    "components": int(l.components as u64),
                    "connected": l.connected,
                    "contains_base": l.contains_base,
                    "bonding_contained": l.bonding_contained,
                    "bonding_equal": l.bonding_equal,
                    "equality_required": l.equality_required,
                    "ok": l.ok(),
                })
            })
            .collect(),
    )
}

fn epsilon_value(e: &EpsilonSummary) -> Value {
    json!({
        "ok": e.ok,
        "checked": int(e.checked as u64),
        "failures": int(e.failures as u64),
        "max_distance": num(&e.max_distance),
    })
}

/// Parameters, level flags and the ε check for one tower.
pub fn cmd_tower(cfg: &TowerConfig) -> Result<Report> {
    let (moduli, s, guard) = (&cfg.moduli, &cfg.winding, cfg.guard);
    if s.rank() != moduli.rank() {
        return Err(Error::DimensionMismatch {
            expected: moduli.rank(),
            got: s.rank(),
        });
    }
    s.require_admissible()?;
    let mut params = choose_params(&cfg.epsilon, moduli, s, cfg.depth)?;
    let mut notes = Vec::new();
    if let Some(n1) = cfg.n1_override {
        notes.push(format!("n1 overridden: {} -> {n1}", params.n1));
        params.n1 = n1;
    }
    if params.clamped {
        notes.push(format!("epsilon {} clamped to 1/1", format_rational(&cfg.epsilon)));
    }
    if !params.n1_exceeds_n0() {
        notes.push("n1 does not exceed n0; recorded, not enforced".into());
    }
    let tower = build_tower(&PLLoop::straight(s), &params, moduli, guard)?;
    let report = verify_tower(&tower)?;
    let identity = recipe_identity_check(&tower, guard)?;
    let bases = grid_base_points(&tower)?;
    let candidates = deep_candidates(&tower, cfg.samples)?;
    let eps = epsilon_bound_check(&tower, &bases, &candidates)?;
    let all_ok = report.all_ok() && identity.iter().all(|&b| b) && eps.ok;

    let mut inputs = base_inputs(moduli, s, guard);
    inputs.insert("epsilon".into(), num(&cfg.epsilon));
    inputs.insert("depth".into(), int(cfg.depth));
    inputs.insert("samples".into(), int(cfg.samples as u64));
    inputs.insert("n1_override".into(), cfg.n1_override.map(int).unwrap_or(Value::Null));
    Ok(Report {
        command: "tower".into(),
        inputs: Value::Object(inputs),
        results: json!({
            "params": params_value(&params),
            "levels": levels_value(&report),
            "recipe_identity": identity,
            "epsilon_check": epsilon_value(&eps),
            "base_points": int(bases.len() as u64),
            "all_ok": all_ok,
        }),
        notes,
        timing_ms: None,
        verification_failed: !all_ok,
    })
}

/// Stage-by-stage combination of a loop family.
pub fn cmd_combine(loops: &[WindingVector]) -> Result<Report> {
    let d = design_all_nonzero(loops)?;
    let steps: Vec<Value> = d
        .steps
        .iter()
        .map(|st| {
            json!({
                "coordinate": int(st.coordinate as u64),
                "l": int(st.l),
                "before": ints(st.before.entries()),
                "injected": ints(st.injected.entries()),
                "after": ints(st.after.entries()),
            })
        })
        .collect();
    let concat_ok = d.concatenation.winding() == d.final_winding;
    Ok(Report {
        command: "combine".into(),
        inputs: json!({
            "loops": Value::Array(loops.iter().map(|l| ints(l.entries())).collect()),
        }),
        results: json!({
            "steps": steps,
            "coefficients": ints(&d.coefficients),
            "final": ints(d.final_winding.entries()),
            "concatenation_pieces": int(d.concatenation.pieces() as u64),
            "concatenation_winding_matches": concat_ok,
        }),
        notes: Vec::new(),
        timing_ms: None,
        verification_failed: !concat_ok || !d.final_winding.is_admissible(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportConfig {
    pub moduli: Moduli,
    pub winding: WindingVector,
    /// Lifted images `Im γ^{(n)}` to write.
    pub stages: Vec<u32>,
    /// Tower levels to write, as `(epsilon, depth)`.
    pub tower: Option<(Rational, u32)>,
    pub out_dir: PathBuf,
    pub guard: u64,
}

/// CSV per requested image or tower level; nothing requested writes nothing.
pub fn cmd_export(cfg: &ExportConfig) -> Result<Report> {
    let (moduli, s, guard) = (&cfg.moduli, &cfg.winding, cfg.guard);
    if s.rank() != moduli.rank() {
        return Err(Error::DimensionMismatch {
            expected: moduli.rank(),
            got: s.rank(),
        });
    }
    let looped = PLLoop::straight(s);
    let mut files: Vec<(String, String)> = Vec::new();
    for &n in &cfg.stages {
        let img = image_set_guarded(&looped, n, moduli, None, guard)?;
        files.push((format!("image_n{n}.csv"), img.to_csv()));
    }
    if let Some((eps, depth)) = &cfg.tower {
        let params = choose_params(eps, moduli, s, *depth)?;
        let tower = build_tower(&looped, &params, moduli, guard)?;
        let width = tower.len().to_string().len();
        for (k, level) in tower.levels.iter().enumerate() {
            files.push((format!("tower_L{:0width$}.csv", k + 1), level.to_csv()));
        }
    }
    if !files.is_empty() {
        fs::create_dir_all(&cfg.out_dir)?;
    }
    let mut written = Vec::new();
    for (name, body) in &files {
        write_atomic(&cfg.out_dir.join(name), body)?;
        written.push(json!({ "file": name, "rows": int(body.lines().count().saturating_sub(1) as u64) }));
    }
    let mut inputs = base_inputs(moduli, s, guard);
    inputs.insert("stages".into(), ints(&cfg.stages));
    inputs.insert(
        "tower".into(),
        match &cfg.tower {
            Some((e, d)) => json!({ "epsilon": num(e), "depth": int(*d) }),
            None => Value::Null,
        },
    );
    Ok(Report {
        command: "export".into(),
        inputs: Value::Object(inputs),
        results: json!({ "files": written }),
        notes: Vec::new(),
        timing_ms: None,
        verification_failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{parse_rational, rat};

    fn m23() -> Moduli {
        Moduli::new(vec![2, 3]).unwrap()
    }

    fn numbers(v: &Value, out: &mut Vec<String>) {
        match v {
            Value::String(s) if s.contains('/') => out.push(s.clone()),
            Value::Array(a) => a.iter().for_each(|x| numbers(x, out)),
            Value::Object(o) => o.values().for_each(|x| numbers(x, out)),
            _ => {}
        }
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_range("0..3").unwrap(), (0, 3));
        assert_eq!(parse_range("1..=2").unwrap(), (1, 2));
        assert_eq!(parse_range("4").unwrap(), (4, 4));
        assert!(parse_range("3..1").is_err());
        assert_eq!(parse_loops("3,0;-2,1").unwrap(), vec![WindingVector::new(vec![3, 0]), WindingVector::new(vec![-2, 1])]);
        assert!(parse_list::<u64>("2,x", "moduli").is_err());
    }

    #[test]
    fn certify_example() {
        let cfg = CertifyConfig {
            moduli: m23(),
            winding: WindingVector::new(vec![2, 3]),
            range: (0, 3),
            guard: 1_000_000,
        };
        let r = cmd_certify(&cfg).unwrap();
        assert_eq!(r.exit_code(), EXIT_OK);
        let v = r.to_value();
        let hits: Vec<bool> = v["results"]["stages"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["hitting"].as_bool().unwrap())
            .collect();
        assert_eq!(hits, vec![false, true, true, true]);
        assert_eq!(v["results"]["minimal_level"], json!("1/1"));
        assert_eq!(v["results"]["closed_form_level"]["level"], json!("6/1"));
        assert_eq!(v["results"]["stages"][1]["certificate"]["witnesses"]["1,2"], json!("5/1"));
        assert!(v.get("timing").is_none());

        let mut all = Vec::new();
        numbers(&v, &mut all);
        assert!(!all.is_empty());
        for s in all {
            assert_eq!(format_rational(&parse_rational(&s).unwrap()), s);
        }
    }

    #[test]
    fn combine_example() {
        let r = cmd_combine(&parse_loops("3,0;-2,1").unwrap()).unwrap();
        let v = r.to_value();
        assert_eq!(v["results"]["final"], json!(["-5/1", "4/1"]));
        assert_eq!(v["results"]["steps"][0]["l"], json!("4/1"));
        let err = cmd_combine(&parse_loops("0,1;1,1").unwrap()).unwrap_err();
        assert_eq!(exit_code_for(&err), EXIT_INVALID_INPUT);
    }

    #[test]
    fn tower_rejects_zero_winding() {
        let cfg = TowerConfig {
            moduli: m23(),
            winding: WindingVector::new(vec![0, 1]),
            epsilon: rat(1, 2),
            depth: 1,
            samples: 4,
            n1_override: None,
            guard: 1_000_000,
        };
        assert_eq!(exit_code_for(&cmd_tower(&cfg).unwrap_err()), EXIT_INVALID_INPUT);
    }

    #[test]
    fn guard_maps_to_exit_three() {
        let cfg = CertifyConfig {
            moduli: m23(),
            winding: WindingVector::new(vec![2, 3]),
            range: (0, 3),
            guard: 50,
        };
        assert_eq!(exit_code_for(&cmd_certify(&cfg).unwrap_err()), EXIT_SIZE_GUARD);
    }
}
