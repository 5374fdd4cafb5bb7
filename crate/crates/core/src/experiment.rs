//! Serializable experiment configs and the dispatcher that turns one into a
//! report. A config replays to byte-identical output.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::circle::{derived_frac_bound, norm_bound, DEFAULT_DEPTH_CAP};
use crate::classify::{
    check_b_bounded, check_strongly_non_dli, check_weakly_dli_condition, weakly_dli_witness_set, ClassVerdict,
    WeakDliThresholds, DEFAULT_SCAN_LIMIT,
};
use crate::density::lift;
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, parse_ratio};
use crate::membership::{convergence_verdict, finite_support_member, statistical_scan};
use crate::parse::{parse_point, parse_ratio_spec, parse_set};
use crate::sequences::ArithSeq;
use crate::verify::{run_suite, SuiteTag, DEFAULT_SEED};
use crate::witness::{
    arbault_witness, consecutive_sum_sequence, continuum_family_point, factor_u, nonmember_run, Case,
};

pub const TOOL: &str = "circlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable consulted by the command line for the default
/// depth cap.
pub const DEPTH_CAP_ENV: &str = "CIRCLAB_DEPTH_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Seq,
    Lift,
    Density,
    Frac,
    Scan,
    Classify,
    Witness,
    Factor,
    Verify,
}

impl Command {
    /// `seq`, `lift` and `factor` print plain text unless asked otherwise;
    /// the rest print the JSON report.
    pub fn default_format(self) -> Format {
        match self {
            Command::Seq | Command::Lift | Command::Factor => Format::Table,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Every parameter any command takes; unused ones stay `None`. Field names
/// match the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// `seq`: one of `b`, `a`, `d`, `n`. `witness`: `continuum`,
    /// `nonmember` or `arbault`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jmax: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_degenerate: Option<bool>,
    /// `witness --kind arbault`: `consecutive-sum` or a comma separated list.
    /// `factor`: a comma separated list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            spec: None,
            format: None,
            kind: None,
            count: None,
            start: None,
            set: None,
            x: None,
            eps: None,
            horizons: None,
            horizon: None,
            index: None,
            depth: None,
            depth_cap: None,
            property: None,
            alpha: None,
            bound: None,
            case: None,
            m0: None,
            n0: None,
            jmax: None,
            zeta: None,
            rows: None,
            skip_degenerate: None,
            u: None,
            tag: None,
            seed: None,
        }
    }

    pub fn with_spec(mut self, spec: &str) -> Self {
        self.spec = Some(spec.into());
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("cannot encode config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn effective_format(&self) -> Format {
        self.format.unwrap_or(self.command.default_format())
    }

    fn arith(&self) -> Result<ArithSeq> {
        Ok(ArithSeq::new(parse_ratio_spec(need(&self.spec, "spec")?)?))
    }

    fn cap(&self) -> u64 {
        self.depth_cap.unwrap_or(DEFAULT_DEPTH_CAP)
    }

    fn horizon_list(&self) -> Result<Vec<u64>> {
        match (&self.horizons, self.horizon) {
            (Some(h), _) => Ok(h.clone()),
            (None, Some(h)) => Ok(vec![h]),
            (None, None) => Err(Error::Parse("missing parameter 'horizons'".into())),
        }
    }
}

fn need<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Parse(format!("missing parameter '{name}'")))
}

/// The three renderings of one run. `failure` is set when the run completed
/// but a certification or suite check did not hold.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub format: Format,
    pub json: String,
    pub table: String,
    pub csv: String,
    pub failure: Option<String>,
}

impl RunOutput {
    pub fn rendered(&self) -> &str {
        match self.format {
            Format::Json => &self.json,
            Format::Csv => &self.csv,
            Format::Table => &self.table,
        }
    }
}

struct Parts {
    result: Value,
    table: String,
    csv: String,
    failure: Option<String>,
}

impl Parts {
    fn new(result: Value, table: String, csv: String) -> Self {
        Self { result, table, csv, failure: None }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(format!("cannot encode report: {e}")))
}

/// Runs one config and assembles the report.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let parts = match config.command {
        Command::Seq => run_seq(config)?,
        Command::Lift => run_lift(config)?,
        Command::Density => run_density(config)?,
        Command::Frac => run_frac(config)?,
        Command::Scan => run_scan(config)?,
        Command::Classify => run_classify(config)?,
        Command::Witness => run_witness(config)?,
        Command::Factor => run_factor(config)?,
        Command::Verify => run_verify(config)?,
    };
    let report = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": to_value(config)?,
        "result": parts.result,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(RunOutput {
        format: config.effective_format(),
        json: text,
        table: parts.table,
        csv: parts.csv,
        failure: parts.failure,
    })
}

fn lines<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn run_seq(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let kind = c.kind.as_deref().unwrap_or("d");
    let count = c.count.unwrap_or(10);
    let default_start = if matches!(kind, "a" | "n") { 0 } else { 1 };
    let start = c.start.unwrap_or(default_start);
    if start < default_start {
        return Err(Error::Precondition(format!("'{kind}' is indexed from {default_start}")));
    }
    let d = seq.derived();
    let mut terms = Vec::with_capacity(count as usize);
    for idx in start..start + count {
        let v: BigUint = match kind {
            "b" => seq.ratio(idx),
            "a" => seq.term(idx),
            "d" => d.term(idx)?,
            "n" => seq.boundary(idx),
            _ => return Err(Error::Parse(format!("unknown sequence kind '{kind}' (b, a, d, n)"))),
        };
        terms.push((idx, v.to_string()));
    }
    let table = format!("{}\n", terms.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(","));
    let csv = lines("index,value", terms.iter().map(|(i, v)| format!("{i},{v}")));
    let result = json!({
        "kind": kind,
        "start": start,
        "terms": terms.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>(),
    });
    Ok(Parts::new(result, table, csv))
}

fn run_lift(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let set = parse_set(need(&c.set, "set")?, &seq)?;
    let lifted = lift(&set, &seq.derived())?;
    let mut result = json!({ "set": set.to_string(), "lifted": lifted.to_string() });
    let mut csv = String::from("lo,hi\n");
    if let Some(pieces) = lifted.as_intervals() {
        for (lo, hi) in pieces {
            csv.push_str(&format!("{lo},{hi}\n"));
        }
    }
    if let Some(h) = c.horizon {
        let est = lifted.prefix_density(h)?;
        result["density"] = to_value(&est)?;
    }
    Ok(Parts::new(result, format!("{lifted}\n"), csv))
}

fn density_rows(ests: &[crate::density::DensityEstimate]) -> (String, String) {
    let rows: Vec<String> = ests
        .iter()
        .map(|e| format!("{},{},{},{}", e.horizon, fmt_ratio(&e.lo), fmt_ratio(&e.hi), e.undecided_count))
        .collect();
    let csv = lines("N,lo,hi,undecided", rows);
    (csv.clone(), csv)
}

fn run_density(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let set = parse_set(need(&c.set, "set")?, &seq)?;
    let ests = c.horizon_list()?.into_iter().map(|n| set.prefix_density(n)).collect::<Result<Vec<_>>>()?;
    let (table, csv) = density_rows(&ests);
    Ok(Parts::new(json!({ "set": set.to_string(), "estimates": to_value(&ests)? }), table, csv))
}

fn run_frac(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let x = parse_point(need(&c.x, "x")?, &seq)?;
    let i = *need(&c.index, "index")?;
    let b = derived_frac_bound(&x, i, c.depth.unwrap_or(0), c.cap())?;
    let nb = norm_bound(&b.interval);
    let table = format!("{}\n", b.interval);
    let csv = lines(
        "index,k,r,depth,decided,lo,hi",
        [format!("{},{},{},{},{},{},{}", b.index, b.k, b.r, b.depth, b.decided, fmt_ratio(b.interval.lo()), fmt_ratio(b.interval.hi()))],
    );
    let result = json!({ "point": x.describe(), "bound": to_value(&b)?, "norm": to_value(&nb)? });
    Ok(Parts::new(result, table, csv))
}

fn run_scan(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let x = parse_point(need(&c.x, "x")?, &seq)?;
    let eps = parse_ratio(need(&c.eps, "eps")?)?;
    let horizons = c.horizon_list()?;
    let scan = statistical_scan(&x, &eps, &horizons, c.depth.unwrap_or(0), c.cap())?;
    let (table, _) = density_rows(&scan.estimates);
    let mut result = json!({ "scan": to_value(&scan)? });
    if horizons.len() >= 3 {
        result["trend"] = to_value(&convergence_verdict(&scan)?)?;
    }
    result["membership"] = to_value(&finite_support_member(&x)?)?;
    Ok(Parts::new(result, table, scan.undecided_csv()))
}

fn verdict_parts(v: &ClassVerdict) -> Result<Parts> {
    let table = format!("{} {}: {}\n", v.property, v.spec, serde_json::to_string(&v.verdict).unwrap_or_default());
    let csv = lines("n,value", v.evidence.iter().map(|r| format!("{},{}", r.n, r.value)));
    Ok(Parts::new(to_value(v)?, table, csv))
}

fn run_classify(c: &ExperimentConfig) -> Result<Parts> {
    let spec = parse_ratio_spec(need(&c.spec, "spec")?)?;
    let horizon = *need(&c.horizon, "horizon")?;
    let property = need(&c.property, "property")?.as_str();
    let v = match property {
        "bbounded" => {
            let seq = ArithSeq::new(spec.clone());
            let set = parse_set(c.set.as_deref().unwrap_or("all"), &seq)?;
            check_b_bounded(&spec, &set, *need(&c.bound, "bound")?, horizon)?
        }
        "snd" => check_strongly_non_dli(&spec, &parse_ratio(c.alpha.as_deref().unwrap_or("1"))?, horizon)?,
        "wdli" => check_weakly_dli_condition(&spec, horizon, &WeakDliThresholds::default())?,
        _ => return Err(Error::Parse(format!("unknown property '{property}' (bbounded, snd, wdli)"))),
    };
    verdict_parts(&v)
}

fn parse_zeta(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("ζ must be a 0/1 string, got '{s}'"))),
        })
        .collect()
}

fn parse_case(s: &str) -> Result<Case> {
    match s {
        "small" | "small-digits" => Ok(Case::SmallDigits),
        "large" | "large-digits" => Ok(Case::LargeDigits),
        _ => Err(Error::Parse(format!("unknown case '{s}' (small, large)"))),
    }
}

fn run_witness(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    match need(&c.kind, "kind")?.as_str() {
        "continuum" => {
            let w = weakly_dli_witness_set(seq.spec(), c.jmax.unwrap_or(8), DEFAULT_SCAN_LIMIT)?;
            let zeta = parse_zeta(c.zeta.as_deref().unwrap_or("000"))?;
            let x = continuum_family_point(&w.members, &zeta, &seq)?;
            let mut result = json!({
                "construction": "continuum",
                "indices": to_value(&w)?,
                "point": x.describe(),
                "membership": to_value(&finite_support_member(&x)?)?,
            });
            let mut table = format!("{}\n", x.describe());
            let mut csv = String::from("N,lo,hi,undecided\n");
            if let (Some(eps), Some(hs)) = (&c.eps, &c.horizons) {
                let scan = statistical_scan(&x, &parse_ratio(eps)?, hs, c.depth.unwrap_or(0), c.cap())?;
                (table, csv) = density_rows(&scan.estimates);
                result["scan"] = to_value(&scan)?;
            }
            Ok(Parts::new(result, table, csv))
        }
        "nonmember" => {
            let x = parse_point(need(&c.x, "x")?, &seq)?;
            let case = parse_case(c.case.as_deref().unwrap_or("small"))?;
            let rep = nonmember_run(
                &x,
                case,
                c.m0.unwrap_or(10),
                c.n0.unwrap_or(24),
                c.depth.unwrap_or(0),
                c.cap(),
                *need(&c.horizon, "horizon")?,
            )?;
            let table = format!(
                "{} rows, {} certified ({}), {} violations, {} undecided\n",
                rep.rows_checked,
                rep.certified,
                fmt_ratio(&rep.certified_fraction),
                rep.violations.len(),
                rep.undecided.len()
            );
            let mut parts = Parts::new(to_value(&rep)?, table, rep.table_csv());
            if let Some(v) = rep.violations.first() {
                parts.failure = Some(format!("row {} has enclosure {} outside {}", v.index, v.enclosure, rep.band));
            }
            Ok(parts)
        }
        "arbault" => {
            let u: Vec<BigUint> = match c.u.as_deref().unwrap_or("consecutive-sum") {
                "consecutive-sum" => consecutive_sum_sequence(&seq, c.count.unwrap_or(120)),
                list => list
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad integer '{s}' in u"))))
                    .collect::<Result<_>>()?,
            };
            let rep = arbault_witness(&seq, &u, c.rows.unwrap_or(20) as usize, c.skip_degenerate.unwrap_or(true))?;
            let csv = lines(
                "i,s,u,k,v,b,l,m,c,e,existence_ok,value,in_band",
                rep.rows.iter().map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.i, r.s, r.u, r.k, r.v, r.b, r.l, r.m, r.c, r.e, r.existence_ok, fmt_ratio(&r.value), r.in_band
                    )
                }),
            );
            let table = format!(
                "{} rows, {} existence failures, {} outside {}\n",
                rep.rows.len(),
                rep.existence_failures.len(),
                rep.out_of_band.len(),
                rep.band
            );
            let mut parts = Parts::new(to_value(&rep)?, table, csv);
            if !rep.existence_failures.is_empty() || !rep.out_of_band.is_empty() {
                parts.failure = Some(format!(
                    "existence failures at {:?}, outside the band at {:?}",
                    rep.existence_failures, rep.out_of_band
                ));
            }
            Ok(parts)
        }
        k => Err(Error::Parse(format!("unknown witness kind '{k}' (continuum, nonmember, arbault)"))),
    }
}

fn run_factor(c: &ExperimentConfig) -> Result<Parts> {
    let seq = c.arith()?;
    let mut rows = Vec::new();
    for s in need(&c.u, "u")?.split(',') {
        let u: BigUint = s.trim().parse().map_err(|_| Error::Parse(format!("bad integer '{s}'")))?;
        let (k, v) = factor_u(&u, &seq)?;
        rows.push((u, k, v, seq.ratio(k + 1)));
    }
    let table: String = rows.iter().map(|(u, k, v, _)| format!("{u} = a_{k} * {v}\n")).collect();
    let csv = lines("u,k,v,b_next", rows.iter().map(|(u, k, v, b)| format!("{u},{k},{v},{b}")));
    let result: Vec<BTreeMap<&str, String>> = rows
        .iter()
        .map(|(u, k, v, b)| {
            BTreeMap::from([("u", u.to_string()), ("k", k.to_string()), ("v", v.to_string()), ("b_next", b.to_string())])
        })
        .collect();
    Ok(Parts::new(to_value(&result)?, table, csv))
}

fn run_verify(c: &ExperimentConfig) -> Result<Parts> {
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let tags: Vec<SuiteTag> = match need(&c.tag, "tag")?.as_str() {
        "all" => SuiteTag::ALL.to_vec(),
        t => vec![t.parse()?],
    };
    let reports = tags.into_iter().map(|t| run_suite(t, seed)).collect::<Result<Vec<_>>>()?;
    let table: String = reports
        .iter()
        .map(|r| format!("{}: {} ({}, {} cases)\n", r.tag, if r.passed { "pass" } else { "FAIL" }, r.summary, r.cases))
        .collect();
    let csv = lines("tag,passed,cases", reports.iter().map(|r| format!("{},{},{}", r.tag, r.passed, r.cases)));
    let mut parts = Parts::new(to_value(&reports)?, table, csv);
    if let Some(r) = reports.iter().find(|r| !r.passed) {
        parts.failure = Some(format!("{}: {}", r.tag, r.counterexample.as_deref().unwrap_or("no detail")));
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(cmd: Command, spec: &str) -> ExperimentConfig {
        ExperimentConfig::new(cmd).with_spec(spec)
    }

    #[test]
    fn seq_and_lift_examples() {
        let mut c = cfg(Command::Seq, "linear:1");
        c.kind = Some("d".into());
        c.count = Some(7);
        assert_eq!(run(&c).unwrap().rendered(), "1,2,4,6,12,18,24\n");
        let mut c = cfg(Command::Lift, "linear:1");
        c.set = Some("fin:{3}".into());
        assert_eq!(run(&c).unwrap().rendered(), "[4,6]\n");
    }

    #[test]
    fn scan_example() {
        let mut c = cfg(Command::Scan, "linear:1");
        c.x = Some("rat:1/6".into());
        c.eps = Some("1/10".into());
        c.horizons = Some(vec![100]);
        c.format = Some(Format::Table);
        let out = run(&c).unwrap();
        assert!(out.rendered().contains("100,3/100,3/100,0"));
        assert!(out.json.contains("\"lo\": \"3/100\""));
    }

    #[test]
    fn toml_round_trip_replays() {
        let mut c = cfg(Command::Scan, "pow:2");
        c.x = Some("ones-on:all".into());
        c.eps = Some("1/8".into());
        c.horizons = Some(vec![100, 200, 400]);
        c.depth = Some(2);
        let text = c.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(run(&c).unwrap().json, run(&back).unwrap().json);
        assert!(ExperimentConfig::from_toml("command = \"scan\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn errors_are_classified() {
        assert_eq!(run(&cfg(Command::Seq, "nope:1")).unwrap_err().class(), crate::ErrorClass::Parse);
        assert_eq!(run(&cfg(Command::Seq, "const:1")).unwrap_err().class(), crate::ErrorClass::Precondition);
        let mut c = cfg(Command::Scan, "linear:1");
        c.x = Some("zero".into());
        c.eps = Some("3/4".into());
        c.horizons = Some(vec![10]);
        assert_eq!(run(&c).unwrap_err().class(), crate::ErrorClass::Precondition);
    }

    #[test]
    fn failures_are_reported_not_raised() {
        let mut c = cfg(Command::Witness, "linear:1");
        c.kind = Some("arbault".into());
        c.skip_degenerate = Some(false);
        let out = run(&c).unwrap();
        assert!(out.failure.is_some());
        c.skip_degenerate = None;
        assert!(run(&c).unwrap().failure.is_none());
    }
}
