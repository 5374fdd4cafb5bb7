//! Seeded property suites behind `verify <tag>`. Each suite stops at the
//! first counterexample and reports it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{digits_from_rational, frac_bound, tail_upper_bound, CirclePoint, DigitRule, DEFAULT_DEPTH_CAP};
use crate::classify::{check_strongly_non_dli, weakly_dli_witness_set, DEFAULT_SCAN_LIMIT};
use crate::density::{lift, set_algebra, NatSet, SetOp};
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, frac, ratio};
use crate::membership::{coincidence_battery, statistical_scan};
use crate::sequences::{ArithSeq, RatioSpec};
use crate::witness::{arbault_witness, consecutive_sum_sequence, continuum_family_point};

pub const DEFAULT_SEED: u64 = 0x5eed_c1c1e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SuiteTag {
    LiftAlgebra,
    TailBound,
    Recursion,
    SndDensity,
    WdliShrink,
    Coincidence,
    Arbault,
}

impl SuiteTag {
    pub const ALL: [SuiteTag; 7] = [
        SuiteTag::LiftAlgebra,
        SuiteTag::TailBound,
        SuiteTag::Recursion,
        SuiteTag::SndDensity,
        SuiteTag::WdliShrink,
        SuiteTag::Coincidence,
        SuiteTag::Arbault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteTag::LiftAlgebra => "lift-algebra",
            SuiteTag::TailBound => "tail-bound",
            SuiteTag::Recursion => "recursion",
            SuiteTag::SndDensity => "snd-density",
            SuiteTag::WdliShrink => "wdli-shrink",
            SuiteTag::Coincidence => "coincidence",
            SuiteTag::Arbault => "arbault",
        }
    }
}

impl fmt::Display for SuiteTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SuiteTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub tag: String,
    pub seed: u64,
    pub passed: bool,
    pub cases: u64,
    pub summary: String,
    pub measurements: BTreeMap<String, String>,
    pub counterexample: Option<String>,
}

struct Suite {
    report: SuiteReport,
}

impl Suite {
    fn new(tag: SuiteTag, seed: u64) -> Self {
        Self {
            report: SuiteReport {
                tag: tag.name().into(),
                seed,
                passed: true,
                cases: 0,
                summary: String::new(),
                measurements: BTreeMap::new(),
                counterexample: None,
            },
        }
    }

    /// Records a case; returns false once a counterexample is stored.
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) -> bool {
        self.report.cases += 1;
        if !ok && self.report.passed {
            self.report.passed = false;
            self.report.counterexample = Some(detail());
        }
        self.report.passed
    }

    fn measure(&mut self, key: &str, value: impl ToString) {
        self.report.measurements.insert(key.into(), value.to_string());
    }

    fn finish(mut self, summary: String) -> SuiteReport {
        self.report.summary = summary;
        self.report
    }
}

pub fn run_suite(tag: SuiteTag, seed: u64) -> Result<SuiteReport> {
    match tag {
        SuiteTag::LiftAlgebra => lift_algebra(seed),
        SuiteTag::TailBound => tail_bound(seed),
        SuiteTag::Recursion => recursion(seed),
        SuiteTag::SndDensity => snd_density(seed),
        SuiteTag::WdliShrink => wdli_shrink(seed),
        SuiteTag::Coincidence => coincidence(seed),
        SuiteTag::Arbault => arbault(seed),
    }
}

fn specs() -> Vec<ArithSeq> {
    [RatioSpec::linear(1), RatioSpec::power(2), RatioSpec::constant(3)]
        .into_iter()
        .map(|s| ArithSeq::new(s.expect("valid spec")))
        .collect()
}

fn random_subset(rng: &mut ChaCha8Rng, max: u64) -> Vec<u64> {
    let p: f64 = rng.gen_range(0.05..0.6);
    (1..=max).filter(|_| rng.gen_bool(p)).collect()
}

/// `L` commutes with union, intersection and difference and is injective,
/// on random finite subsets of `[1, 50]`.
pub fn lift_algebra(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite::new(SuiteTag::LiftAlgebra, seed);
    let pairs = 200;
    let seqs = specs();
    for seq in &seqs {
        let d = seq.derived();
        for _ in 0..pairs {
            let (a, b) = (random_subset(&mut rng, 50), random_subset(&mut rng, 50));
            let (sa, sb) = (NatSet::finite(a.clone())?, NatSet::finite(b.clone())?);
            let (la, lb) = (lift(&sa, &d)?, lift(&sb, &d)?);
            for op in [SetOp::Union, SetOp::Intersect, SetOp::Difference] {
                let left = lift(&set_algebra(op, &sa, &sb)?, &d)?;
                let right = set_algebra(op, &la, &lb)?;
                let ok = left.as_intervals() == right.as_intervals();
                if !suite.check(ok, || format!("{}: {op:?} of A={a:?}, B={b:?}: {left} vs {right}", seq.spec())) {
                    return Ok(suite.finish("failed".into()));
                }
            }
            let ok = (a == b) == (la.as_intervals() == lb.as_intervals());
            if !suite.check(ok, || format!("{}: injectivity fails for A={a:?}, B={b:?}", seq.spec())) {
                return Ok(suite.finish("failed".into()));
            }
        }
        for k in 1..=50u64 {
            let single = lift(&NatSet::finite([k])?, &d)?;
            let want = seq.ratio(k) - 1u32;
            let got = BigUint::from(single.count_upto(d.boundary(k)?)?);
            if !suite.check(got == want, || format!("{}: |L({{{k}}})| = {got}, expected {want}", seq.spec())) {
                return Ok(suite.finish("failed".into()));
            }
        }
    }
    let n = pairs * seqs.len();
    suite.measure("pairs", n);
    Ok(suite.finish(format!("{n}/{n} identities")))
}

/// The tail bound never exceeds `1/a_{j-1}` and always dominates the exact
/// tail `{a_{j-1} x} / a_{j-1}` of a random rational.
pub fn tail_bound(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite::new(SuiteTag::TailBound, seed);
    let mut worst = BigRational::zero();
    for spec in [RatioSpec::linear(1)?, RatioSpec::power(2)?] {
        let seq = ArithSeq::new(spec);
        for _ in 0..100 {
            let q = rng.gen_range(2..=1_000_000u64);
            let p = rng.gen_range(0..q);
            let x = ratio(p, q);
            let point = digits_from_rational(&x, &seq, 64)?;
            let t = rng.gen_range(0..=4u64);
            for j in 1..=30u64 {
                let a = BigRational::from_integer(BigInt::from(seq.term(j - 1)));
                let bound = tail_upper_bound(&point, j, t)?;
                let exact_tail = frac(&(&x * &a)) / &a;
                let scaled = &bound * &a;
                let ok = scaled <= BigRational::one() && exact_tail <= bound;
                if !suite.check(ok, || {
                    format!("{}: x={p}/{q}, j={j}, t={t}: bound {} vs 1/a = {}", seq.spec(), fmt_ratio(&bound), fmt_ratio(&a.recip()))
                }) {
                    return Ok(suite.finish("failed".into()));
                }
                if scaled > worst {
                    worst = scaled;
                }
            }
        }
    }
    suite.measure("max_width_times_a", fmt_ratio(&worst));
    Ok(suite.finish(format!("max ratio (bound · a_{{j-1}}) = {} <= 1", fmt_ratio(&worst))))
}

/// Exact `{a_{n-1} x}` of random finite-support points lies in
/// `frac_bound(x, n, t)` and the width is exactly `1/(b_n ... b_{n+t})`.
pub fn recursion(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite::new(SuiteTag::Recursion, seed);
    for seq in specs() {
        for _ in 0..20 {
            let len = rng.gen_range(1..=12u64);
            let digits: Vec<BigUint> = (1..=len)
                .map(|n| {
                    let b = seq.ratio_u64(n).expect("small ratio");
                    BigUint::from(rng.gen_range(0..b))
                })
                .collect();
            // independent evaluation of x from its digits
            let x: BigRational = digits
                .iter()
                .enumerate()
                .map(|(i, c)| BigRational::new(BigInt::from(c.clone()), BigInt::from(seq.term(i as u64 + 1))))
                .sum();
            let point = CirclePoint::new(&seq, DigitRule::Finite(digits.clone()))?;
            for n in 1..=len + 2 {
                let a = BigRational::from_integer(BigInt::from(seq.term(n - 1)));
                let exact = frac(&(&x * a));
                for t in 0..=8u64 {
                    let j = frac_bound(&point, n, t)?;
                    let prod: BigUint = (n..=n + t).map(|m| seq.ratio(m)).product();
                    let width = BigRational::new(BigInt::one(), BigInt::from(prod));
                    let ok = j.contains(&exact) && j.width() == width;
                    if !suite.check(ok, || {
                        format!("{}: digits {digits:?}, n={n}, t={t}: {} does not hold {}", seq.spec(), j, fmt_ratio(&exact))
                    }) {
                        return Ok(suite.finish("failed".into()));
                    }
                }
            }
        }
    }
    let cases = suite.report.cases;
    Ok(suite.finish(format!("{cases} enclosures exact")))
}

/// `pow:2` with `α = 1` is strongly non-dli up to 30, and lifted random sets
/// have density at least `9/20` at the ends of their own blocks.
pub fn snd_density(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite::new(SuiteTag::SndDensity, seed);
    let spec = RatioSpec::power(2)?;
    let v = check_strongly_non_dli(&spec, &ratio(1, 1), 30)?;
    if !suite.check(v.holds(), || format!("check_strongly_non_dli: {:?}", v.verdict)) {
        return Ok(suite.finish("failed".into()));
    }
    let d = ArithSeq::new(spec).derived();
    let floor = ratio(9, 20);
    let mut worst: Option<BigRational> = None;
    for _ in 0..20 {
        let mut a = random_subset(&mut rng, 30);
        if a.is_empty() {
            a.push(rng.gen_range(1..=30));
        }
        let la = lift(&NatSet::finite(a.clone())?, &d)?;
        for &k in &a {
            let n = d.boundary(k)? - 1;
            let dens = la.prefix_density(n)?.lo;
            let ok = dens >= floor;
            if !suite.check(ok, || format!("A={a:?}: density {} at N={n}", fmt_ratio(&dens))) {
                return Ok(suite.finish("failed".into()));
            }
            if worst.as_ref().is_none_or(|w| dens < *w) {
                worst = Some(dens);
            }
        }
    }
    let worst = worst.expect("at least one horizon");
    suite.measure("min_density", fmt_ratio(&worst));
    Ok(suite.finish(format!("min lifted density {} >= 9/20", fmt_ratio(&worst))))
}

pub const WDLI_HORIZONS: [u64; 3] = [1_000, 10_000, 100_000];

/// Every point of the continuum family over the `linear:1` witness set
/// (`jmax = 8`, `|ζ| = 3`) has strictly decreasing upper density bounds for
/// `E_{1/10}` that end at or below `1/20`.
pub fn wdli_shrink(seed: u64) -> Result<SuiteReport> {
    let mut suite = Suite::new(SuiteTag::WdliShrink, seed);
    let spec = RatioSpec::linear(1)?;
    let seq = ArithSeq::new(spec.clone());
    let w = weakly_dli_witness_set(&spec, 8, DEFAULT_SCAN_LIMIT)?;
    let eps = ratio(1, 10);
    let cap = ratio(1, 20);
    for bits in 0..8u32 {
        let zeta: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
        let x = continuum_family_point(&w.members, &zeta, &seq)?;
        let scan = statistical_scan(&x, &eps, &WDLI_HORIZONS, 0, DEFAULT_DEPTH_CAP)?;
        let his: Vec<&BigRational> = scan.estimates.iter().map(|e| &e.hi).collect();
        let ok = his.windows(2).all(|p| p[1] < p[0]) && *his[2] <= cap;
        let label = x.describe();
        suite.measure(&label, his.iter().map(|h| fmt_ratio(h)).collect::<Vec<_>>().join(" > "));
        if !suite.check(ok, || format!("{label}: upper bounds {his:?}")) {
            return Ok(suite.finish("failed".into()));
        }
    }
    Ok(suite.finish("8/8 continuum points shrink below 1/20".into()))
}

/// The `pow:2` battery: dense infinite-support points keep positive lower
/// bounds, finite-support points drop to zero past their cutoff.
pub fn coincidence(seed: u64) -> Result<SuiteReport> {
    let mut suite = Suite::new(SuiteTag::Coincidence, seed);
    let seq = ArithSeq::new(RatioSpec::power(2)?);
    let rep = coincidence_battery(&seq, seed, 10, &ratio(1, 8), &[1_000, 3_000, 10_000], 2, DEFAULT_DEPTH_CAP)?;
    for e in &rep.entries {
        let ok = e.expected == e.observed && e.rows_past_cutoff.unwrap_or(0) == 0;
        suite.check(ok, || format!("{}: expected {:?}, observed {:?}, bounds {:?}", e.point, e.expected, e.observed, e.bounds));
    }
    let n = rep.entries.len();
    Ok(suite.finish(format!("{} points", n)))
}

/// The escaping point against `u_n = a_n + a_{n-1}` under `linear:1`.
pub fn arbault(seed: u64) -> Result<SuiteReport> {
    let mut suite = Suite::new(SuiteTag::Arbault, seed);
    let seq = ArithSeq::new(RatioSpec::linear(1)?);
    let u = consecutive_sum_sequence(&seq, 120);
    let rep = arbault_witness(&seq, &u, 20, true)?;
    suite.check(rep.rows.len() == 20, || format!("only {} rows selected", rep.rows.len()));
    suite.check(rep.existence_failures.is_empty(), || format!("existence failures at {:?}", rep.existence_failures));
    suite.check(rep.out_of_band.is_empty(), || format!("outside [1/4, 7/8] at {:?}", rep.out_of_band));
    suite.measure("skipped", rep.skipped.len());
    Ok(suite.finish(format!("{} rows in [1/4, 7/8]", rep.rows.len())))
}

/// Random sample of positive integers below `max` for factorization runs.
pub fn random_integers(seed: u64, count: usize, max: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(1..=max)).collect()
}
