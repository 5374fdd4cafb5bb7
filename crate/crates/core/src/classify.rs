//! Finite-horizon checks of the sequence classes (b-bounded sets, the
//! strongly-non-dli ratio criterion, the weakly-dli ratio condition) and the
//! two explicit constructions used with them.
//!
//! A verdict is only ever "holds up to the horizon", "fails at this index",
//! or "inconclusive"; the checked quantities travel with it.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::density::{CubeGapBlocks, NatSet};
use crate::error::{Error, Result};
use crate::exact::{big_ratio, fmt_ratio, ratio};
use crate::sequences::{ArithSeq, RatioSpec};

/// Longest evidence trace kept in a verdict; longer traces are strided.
pub const MAX_TRACE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    HoldsAtHorizon,
    FailsAtWitness { index: u64, detail: String },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub n: u64,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassVerdict {
    pub property: String,
    pub spec: String,
    pub horizon: u64,
    pub parameters: BTreeMap<String, String>,
    pub verdict: Verdict,
    /// Every `stride`-th checked row plus the last one.
    pub trace_stride: u64,
    pub evidence: Vec<TraceRow>,
    #[serde(serialize_with = "crate::exact::ser_ratio_opt")]
    pub implied_density_bound: Option<BigRational>,
    pub notes: Vec<String>,
}

impl ClassVerdict {
    fn new(property: &str, spec: &RatioSpec, horizon: u64) -> Self {
        Self {
            property: property.into(),
            spec: spec.to_string(),
            horizon,
            parameters: BTreeMap::new(),
            verdict: Verdict::HoldsAtHorizon,
            trace_stride: 1,
            evidence: Vec::new(),
            implied_density_bound: None,
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsAtHorizon
    }

    pub fn failure_index(&self) -> Option<u64> {
        match self.verdict {
            Verdict::FailsAtWitness { index, .. } => Some(index),
            _ => None,
        }
    }
}

/// Collects `(n, value)` with a stride chosen from the expected row count.
struct Trace {
    stride: u64,
    rows: Vec<TraceRow>,
    pending: Option<TraceRow>,
    seen: u64,
}

impl Trace {
    fn new(expected: u64) -> Self {
        let stride = expected.div_ceil(MAX_TRACE as u64).max(1);
        Self { stride, rows: Vec::new(), pending: None, seen: 0 }
    }

    fn push(&mut self, n: u64, value: impl FnOnce() -> String) {
        self.seen += 1;
        if (self.seen - 1).is_multiple_of(self.stride) {
            self.rows.push(TraceRow { n, value: value() });
            self.pending = None;
        } else {
            self.pending = Some(TraceRow { n, value: value() });
        }
    }

    fn finish(mut self, v: &mut ClassVerdict) {
        self.rows.extend(self.pending.take());
        v.trace_stride = self.stride;
        v.evidence = self.rows;
    }
}

/// Holds iff `b_n <= bound` for every `n ∈ set ∩ [1, horizon]`.
pub fn check_b_bounded(spec: &RatioSpec, set: &NatSet, bound: u64, horizon: u64) -> Result<ClassVerdict> {
    if bound < 2 {
        return Err(Error::Precondition(format!("bound M = {bound} must be at least 2")));
    }
    let seq = ArithSeq::new(spec.clone());
    let members = set.members_upto(horizon)?;
    let mut v = ClassVerdict::new("b-bounded", spec, horizon);
    v.parameters.insert("bound".into(), bound.to_string());
    v.parameters.insert("set".into(), set.to_string());
    let limit = BigUint::from(bound);
    let mut trace = Trace::new(members.len() as u64);
    for n in members {
        let b = seq.ratio(n);
        trace.push(n, || b.to_string());
        if b > limit {
            v.verdict = Verdict::FailsAtWitness { index: n, detail: format!("b_{n} = {b} > {bound}") };
            break;
        }
    }
    trace.finish(&mut v);
    Ok(v)
}

/// Checks `b_{n+1} >= α (b_1 + ... + b_n)` for `1 <= n < horizon`; when it
/// holds the lifted sets have upper density at least `α / (α + 1)`.
pub fn check_strongly_non_dli(spec: &RatioSpec, alpha: &BigRational, horizon: u64) -> Result<ClassVerdict> {
    if *alpha <= BigRational::zero() {
        return Err(Error::Precondition(format!("α = {} must be positive", fmt_ratio(alpha))));
    }
    let seq = ArithSeq::new(spec.clone());
    let p = alpha.numer().magnitude().clone();
    let q = alpha.denom().magnitude().clone();
    let mut v = ClassVerdict::new("strongly-non-dli", spec, horizon);
    v.parameters.insert("alpha".into(), fmt_ratio(alpha));
    let mut trace = Trace::new(horizon.saturating_sub(1));
    let mut sum = BigUint::zero();
    for n in 1..horizon {
        sum += seq.ratio(n);
        let next = seq.ratio(n + 1);
        trace.push(n, || fmt_ratio(&big_ratio(&next, &sum)));
        if &q * &next < &p * &sum {
            v.verdict = Verdict::FailsAtWitness {
                index: n,
                detail: format!("b_{} = {next} < {} * {sum}", n + 1, fmt_ratio(alpha)),
            };
            break;
        }
    }
    trace.finish(&mut v);
    if v.holds() {
        v.implied_density_bound = Some(alpha / (alpha + BigRational::one()));
    }
    Ok(v)
}

/// Thresholds for [`check_weakly_dli_condition`].
#[derive(Debug, Clone)]
pub struct WeakDliThresholds {
    /// `r_H` must be below this for a "holds" verdict.
    pub threshold: BigRational,
    /// `r_n` at or above this across the last decade gives "fails".
    pub fail_floor: BigRational,
}

impl Default for WeakDliThresholds {
    fn default() -> Self {
        Self { threshold: ratio(1, 100), fail_floor: ratio(1, 10) }
    }
}

/// Trace of `r_n = b_n / sum_{i<=n} (b_i - 1)`. Holds when `r_H` is below
/// the threshold and `r` is non-increasing over `[ceil(H/10), H]`; fails
/// when `r` stays at or above the floor over that decade.
pub fn check_weakly_dli_condition(
    spec: &RatioSpec,
    horizon: u64,
    limits: &WeakDliThresholds,
) -> Result<ClassVerdict> {
    if horizon < 10 {
        return Err(Error::Precondition("weakly-dli check needs a horizon of at least 10".into()));
    }
    let seq = ArithSeq::new(spec.clone());
    let mut v = ClassVerdict::new("weakly-dli-condition", spec, horizon);
    v.parameters.insert("threshold".into(), fmt_ratio(&limits.threshold));
    v.parameters.insert("fail_floor".into(), fmt_ratio(&limits.fail_floor));
    let decade = horizon.div_ceil(10);
    let (tn, td) = (limits.threshold.numer().magnitude(), limits.threshold.denom().magnitude());
    let (fnum, fden) = (limits.fail_floor.numer().magnitude(), limits.fail_floor.denom().magnitude());

    let mut trace = Trace::new(horizon);
    let mut sum = BigUint::zero();
    let mut prev: Option<(BigUint, BigUint)> = None;
    let mut monotone = true;
    let mut above_floor = true;
    let mut last = (BigUint::zero(), BigUint::one());
    for n in 1..=horizon {
        let b = seq.ratio(n);
        sum += &b - 1u32;
        trace.push(n, || fmt_ratio(&big_ratio(&b, &sum)));
        if n >= decade {
            if let Some((pb, ps)) = &prev {
                // b / sum > pb / ps
                if &b * ps > pb * &sum {
                    monotone = false;
                }
            }
            if &b * fden < fnum * &sum {
                above_floor = false;
            }
            prev = Some((b.clone(), sum.clone()));
        }
        last = (b, sum.clone());
    }
    trace.finish(&mut v);
    let r_h = big_ratio(&last.0, &last.1);
    let below = &last.0 * td < tn * &last.1;
    v.verdict = if below && monotone {
        Verdict::HoldsAtHorizon
    } else if above_floor {
        Verdict::FailsAtWitness {
            index: horizon,
            detail: format!(
                "r_n >= {} on [{decade}, {horizon}], r_H = {}",
                fmt_ratio(&limits.fail_floor),
                fmt_ratio(&r_h)
            ),
        }
    } else {
        Verdict::Inconclusive {
            reason: format!("r_H = {}, non-increasing on last decade: {monotone}", fmt_ratio(&r_h)),
        }
    };
    Ok(v)
}

/// The block construction `K = U_{j<=jmax} [g_j, h_j]` with
/// `h_j - g_j = j^3`, `g_{j+1} - h_j = j`, enumerated as
/// `1 = n_0 < n_1 < ...` and turned into ratios `b_{k+1} = n_{k+1} - n_k + 1`,
/// followed by the tail `b = 2`.
pub fn build_dli_counterexample(jmax: u64) -> Result<RatioSpec> {
    if jmax < 2 {
        return Err(Error::Precondition("the block construction needs jmax >= 2".into()));
    }
    let last_end = CubeGapBlocks::block_end(jmax);
    let elems: Vec<u64> = CubeGapBlocks::blocks_upto(last_end)
        .into_iter()
        .take(jmax as usize)
        .flat_map(|(g, h)| g..=h)
        .collect();
    let list = elems.windows(2).map(|w| BigUint::from(w[1] - w[0] + 1)).collect();
    RatioSpec::explicit(list, RatioSpec::constant(2)?)
}

/// The index recursion behind the weakly-dli witness and its set
/// `A = {u_j + 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessIndices {
    pub spec: String,
    pub u: Vec<u64>,
    pub members: Vec<u64>,
    /// Places where `b_{u_i + 1 - t}` had a non-positive index.
    pub flagged: Vec<String>,
}

impl WitnessIndices {
    pub fn set(&self) -> NatSet {
        NatSet::finite(self.members.iter().copied()).expect("members are positive")
    }
}

/// Default search bound for each step of the `u_j` recursion.
pub const DEFAULT_SCAN_LIMIT: u64 = 1 << 20;

/// `u_1 = 1`, `u_{j+1} = min{ r > u_j + j + 1 : n_r > j sum_{i<=j} sum_{t<=i} (b_{u_i+1-t} - 1) }`.
pub fn weakly_dli_witness_set(spec: &RatioSpec, jmax: u64, scan_limit: u64) -> Result<WitnessIndices> {
    if jmax < 1 {
        return Err(Error::Precondition("jmax must be at least 1".into()));
    }
    let seq = ArithSeq::new(spec.clone());
    let mut u = vec![1u64];
    let mut flagged = Vec::new();
    // running sum_{i<=j} sum_{t<=i} (b_{u_i+1-t} - 1)
    let mut inner = BigUint::zero();
    for j in 1..jmax {
        let ui = u[(j - 1) as usize];
        for t in 0..=j {
            if ui + 1 > t {
                inner += seq.ratio(ui + 1 - t) - 1u32;
            } else {
                flagged.push(format!("b_{{u_{j}+1-{t}}} has index <= 0; counted as 0"));
            }
        }
        let target = &inner * j;
        let mut r = ui + j + 2;
        loop {
            if r > scan_limit {
                return Err(Error::ScanLimit(format!("u_{} not found below {scan_limit}", j + 1)));
            }
            if BigUint::from(seq.boundary_u64(r)?) > target {
                break;
            }
            r += 1;
        }
        u.push(r);
    }
    let members = u.iter().map(|x| x + 1).collect();
    Ok(WitnessIndices { spec: spec.to_string(), u, members, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{lift, prefix_density, translate, AllNaturals, Residue};
    use crate::sequences::DerivedSeq;

    fn derived(spec: &RatioSpec) -> DerivedSeq {
        ArithSeq::new(spec.clone()).derived()
    }

    #[test]
    fn b_bounded_examples() {
        let all = NatSet::rule(AllNaturals);
        let c2 = RatioSpec::constant(2).unwrap();
        assert!(check_b_bounded(&c2, &all, 2, 10_000).unwrap().holds());
        let p2 = RatioSpec::power(2).unwrap();
        assert_eq!(check_b_bounded(&p2, &all, 100, 10_000).unwrap().failure_index(), Some(7));
        let evens = NatSet::rule(Residue { modulus: 2, residue: 0 });
        let l1 = RatioSpec::linear(1).unwrap();
        assert_eq!(check_b_bounded(&l1, &evens, 5, 100).unwrap().failure_index(), Some(6));
        assert!(check_b_bounded(&l1, &evens, 1, 100).is_err());
    }

    #[test]
    fn strongly_non_dli_examples() {
        let p2 = RatioSpec::power(2).unwrap();
        let v = check_strongly_non_dli(&p2, &ratio(1, 1), 30).unwrap();
        assert!(v.holds());
        assert_eq!(v.implied_density_bound, Some(ratio(1, 2)));
        let c2 = RatioSpec::constant(2).unwrap();
        assert_eq!(check_strongly_non_dli(&c2, &ratio(1, 1), 10).unwrap().failure_index(), Some(2));
        assert_eq!(check_strongly_non_dli(&p2, &ratio(2, 1), 30).unwrap().failure_index(), Some(2));
        assert!(check_strongly_non_dli(&p2, &ratio(0, 1), 30).is_err());
    }

    #[test]
    fn weakly_dli_examples() {
        let lim = WeakDliThresholds::default();
        let l1 = RatioSpec::linear(1).unwrap();
        let v = check_weakly_dli_condition(&l1, 10_000, &lim).unwrap();
        assert!(v.holds());
        // r_n = 2/n
        assert_eq!(v.evidence[0], TraceRow { n: 1, value: "2/1".into() });
        assert_eq!(v.evidence.last().unwrap(), &TraceRow { n: 10_000, value: "1/5000".into() });
        let p2 = RatioSpec::power(2).unwrap();
        let v = check_weakly_dli_condition(&p2, 1000, &lim).unwrap();
        assert_eq!(v.failure_index(), Some(1000));
        let c2 = RatioSpec::constant(2).unwrap();
        assert!(check_weakly_dli_condition(&c2, 1000, &lim).unwrap().holds());
        assert!(check_weakly_dli_condition(&c2, 9, &lim).is_err());
        assert!(v.evidence.len() <= MAX_TRACE + 1);
    }

    #[test]
    fn counterexample_ratios() {
        let two = BigUint::from(2u32);
        let s2 = build_dli_counterexample(2).unwrap();
        let crate::sequences::RatioKind::Explicit { list, .. } = s2.kind() else { panic!() };
        assert_eq!(list.len(), 1 + 1 + 8 + 1 - 1);
        assert!(list.iter().all(|b| *b == two));
        let s3 = build_dli_counterexample(3).unwrap();
        assert_eq!(s3.term(11), BigUint::from(3u32));
        let s6 = build_dli_counterexample(6).unwrap();
        let blocks = RatioSpec::blocks();
        let crate::sequences::RatioKind::Explicit { list, .. } = s6.kind() else { panic!() };
        for n in 1..=list.len() as u64 {
            assert!(s6.term(n) >= two);
            assert_eq!(s6.term(n), blocks.term(n), "n={n}");
        }
        assert!(build_dli_counterexample(1).is_err());
    }

    #[test]
    fn witness_indices() {
        let l1 = RatioSpec::linear(1).unwrap();
        let w = weakly_dli_witness_set(&l1, 2, DEFAULT_SCAN_LIMIT).unwrap();
        assert_eq!(w.u, vec![1, 4]);
        assert_eq!(w.members, vec![2, 5]);
        let w = weakly_dli_witness_set(&RatioSpec::power(3).unwrap(), 1, DEFAULT_SCAN_LIMIT).unwrap();
        assert_eq!(w.members, vec![2]);
        let w = weakly_dli_witness_set(&l1, 5, DEFAULT_SCAN_LIMIT).unwrap();
        for j in 1..w.u.len() {
            assert!(w.u[j] > w.u[j - 1] + j as u64 + 1);
        }
        assert!(w.flagged.is_empty());
        assert!(matches!(weakly_dli_witness_set(&l1, 8, 20), Err(Error::ScanLimit(_))));
    }

    #[test]
    fn witness_indices_match_direct_recursion() {
        // Recomputes the recursion from b_n = n + 1 in closed form:
        // n_r = 1 + r(r+1)/2.
        let mut u = vec![1u64];
        for j in 1..8u64 {
            let mut s = 0u64;
            for i in 1..=j {
                for t in 0..=i {
                    s += u[(i - 1) as usize] + 1 - t;
                }
            }
            let mut r = u[(j - 1) as usize] + j + 2;
            while r * (r + 1) / 2 < j * s {
                r += 1;
            }
            u.push(r);
        }
        let w = weakly_dli_witness_set(&RatioSpec::linear(1).unwrap(), 8, DEFAULT_SCAN_LIMIT).unwrap();
        assert_eq!(w.u, u);
    }

    #[test]
    fn snd_lift_density_floor() {
        let p2 = RatioSpec::power(2).unwrap();
        let d = derived(&p2);
        for a in [vec![2u64], vec![3, 9], vec![4, 5, 15], vec![2, 7, 11, 12]] {
            let max = *a.iter().max().unwrap();
            let l = lift(&NatSet::finite(a).unwrap(), &d).unwrap();
            let n = d.boundary(max).unwrap() - 1;
            let est = prefix_density(&l, n).unwrap();
            assert!(est.lo >= ratio(45, 100));
        }
    }

    #[test]
    fn translated_witness_lifts_thin_out() {
        let l1 = RatioSpec::linear(1).unwrap();
        let d = derived(&l1);
        let mut prev = BigRational::one();
        for jmax in [5u64, 6, 7, 8] {
            let w = weakly_dli_witness_set(&l1, jmax, DEFAULT_SCAN_LIMIT).unwrap();
            let n = d.boundary(*w.u.last().unwrap()).unwrap();
            let mut worst = BigRational::zero();
            for m in 1..=3 {
                let l = lift(&translate(&w.set(), m), &d).unwrap();
                let est = prefix_density(&l, n).unwrap();
                if est.hi > worst {
                    worst = est.hi;
                }
            }
            assert!(worst < prev, "jmax={jmax}");
            assert!(worst <= ratio(3, jmax - 2));
            prev = worst;
        }
    }
}
