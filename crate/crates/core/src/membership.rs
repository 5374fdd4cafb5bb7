//! Membership in `t_{(d_n)}(T)` for finite-support points, and finite-horizon
//! scans of `E_ε = {i <= N : ‖d_i x‖ >= ε}` for the statistical version.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{BlockEval, CirclePoint, DigitRule, RowClass, SupportForm};
use crate::density::{set_algebra, AllNaturals, DensityEstimate, NatSet, SetOp};
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, ratio};
use crate::sequences::ArithSeq;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Membership {
    /// `{d_i x} = 0` for every `i >= cutoff`.
    Member { cutoff: u64 },
    /// Infinite support; the conclusion rests on the external theorem that
    /// membership forces finite support.
    NonMemberByCitedTheorem,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipVerdict {
    pub point: String,
    pub spec: String,
    pub verdict: Membership,
    pub citation_dependent: bool,
    pub note: String,
}

/// Finite support inside `[1, m]` gives membership with cutoff `n_m`
/// (`a_k x` is an integer for `k >= m`).
pub fn finite_support_member(x: &CirclePoint) -> Result<MembershipVerdict> {
    let (verdict, note) = match x.support_form() {
        SupportForm::Finite { max } => (
            Membership::Member { cutoff: x.seq().derived().boundary(max)? },
            format!("supp(x) ⊆ [1, {max}]"),
        ),
        SupportForm::Cofinite | SupportForm::InfiniteNotCofinite => (
            Membership::NonMemberByCitedTheorem,
            "support is infinite; relies on the external finite-support characterization".into(),
        ),
        SupportForm::Unknown => (Membership::Inconclusive, "support beyond the known digits is undeclared".into()),
    };
    Ok(MembershipVerdict {
        point: x.describe(),
        spec: x.seq().spec().to_string(),
        citation_dependent: verdict == Membership::NonMemberByCitedTheorem,
        verdict,
        note,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub point: String,
    pub spec: String,
    pub attested: bool,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub eps: BigRational,
    pub depth: u64,
    pub depth_cap: u64,
    pub horizons: Vec<u64>,
    pub estimates: Vec<DensityEstimate>,
    /// Undecided indices up to the largest horizon.
    pub undecided: Vec<u64>,
}

impl ScanResult {
    /// `index` per line, the undecided rows.
    pub fn undecided_csv(&self) -> String {
        let mut out = String::from("index\n");
        for i in &self.undecided {
            out.push_str(&format!("{i}\n"));
        }
        out
    }
}

/// Classifies `‖d_i x‖` against `ε` for `i = 1..=n`, in index order.
pub fn classify_rows(x: &CirclePoint, eps: &BigRational, n: u64, t: u64, cap: u64) -> Result<Vec<RowClass>> {
    let e = eps.numer().magnitude().clone();
    let q = eps.denom().magnitude().clone();
    let blocks = x.seq().derived().blocks_upto(n)?;
    let mut out = Vec::with_capacity(n as usize);
    for block in blocks {
        let eval = BlockEval::new(x, block.k, t, cap);
        let rows: Result<Vec<RowClass>> =
            (1..=block.len).into_par_iter().map(|r| eval.classify_norm(r, &e, &q)).collect();
        out.extend(rows?);
    }
    Ok(out)
}

/// Exact density bounds of `E_ε` at each horizon.
pub fn statistical_scan(x: &CirclePoint, eps: &BigRational, horizons: &[u64], t: u64, cap: u64) -> Result<ScanResult> {
    if *eps <= BigRational::zero() || *eps > ratio(1, 2) {
        return Err(Error::Precondition(format!("ε = {} must lie in (0, 1/2]", fmt_ratio(eps))));
    }
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("horizons must be positive and strictly increasing".into()));
    }
    let nmax = *horizons.last().unwrap();
    let rows = classify_rows(x, eps, nmax, t, cap)?;
    let mut estimates = Vec::new();
    let (mut inn, mut und) = (0u64, 0u64);
    let mut pos = 0usize;
    for &n in horizons {
        while (pos as u64) < n {
            match rows[pos] {
                RowClass::AtLeast => inn += 1,
                RowClass::Undecided => und += 1,
                RowClass::Below => {}
            }
            pos += 1;
        }
        estimates.push(DensityEstimate::new(n, inn, n - inn - und, und));
    }
    let undecided = rows
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == RowClass::Undecided)
        .map(|(i, _)| i as u64 + 1)
        .collect();
    Ok(ScanResult {
        point: x.describe(),
        spec: x.seq().spec().to_string(),
        attested: x.is_attested(),
        eps: eps.clone(),
        depth: t,
        depth_cap: cap,
        horizons: horizons.to_vec(),
        estimates,
        undecided,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    EvidenceFor,
    EvidenceAgainst,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceVerdict {
    pub label: Trend,
    pub reason: String,
    /// `(N, lo, hi)` as exact fractions.
    pub bounds: Vec<(u64, String, String)>,
}

/// Reads the trend of a scan over at least three horizons:
/// more than half the rows undecided at the largest `N` gives inconclusive;
/// non-increasing upper bounds that at least halve (or reach 0) give
/// evidence for; lower bounds that stay positive and keep at least half
/// their first value give evidence against.
pub fn convergence_verdict(scan: &ScanResult) -> Result<ConvergenceVerdict> {
    let est = &scan.estimates;
    if est.len() < 3 {
        return Err(Error::Precondition("a trend needs at least three horizons".into()));
    }
    let bounds = est.iter().map(|e| (e.horizon, fmt_ratio(&e.lo), fmt_ratio(&e.hi))).collect();
    let last = est.last().unwrap();
    let first = &est[0];
    let two = BigRational::from_integer(2.into());
    if last.undecided_fraction() > ratio(1, 2) {
        return Ok(ConvergenceVerdict {
            label: Trend::Inconclusive,
            reason: "more than half of the rows are undecided".into(),
            bounds,
        });
    }
    let hi_down = est.windows(2).all(|w| w[1].hi <= w[0].hi)
        && (last.hi.is_zero() || last.hi <= &first.hi / &two);
    let lo_up = est.iter().all(|e| e.lo > BigRational::zero()) && last.lo >= &first.lo / &two;
    let (label, reason) = match (hi_down, lo_up) {
        (true, false) => (Trend::EvidenceFor, "upper bounds decrease and at least halve".to_string()),
        (false, true) => (Trend::EvidenceAgainst, "lower bounds stay above half their first value".to_string()),
        (true, true) => (Trend::Inconclusive, "upper and lower trends disagree".to_string()),
        (false, false) => (Trend::Inconclusive, "no trend in either bound".to_string()),
    };
    Ok(ConvergenceVerdict { label, reason, bounds })
}

/// One point of the coincidence battery and what the scan said about it.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryEntry {
    pub point: String,
    pub expected: Trend,
    pub observed: Trend,
    pub membership: Membership,
    /// For finite-support points: `|E_ε ∩ [cutoff, N]|`, which must be 0.
    pub rows_past_cutoff: Option<u64>,
    pub bounds: Vec<(u64, String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub spec: String,
    pub seed: u64,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub eps: BigRational,
    pub horizons: Vec<u64>,
    pub entries: Vec<BatteryEntry>,
    pub passed: bool,
}

/// Pseudo-random points with infinite support (periodic nonzero digits, or
/// ones on all of `N` minus a finite set) and with finite support.
pub fn battery_points(seq: &ArithSeq, seed: u64, count: usize) -> Result<(Vec<CirclePoint>, Vec<CirclePoint>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut infinite = Vec::new();
    for j in 0..count {
        if j % 2 == 0 {
            let len = rng.gen_range(1..=5u64);
            let pattern = (1..=len)
                .map(|n| {
                    let top = (seq.ratio(n) - 1u32).min(BigUint::from(7u32));
                    let top = num_traits::ToPrimitive::to_u64(&top).unwrap();
                    BigUint::from(rng.gen_range(1..=top))
                })
                .collect();
            infinite.push(CirclePoint::new(seq, DigitRule::Periodic(pattern))?);
        } else {
            let holes = NatSet::finite((0..rng.gen_range(1..=4)).map(|_| rng.gen_range(1..=12u64)))?;
            let set = set_algebra(SetOp::Difference, &NatSet::rule(AllNaturals), &holes)?;
            infinite.push(CirclePoint::new(seq, DigitRule::OnesOn(set))?);
        }
    }
    let mut finite = Vec::new();
    for _ in 0..count {
        let len = rng.gen_range(1..=6u64);
        let digits = (1..=len)
            .map(|n| {
                let b = num_traits::ToPrimitive::to_u64(&seq.ratio(n).min(BigUint::from(1u64 << 40))).unwrap();
                BigUint::from(rng.gen_range(0..b))
            })
            .collect();
        finite.push(CirclePoint::new(seq, DigitRule::Finite(digits))?);
    }
    Ok((infinite, finite))
}

/// Scans both families: infinite-support points must show evidence against,
/// finite-support points evidence for with no row of `E_ε` past the cutoff.
pub fn coincidence_battery(
    seq: &ArithSeq,
    seed: u64,
    count: usize,
    eps: &BigRational,
    horizons: &[u64],
    t: u64,
    cap: u64,
) -> Result<BatteryReport> {
    let (infinite, finite) = battery_points(seq, seed, count)?;
    let mut entries = Vec::new();
    for (x, expected) in infinite.iter().map(|x| (x, Trend::EvidenceAgainst)).chain(finite.iter().map(|x| (x, Trend::EvidenceFor))) {
        let scan = statistical_scan(x, eps, horizons, t, cap)?;
        let verdict = convergence_verdict(&scan)?;
        let membership = finite_support_member(x)?.verdict;
        let rows_past_cutoff = match membership {
            Membership::Member { cutoff } => {
                let nmax = *horizons.last().unwrap();
                let rows = classify_rows(x, eps, nmax, t, cap)?;
                Some(rows.iter().skip(cutoff.saturating_sub(1) as usize).filter(|c| **c != RowClass::Below).count() as u64)
            }
            _ => None,
        };
        entries.push(BatteryEntry {
            point: x.describe(),
            expected,
            observed: verdict.label,
            membership,
            rows_past_cutoff,
            bounds: verdict.bounds,
        });
    }
    let passed = entries.iter().all(|e| e.expected == e.observed && e.rows_past_cutoff.unwrap_or(0) == 0);
    Ok(BatteryReport { spec: seq.spec().to_string(), seed, eps: eps.clone(), horizons: horizons.to_vec(), entries, passed })
}

/// `1` when every estimate satisfies its arithmetic invariants.
pub fn estimates_consistent(scan: &ScanResult) -> bool {
    scan.estimates.iter().all(DensityEstimate::invariants_hold)
        && scan.estimates.iter().all(|e| e.lo <= BigRational::one())
}
