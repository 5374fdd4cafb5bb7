//! Explicit points and index families: the continuum family `x^ζ`, the
//! partition and bad-interval families behind the two non-membership
//! arguments, the factorization `u = a_k v`, and the escaping point built
//! against a given integer sequence `(u_n)`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{frac_of_multiple, norm_bound, BlockEval, BoundInterval, CirclePoint, DigitRule, SupportForm};
use crate::density::{lift, prefix_density, split_by_ratio_bound, NatSet};
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, ratio};
use crate::sequences::ArithSeq;

/// `x^ζ`: `c_n = 1` on `B^ζ = {A_{2k + ζ_k} : 1 <= k <= |ζ|}` where
/// `A_1 < A_2 < ...` lists `A = {u_j + 1}`, and `c_n = 0` elsewhere.
pub fn continuum_family_point(members: &[u64], zeta: &[bool], seq: &ArithSeq) -> Result<CirclePoint> {
    if members.len() < 2 * zeta.len() + 2 {
        return Err(Error::Precondition(format!(
            "a ζ prefix of length {} needs at least {} listed indices, got {}",
            zeta.len(),
            2 * zeta.len() + 2,
            members.len()
        )));
    }
    if members.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("the index list must be strictly increasing".into()));
    }
    let support: Vec<u64> = zeta
        .iter()
        .enumerate()
        .map(|(k, &s)| members[2 * (k + 1) + usize::from(s) - 1])
        .collect();
    let bits: String = zeta.iter().map(|&s| if s { '1' } else { '0' }).collect();
    Ok(CirclePoint::new(seq, DigitRule::OnesOn(NatSet::finite(support)?))?
        .with_source(format!("continuum:zeta={bits}")))
}

/// Which of the two non-membership arguments applies to the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `A = supp(x) \ supp_q(x)`.
    Cofinite,
    /// `A = supp(x) \ (supp(x) - 1)`.
    NonCofinite,
}

/// `A ∩ [1, horizon]` split by `c_n / b_n` into `A_1` (below `1/m_0`),
/// `A_2` (above `1 - 1/n_0`) and `A_3` (the rest).
#[derive(Debug, Clone)]
pub struct Partition {
    pub branch: Branch,
    pub m0: u64,
    pub n0: u64,
    pub horizon: u64,
    pub a: NatSet,
    pub a1: NatSet,
    pub a2: NatSet,
    pub a3: NatSet,
}

fn check_params(m0: u64, n0: u64) -> Result<()> {
    if m0 <= 9 || n0 <= 12 {
        return Err(Error::Precondition(format!("need m_0 > 9 and n_0 > 12, got m_0 = {m0}, n_0 = {n0}")));
    }
    Ok(())
}

pub fn nonmembership_partition(x: &CirclePoint, m0: u64, n0: u64, horizon: u64) -> Result<Partition> {
    check_params(m0, n0)?;
    let branch = match x.support_form() {
        SupportForm::Cofinite => Branch::Cofinite,
        SupportForm::InfiniteNotCofinite => Branch::NonCofinite,
        SupportForm::Finite { .. } => {
            return Err(Error::Precondition("the partition needs an infinite support; this one is finite".into()))
        }
        SupportForm::Unknown => {
            return Err(Error::Precondition("support form is not declared; cannot pick a branch".into()))
        }
    };
    let seq = x.seq();
    let (m0b, n0b) = (BigUint::from(m0), BigUint::from(n0));
    let (mut a, mut a1, mut a2, mut a3) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut next = x.digit(1)?;
    for n in 1..=horizon {
        let c = next;
        next = x.digit(n + 1)?;
        if c.is_zero() {
            continue;
        }
        let b = seq.ratio(n);
        let keep = match branch {
            Branch::Cofinite => &c + 1u32 != b,
            Branch::NonCofinite => next.is_zero(),
        };
        if !keep {
            continue;
        }
        a.push(n);
        if &c * &m0b < b {
            a1.push(n);
        } else if &b * (&n0b - 1u32) < &c * &n0b {
            a2.push(n);
        } else {
            a3.push(n);
        }
    }
    let fin = |v: Vec<u64>| NatSet::finite(v).map(|s| s.with_horizon(horizon));
    Ok(Partition { branch, m0, n0, horizon, a: fin(a)?, a1: fin(a1)?, a2: fin(a2)?, a3: fin(a3)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// Built on `A_1`; certifies `1/m_0 <= {d_i x} <= 9/m_0`.
    SmallDigits,
    /// Built on `A_2`; certifies `‖d_i x‖ >= min(3/(2 n_0), 1 - 12/n_0)`.
    LargeDigits,
}

/// `B' = U_k B_k ∩ [1, horizon]` (derived indices) for the chosen case.
pub fn bad_interval_family(x: &CirclePoint, part: &Partition, case: Case, horizon: u64) -> Result<NatSet> {
    let d = x.seq().derived();
    let ks = match case {
        Case::SmallDigits => &part.a1,
        Case::LargeDigits => &part.a2,
    };
    // every block meeting [1, horizon] must be covered by the partition
    let need = d.decompose(horizon.max(1))?.0 + 1;
    if need > part.horizon {
        return Err(Error::HorizonExceeded { requested: need, horizon: part.horizon });
    }
    let (m0, n0) = (BigUint::from(part.m0), BigUint::from(part.n0));
    let mut pieces = Vec::new();
    for k in ks.members_upto(need)? {
        let start = BigUint::from(d.boundary(k - 1)?);
        let b = x.seq().ratio(k);
        let c = x.digit(k)?;
        // [start + floor((m + p/s) b / w), start + floor((m + q/s) b / w) - 1], m = 0..=mmax
        let (w, s, p, q, mmax) = match case {
            Case::SmallDigits => (c.clone(), m0.clone(), 1u32, 4u32, &c / &m0),
            Case::LargeDigits => {
                let w = &b - &c;
                let mmax = &w / (&n0 * 2u32);
                (w, n0.clone(), 8, 12, mmax)
            }
        };
        let mut m = BigUint::zero();
        while m <= mmax {
            let lo = &start + (&m * &s + p) * &b / (&s * &w);
            let hi = &start + (&m * &s + q) * &b / (&s * &w);
            if let (Some(lo), Some(hi)) = (to_u64(&lo), to_u64(&(hi - 1u32))) {
                if lo <= horizon {
                    pieces.push((lo, hi.min(horizon)));
                }
            }
            m += 1u32;
        }
    }
    Ok(NatSet::intervals(pieces)?.with_horizon(horizon))
}

fn to_u64(v: &BigUint) -> Option<u64> {
    num_traits::ToPrimitive::to_u64(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowVerdict {
    Certified,
    Violation,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertRow {
    pub index: u64,
    pub k: u64,
    pub r: u64,
    pub depth: u64,
    pub enclosure: BoundInterval,
    pub verdict: RowVerdict,
}

/// Outcome of a certification run. `rows` is the full per-index table; the
/// serialized form keeps the counts, the violations and the undecided rows.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub construction: String,
    pub spec: String,
    pub point: String,
    pub attested: bool,
    pub parameters: BTreeMap<String, String>,
    pub band: BoundInterval,
    pub rows_checked: u64,
    pub certified: u64,
    pub violations: Vec<CertRow>,
    pub undecided: Vec<u64>,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub certified_fraction: BigRational,
    pub measurements: BTreeMap<String, String>,
    #[serde(skip)]
    pub rows: Vec<CertRow>,
}

impl WitnessReport {
    /// The per-index table as CSV.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("index,k,r,depth,lo,hi,verdict\n");
        for row in &self.rows {
            let v = match row.verdict {
                RowVerdict::Certified => "certified",
                RowVerdict::Violation => "violation",
                RowVerdict::Undecided => "undecided",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.index,
                row.k,
                row.r,
                row.depth,
                fmt_ratio(row.enclosure.lo()),
                fmt_ratio(row.enclosure.hi()),
                v
            ));
        }
        out
    }
}

/// Band a certified row must land in: `[1/m_0, 9/m_0]` for `{d_i x}` in the
/// small-digit case, `[min(3/(2 n_0), 1 - 12/n_0), 1/2]` for `‖d_i x‖` in the
/// large-digit case.
pub fn certification_band(case: Case, m0: u64, n0: u64) -> BoundInterval {
    match case {
        Case::SmallDigits => BoundInterval::new(ratio(1, m0), ratio(9, m0)).expect("m_0 > 9"),
        Case::LargeDigits => {
            let a = ratio(3, 2 * n0);
            let b = BigRational::one() - ratio(12, n0);
            BoundInterval::new(if a < b { a } else { b }, ratio(1, 2)).expect("n_0 > 12")
        }
    }
}

/// Certifies every `i ∈ B' ∩ [1, horizon]` with exact enclosures of
/// `{d_i x}`. A violation means the implementation disagrees with the
/// argument; an undecided row is excluded from the certified count.
#[allow(clippy::too_many_arguments)]
pub fn certify_nonmembership(
    x: &CirclePoint,
    bprime: &NatSet,
    case: Case,
    m0: u64,
    n0: u64,
    t: u64,
    cap: u64,
    horizon: u64,
) -> Result<WitnessReport> {
    check_params(m0, n0)?;
    let d = x.seq().derived();
    let band = certification_band(case, m0, n0);
    let indices = bprime.members_upto(horizon)?;
    let mut groups: Vec<(u64, Vec<u64>)> = Vec::new();
    for i in indices {
        let (k, r) = d.decompose(i)?;
        match groups.last_mut() {
            Some((kk, rs)) if *kk == k => rs.push(r),
            _ => groups.push((k, vec![r])),
        }
    }
    let per_block: Vec<Result<Vec<CertRow>>> = groups
        .par_iter()
        .map(|(k, rs)| {
            let eval = BlockEval::new(x, *k, t, cap);
            rs.iter()
                .map(|&r| {
                    let got = eval.frac(r)?;
                    let verdict = if !got.decided {
                        RowVerdict::Undecided
                    } else {
                        let checked = match case {
                            Case::SmallDigits => got.interval.clone(),
                            Case::LargeDigits => norm_bound(&got.interval),
                        };
                        if checked.subset_of(&band) {
                            RowVerdict::Certified
                        } else {
                            RowVerdict::Violation
                        }
                    };
                    Ok(CertRow { index: got.index, k: *k, r, depth: got.depth, enclosure: got.interval, verdict })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for block in per_block {
        rows.extend(block?);
    }
    let certified = rows.iter().filter(|r| r.verdict == RowVerdict::Certified).count() as u64;
    let violations: Vec<CertRow> = rows.iter().filter(|r| r.verdict == RowVerdict::Violation).cloned().collect();
    let undecided = rows.iter().filter(|r| r.verdict == RowVerdict::Undecided).map(|r| r.index).collect();
    let mut parameters = BTreeMap::new();
    parameters.insert("case".into(), format!("{case:?}"));
    parameters.insert("m0".into(), m0.to_string());
    parameters.insert("n0".into(), n0.to_string());
    parameters.insert("depth".into(), t.to_string());
    parameters.insert("depth_cap".into(), cap.to_string());
    parameters.insert("horizon".into(), horizon.to_string());
    Ok(WitnessReport {
        construction: "nonmember".into(),
        spec: x.seq().spec().to_string(),
        point: x.describe(),
        attested: x.is_attested(),
        parameters,
        band,
        rows_checked: rows.len() as u64,
        certified,
        violations,
        undecided,
        certified_fraction: ratio(certified, horizon.max(1)),
        measurements: BTreeMap::new(),
        rows,
    })
}

/// Partition, bad-interval family and certification in one call, plus the
/// lifted-set density the certified fraction is compared with.
pub fn nonmember_run(
    x: &CirclePoint,
    case: Case,
    m0: u64,
    n0: u64,
    t: u64,
    cap: u64,
    horizon: u64,
) -> Result<WitnessReport> {
    let d = x.seq().derived();
    let kmax = d.decompose(horizon)?.0 + 1;
    let part = nonmembership_partition(x, m0, n0, kmax)?;
    let bprime = bad_interval_family(x, &part, case, horizon)?;
    let mut rep = certify_nonmembership(x, &bprime, case, m0, n0, t, cap, horizon)?;
    let branch_set = match case {
        Case::SmallDigits => &part.a1,
        Case::LargeDigits => &part.a2,
    };
    let lifted = lift(branch_set, &d)?;
    let dens = prefix_density(&lifted, horizon)?;
    let scale = match case {
        Case::SmallDigits => m0,
        Case::LargeDigits => n0,
    };
    let predicted = &dens.lo / BigRational::from_integer((scale * scale).into());
    rep.parameters.insert("branch".into(), format!("{:?}", part.branch));
    rep.measurements.insert("lifted_branch_density".into(), fmt_ratio(&dens.lo));
    rep.measurements.insert("predicted_fraction_floor".into(), fmt_ratio(&predicted));
    rep.measurements.insert("bad_family_size".into(), bprime.count_upto(horizon)?.to_string());
    rep.measurements.insert("partition".into(), format!("A1={}, A2={}, A3={}", part.a1, part.a2, part.a3));
    Ok(rep)
}

/// Splits `A_3` into indices with `b_n <= bound` and the rest and reports the
/// densities of their lifts at `horizon` (a diagnostic only).
pub fn case_three_split(x: &CirclePoint, part: &Partition, bound: u64, horizon: u64) -> Result<BTreeMap<String, String>> {
    let d = x.seq().derived();
    let (small, large) = split_by_ratio_bound(&part.a3, &d, bound, part.horizon)?;
    let mut out = BTreeMap::new();
    out.insert("bound".into(), bound.to_string());
    out.insert("bounded_part".into(), small.to_string());
    out.insert("divergent_part".into(), large.to_string());
    out.insert("bounded_lift_density".into(), fmt_ratio(&prefix_density(&lift(&small, &d)?, horizon)?.lo));
    out.insert("divergent_lift_density".into(), fmt_ratio(&prefix_density(&lift(&large, &d)?, horizon)?.lo));
    Ok(out)
}

/// `k = max{ j : a_j | u }` and `v = u / a_k`, so `b_{k+1}` does not divide `v`.
pub fn factor_u(u: &BigUint, seq: &ArithSeq) -> Result<(u64, BigUint)> {
    if u.is_zero() {
        return Err(Error::Domain("factor_u needs u >= 1".into()));
    }
    let mut k = 0u64;
    let mut v = u.clone();
    loop {
        let b = seq.ratio(k + 1);
        if (&v % &b).is_zero() {
            v /= b;
            k += 1;
        } else {
            return Ok((k, v));
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbaultRow {
    pub i: u64,
    pub s: u64,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub u: BigUint,
    pub k: u64,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub v: BigUint,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub b: BigUint,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub l: BigUint,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub m: BigUint,
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub c: BigUint,
    /// `b - m c`; the argument needs it in `[1, m - 1]`.
    #[serde(serialize_with = "crate::exact::ser_big")]
    pub e: BigUint,
    pub existence_ok: bool,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub value: BigRational,
    pub in_band: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbaultReport {
    pub construction: String,
    pub spec: String,
    pub point: String,
    pub skip_degenerate: bool,
    pub band: BoundInterval,
    pub rows: Vec<ArbaultRow>,
    /// Candidates passed over because `b_{k+1}` is a multiple of `m`.
    pub skipped: Vec<u64>,
    pub existence_failures: Vec<u64>,
    pub out_of_band: Vec<u64>,
}

struct Candidate {
    k: u64,
    v: BigUint,
    b: BigUint,
    l: BigUint,
    m: BigUint,
    c: BigUint,
    e: BigUint,
}

fn candidate(u: &BigUint, seq: &ArithSeq) -> Result<Candidate> {
    let (k, v) = factor_u(u, seq)?;
    let b = seq.ratio(k + 1);
    let l = &v % &b;
    let m = if &l * 2u32 <= b { &l * 2u32 } else { (&b - &l) * 2u32 };
    let c = &b / &m;
    let e = &b - &m * &c;
    Ok(Candidate { k, v, b, l, m, c, e })
}

/// Builds `x` with support `{k_{s_i} + 1}` and `c = floor(b / m)` against the
/// increasing sequence `u`, choosing `s_1 < s_2 < ...` greedily with
/// `a_{k_{s_{i+1}}} >= 8 u_{s_i}`, and certifies `{u_{s_i} x} ∈ [1/4, 7/8]`
/// exactly for the first `rows` selections.
///
/// With `skip_degenerate`, indices where `m | b` (no admissible `e`) are
/// passed over during selection; otherwise they are kept and reported.
pub fn arbault_witness(seq: &ArithSeq, u: &[BigUint], rows: usize, skip_degenerate: bool) -> Result<ArbaultReport> {
    if u.is_empty() {
        return Err(Error::Precondition("the sequence u is empty".into()));
    }
    if u.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("u must be strictly increasing".into()));
    }
    let mut chosen: Vec<(usize, Candidate)> = Vec::new();
    let mut skipped = Vec::new();
    for (idx, un) in u.iter().enumerate() {
        if chosen.len() >= rows {
            break;
        }
        let cand = candidate(un, seq)?;
        if let Some((prev, _)) = chosen.last() {
            if seq.term(cand.k) < &u[*prev] * 8u32 {
                continue;
            }
        }
        if skip_degenerate && cand.e.is_zero() {
            skipped.push(idx as u64 + 1);
            continue;
        }
        chosen.push((idx, cand));
    }
    let digits: Vec<(u64, BigUint)> = chosen.iter().map(|(_, c)| (c.k + 1, c.m.clone())).collect();
    let point = CirclePoint::new(seq, DigitRule::FloorDiv(digits))?;
    let band = BoundInterval::new(ratio(1, 4), ratio(7, 8)).expect("valid band");
    let mut out = Vec::new();
    for (i, (idx, c)) in chosen.into_iter().enumerate() {
        let value = frac_of_multiple(&point, &u[idx])?;
        out.push(ArbaultRow {
            i: i as u64 + 1,
            s: idx as u64 + 1,
            u: u[idx].clone(),
            k: c.k,
            v: c.v,
            in_band: band.contains(&value),
            existence_ok: !c.e.is_zero(),
            b: c.b,
            l: c.l,
            m: c.m,
            c: c.c,
            e: c.e,
            value,
        });
    }
    let existence_failures = out.iter().filter(|r| !r.existence_ok).map(|r| r.i).collect();
    let out_of_band = out.iter().filter(|r| !r.in_band).map(|r| r.i).collect();
    Ok(ArbaultReport {
        construction: "arbault".into(),
        spec: seq.spec().to_string(),
        point: point.rule().to_string(),
        skip_degenerate,
        band,
        rows: out,
        skipped,
        existence_failures,
        out_of_band,
    })
}

/// `u_n = a_n + a_{n-1}` for `n = 1..=count`.
pub fn consecutive_sum_sequence(seq: &ArithSeq, count: u64) -> Vec<BigUint> {
    (1..=count).map(|n| seq.term(n) + seq.term(n - 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::DEFAULT_DEPTH_CAP;
    use crate::classify::{weakly_dli_witness_set, DEFAULT_SCAN_LIMIT};
    use crate::density::AllNaturals;
    use crate::sequences::RatioSpec;
    use num_integer::Integer;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l1() -> ArithSeq {
        ArithSeq::new(RatioSpec::linear(1).unwrap())
    }
    fn p2() -> ArithSeq {
        ArithSeq::new(RatioSpec::power(2).unwrap())
    }
    fn ones(seq: &ArithSeq) -> CirclePoint {
        CirclePoint::new(seq, DigitRule::OnesOn(NatSet::rule(AllNaturals))).unwrap()
    }

    #[test]
    fn continuum_examples() {
        let squares: Vec<u64> = (1..=10).map(|j| j * j + 1).collect();
        let x = continuum_family_point(&squares, &[false, true], &l1()).unwrap();
        assert_eq!(x.support(100, false).unwrap().finite_members().unwrap(), vec![5, 26]);
        let z = continuum_family_point(&squares, &[], &l1()).unwrap();
        assert_eq!(z.support_form(), SupportForm::Finite { max: 0 });
        let a = continuum_family_point(&squares, &[true, false, true], &l1()).unwrap();
        let b = continuum_family_point(&squares, &[true, true, true], &l1()).unwrap();
        assert_ne!(
            a.support(200, false).unwrap().finite_members(),
            b.support(200, false).unwrap().finite_members()
        );
        assert!(continuum_family_point(&squares[..5], &[true, true], &l1()).is_err());
    }

    #[test]
    fn partition_examples() {
        let p = nonmembership_partition(&ones(&p2()), 10, 13, 20).unwrap();
        assert_eq!(p.branch, Branch::Cofinite);
        assert!(p.a1.contains(4).unwrap());
        assert_eq!(p.a3.finite_members().unwrap(), vec![2, 3]);
        assert!(p.a2.finite_members().unwrap().is_empty());
        // c_1 = 1 = b_1 - 1 puts 1 in the quasi-support, so A starts at 2
        let p = nonmembership_partition(&ones(&l1()), 10, 13, 20).unwrap();
        assert_eq!(p.a3.finite_members().unwrap(), (2..=9).collect::<Vec<_>>());
        assert!(!p.a.contains(1).unwrap());
        let fin = CirclePoint::new(&l1(), DigitRule::Finite(vec![BigUint::one()])).unwrap();
        assert!(nonmembership_partition(&fin, 10, 13, 20).is_err());
        assert!(nonmembership_partition(&ones(&p2()), 9, 13, 20).is_err());
        assert!(nonmembership_partition(&ones(&p2()), 10, 12, 20).is_err());
    }

    #[test]
    fn non_cofinite_branch() {
        let evens = NatSet::rule(crate::density::Residue { modulus: 2, residue: 0 });
        let x = CirclePoint::new(&p2(), DigitRule::OnesOn(evens)).unwrap();
        let p = nonmembership_partition(&x, 10, 13, 12).unwrap();
        assert_eq!(p.branch, Branch::NonCofinite);
        assert_eq!(p.a.finite_members().unwrap(), vec![2, 4, 6, 8, 10, 12]);
    }

    #[test]
    fn case_one_family_shape() {
        let p2 = p2();
        let x = ones(&p2);
        let d = p2.derived();
        let horizon = d.boundary(12).unwrap() - 1;
        let part = nonmembership_partition(&x, 10, 13, 13).unwrap();
        let b = bad_interval_family(&x, &part, Case::SmallDigits, horizon).unwrap();
        // c_k = 1: one interval per k, starting floor(b_k/10) into the block
        for k in 4..=12u64 {
            let start = d.boundary(k - 1).unwrap();
            let bk = 1u64 << k;
            let lo = start + bk / 10;
            let hi = start + 4 * bk / 10 - 1;
            assert!(b.contains(lo).unwrap() && b.contains(hi).unwrap());
            assert!(!b.contains(lo - 1).unwrap() && !b.contains(hi + 1).unwrap());
            assert!(hi - lo + 1 > bk / 10);
        }
        let lifted = lift(&part.a1, &d).unwrap();
        for i in b.members_upto(horizon).unwrap() {
            assert!(lifted.contains(i).unwrap());
        }
        let empty = Partition { a1: NatSet::empty().with_horizon(13), ..part };
        let none = bad_interval_family(&x, &empty, Case::SmallDigits, horizon).unwrap();
        assert_eq!(none.count_upto(horizon).unwrap(), 0);
    }

    #[test]
    fn case_one_certifies() {
        let p2 = p2();
        let x = ones(&p2);
        let horizon = p2.derived().boundary(11).unwrap() - 1;
        let rep = nonmember_run(&x, Case::SmallDigits, 10, 13, 2, DEFAULT_DEPTH_CAP, horizon).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.undecided.is_empty());
        assert!(rep.certified > 0);
        assert_eq!(rep.certified, rep.rows_checked);
    }

    #[test]
    fn case_two_certifies() {
        // c_n = b_n - 1 on the evens: c/b = 1 - 1/b_n > 1 - 1/13 once b_n > 13
        let p2 = p2();
        let evens = NatSet::rule(crate::density::Residue { modulus: 2, residue: 0 });
        let x = CirclePoint::new(&p2, DigitRule::MaxOn(evens)).unwrap();
        let horizon = p2.derived().boundary(12).unwrap() - 1;
        let rep = nonmember_run(&x, Case::LargeDigits, 10, 13, 2, DEFAULT_DEPTH_CAP, horizon).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
        assert!(rep.certified > 0);
    }

    #[test]
    fn factor_examples() {
        let l1 = l1();
        assert_eq!(factor_u(&BigUint::from(48u32), &l1).unwrap(), (3, BigUint::from(2u32)));
        assert_eq!(factor_u(&BigUint::one(), &l1).unwrap(), (0, BigUint::one()));
        assert_eq!(factor_u(&l1.term(5), &l1).unwrap(), (5, BigUint::one()));
        assert!(factor_u(&BigUint::zero(), &l1).is_err());
    }

    #[test]
    fn arbault_on_consecutive_sums() {
        let l1 = l1();
        let u = consecutive_sum_sequence(&l1, 120);
        let rep = arbault_witness(&l1, &u, 20, true).unwrap();
        assert_eq!(rep.rows.len(), 20);
        assert!(rep.existence_failures.is_empty());
        assert!(rep.out_of_band.is_empty());
        // without skipping, even b_{k+1} gives m | b
        let raw = arbault_witness(&l1, &u, 20, false).unwrap();
        assert!(!raw.existence_failures.is_empty());
        assert!(arbault_witness(&l1, &[], 5, true).is_err());
        let bad = vec![BigUint::from(5u32), BigUint::from(3u32)];
        assert!(arbault_witness(&l1, &bad, 5, true).is_err());
    }

    #[test]
    fn continuum_points_on_witness_set_have_finite_support() {
        let l1 = l1();
        let w = weakly_dli_witness_set(l1.spec(), 8, DEFAULT_SCAN_LIMIT).unwrap();
        let x = continuum_family_point(&w.members, &[true, false, true], &l1).unwrap();
        assert!(matches!(x.support_form(), SupportForm::Finite { max } if max <= 90));
    }

    proptest! {
        #[test]
        fn factor_u_is_maximal(u in 1u64..1_000_000_000, which in 0usize..2) {
            let seq = if which == 0 { l1() } else { ArithSeq::new(RatioSpec::constant(6).unwrap()) };
            let ub = BigUint::from(u);
            let (k, v) = factor_u(&ub, &seq).unwrap();
            let a = seq.term(k);
            prop_assert_eq!(&a * &v, ub.clone());
            prop_assert!(!ub.is_multiple_of(&seq.term(k + 1)));
            prop_assert!(!v.is_multiple_of(&seq.ratio(k + 1)));
        }
    }

    #[test]
    fn factor_u_random_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seq = p2();
        for _ in 0..200 {
            let u = BigUint::from(rng.gen_range(1u64..=1_000_000_000));
            let (k, v) = factor_u(&u, &seq).unwrap();
            assert_eq!(seq.term(k) * &v, u);
        }
    }
}
