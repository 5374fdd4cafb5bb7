//! Subsets of `N = {1, 2, ...}`, prefix densities over `[1, N]`, translation,
//! and the lifting map `L(A) = U_{k in A} [n_{k-1}, n_k - 1]`.
//!
//! Density prefixes are `[1, N]`. Counting over `[0, N - 1]` instead shifts
//! every quotient by `O(1/N)`, which never changes a zero/positive verdict.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::DerivedSeq;

/// A membership rule for sets that are not finite unions of intervals.
pub trait SetRule: fmt::Debug + Send + Sync {
    /// Membership of `n >= 1`. Only called for `n` within the set's horizon.
    fn contains(&self, n: u64) -> bool;

    /// Expression form, used in reports.
    fn describe(&self) -> String;

    /// `Some(true)` if the complement is finite, `Some(false)` if it is
    /// infinite, `None` if unknown.
    fn is_cofinite(&self) -> Option<bool> {
        None
    }

    /// `Some(true)` if the set is infinite, `Some(false)` if finite.
    fn is_infinite(&self) -> Option<bool> {
        None
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Sorted, deduplicated, every element >= 1.
    Finite(Vec<u64>),
    /// Sorted, disjoint, non-adjacent closed intervals.
    Intervals(Vec<(u64, u64)>),
    Rule(Arc<dyn SetRule>),
}

/// A subset of `N`. Queries are exact for every `n` up to the horizon;
/// `horizon == None` means exact everywhere.
#[derive(Debug, Clone)]
pub struct NatSet {
    repr: Repr,
    horizon: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Difference,
}

impl NatSet {
    pub fn empty() -> Self {
        Self { repr: Repr::Finite(Vec::new()), horizon: None }
    }

    pub fn finite<I: IntoIterator<Item = u64>>(elems: I) -> Result<Self> {
        let mut v: Vec<u64> = elems.into_iter().collect();
        if v.contains(&0) {
            return Err(Error::Domain("0 is not a natural number here".into()));
        }
        v.sort_unstable();
        v.dedup();
        Ok(Self { repr: Repr::Finite(v), horizon: None })
    }

    /// Union of closed intervals, in any order; overlapping or adjacent
    /// pieces are merged and empty ones (`lo > hi`) dropped.
    pub fn intervals<I: IntoIterator<Item = (u64, u64)>>(pieces: I) -> Result<Self> {
        let mut v: Vec<(u64, u64)> = pieces.into_iter().filter(|(lo, hi)| lo <= hi).collect();
        if v.iter().any(|&(lo, _)| lo == 0) {
            return Err(Error::Domain("0 is not a natural number here".into()));
        }
        v.sort_unstable();
        Ok(Self { repr: Repr::Intervals(merge_sorted(v)), horizon: None })
    }

    pub fn rule<R: SetRule + 'static>(rule: R) -> Self {
        Self { repr: Repr::Rule(Arc::new(rule)), horizon: None }
    }

    /// Restrict exactness to `[1, horizon]`.
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(self.horizon.map_or(horizon, |h| h.min(horizon)));
        self
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    fn check(&self, n: u64) -> Result<()> {
        match self.horizon {
            Some(h) if n > h => Err(Error::HorizonExceeded { requested: n, horizon: h }),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(self.contains_unchecked(n))
    }

    fn contains_unchecked(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match &self.repr {
            Repr::Finite(v) => v.binary_search(&n).is_ok(),
            Repr::Intervals(v) => {
                let pos = v.partition_point(|&(lo, _)| lo <= n);
                pos > 0 && v[pos - 1].1 >= n
            }
            Repr::Rule(r) => r.contains(n),
        }
    }

    /// `|S ∩ [1, n]|`.
    pub fn count_upto(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        Ok(match &self.repr {
            Repr::Finite(v) => v.partition_point(|&x| x <= n) as u64,
            Repr::Intervals(v) => v
                .iter()
                .take_while(|&&(lo, _)| lo <= n)
                .map(|&(lo, hi)| hi.min(n) - lo + 1)
                .sum(),
            Repr::Rule(r) => (1..=n).filter(|&i| r.contains(i)).count() as u64,
        })
    }

    /// Members in `[1, n]`, ascending.
    pub fn members_upto(&self, n: u64) -> Result<Vec<u64>> {
        self.check(n)?;
        Ok(match &self.repr {
            Repr::Finite(v) => v.iter().copied().take_while(|&x| x <= n).collect(),
            Repr::Intervals(v) => v
                .iter()
                .take_while(|&&(lo, _)| lo <= n)
                .flat_map(|&(lo, hi)| lo..=hi.min(n))
                .collect(),
            Repr::Rule(r) => (1..=n).filter(|&i| r.contains(i)).collect(),
        })
    }

    /// Exact member list when the set is known to be finite.
    pub fn finite_members(&self) -> Option<Vec<u64>> {
        match &self.repr {
            Repr::Finite(v) => Some(v.clone()),
            Repr::Intervals(v) => Some(v.iter().flat_map(|&(lo, hi)| lo..=hi).collect()),
            Repr::Rule(_) => None,
        }
    }

    /// Canonical interval form for the finite representations.
    pub fn as_intervals(&self) -> Option<Vec<(u64, u64)>> {
        match &self.repr {
            Repr::Finite(v) => Some(runs(v)),
            Repr::Intervals(v) => Some(v.clone()),
            Repr::Rule(_) => None,
        }
    }

    /// Largest member, for finite representations.
    pub fn max_member(&self) -> Option<u64> {
        match &self.repr {
            Repr::Finite(v) => v.last().copied(),
            Repr::Intervals(v) => v.last().map(|&(_, hi)| hi),
            Repr::Rule(_) => None,
        }
    }

    pub fn is_finite_repr(&self) -> bool {
        !matches!(self.repr, Repr::Rule(_))
    }

    /// Whether the whole set is known to be infinite / finite. A finite
    /// list with a horizon only describes a prefix and reports `None`.
    pub fn is_infinite(&self) -> Option<bool> {
        match (&self.repr, self.horizon) {
            (Repr::Rule(r), _) => r.is_infinite(),
            (_, None) => Some(false),
            (_, Some(_)) => None,
        }
    }

    pub fn is_cofinite(&self) -> Option<bool> {
        match (&self.repr, self.horizon) {
            (Repr::Rule(r), _) => r.is_cofinite(),
            (_, None) => Some(false),
            (_, Some(_)) => None,
        }
    }

    /// Exact equality, available when both sides are finite representations.
    pub fn same_as(&self, other: &NatSet) -> Option<bool> {
        Some(self.as_intervals()? == other.as_intervals()?)
    }

    /// Exact density estimate of the prefix `[1, n]`.
    pub fn prefix_density(&self, n: u64) -> Result<DensityEstimate> {
        if n == 0 {
            return Err(Error::Domain("density prefix must be at least 1".into()));
        }
        let c = self.count_upto(n)?;
        Ok(DensityEstimate::new(n, c, n - c, 0))
    }
}

fn merge_sorted(v: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn runs(v: &[u64]) -> Vec<(u64, u64)> {
    merge_sorted(v.iter().map(|&x| (x, x)).collect())
}

impl fmt::Display for NatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite(v) => {
                write!(f, "{{")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "}}")
            }
            Repr::Intervals(v) => {
                if v.is_empty() {
                    return write!(f, "{{}}");
                }
                for (i, (lo, hi)) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "[{lo},{hi}]")?;
                }
                Ok(())
            }
            Repr::Rule(r) => write!(f, "{}", r.describe()),
        }
    }
}

/// Counts of a prefix `[1, N]` split into members, non-members and rows the
/// evaluator could not decide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityEstimate {
    pub horizon: u64,
    pub in_count: u64,
    pub out_count: u64,
    pub undecided_count: u64,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub lo: BigRational,
    #[serde(serialize_with = "crate::exact::ser_ratio")]
    pub hi: BigRational,
}

impl DensityEstimate {
    pub fn new(horizon: u64, in_count: u64, out_count: u64, undecided_count: u64) -> Self {
        assert_eq!(in_count + out_count + undecided_count, horizon);
        let lo = crate::exact::ratio(in_count, horizon);
        let hi = crate::exact::ratio(in_count + undecided_count, horizon);
        Self { horizon, in_count, out_count, undecided_count, lo, hi }
    }

    pub fn undecided_fraction(&self) -> BigRational {
        crate::exact::ratio(self.undecided_count, self.horizon)
    }

    pub fn invariants_hold(&self) -> bool {
        self.in_count + self.out_count + self.undecided_count == self.horizon
            && self.lo == crate::exact::ratio(self.in_count, self.horizon)
            && self.hi == crate::exact::ratio(self.in_count + self.undecided_count, self.horizon)
            && self.lo <= self.hi
    }
}

/// Density estimate of `S ∩ [1, N]`.
pub fn prefix_density(set: &NatSet, n: u64) -> Result<DensityEstimate> {
    set.prefix_density(n)
}

#[derive(Debug)]
struct Lifted {
    inner: NatSet,
    seq: DerivedSeq,
}

impl SetRule for Lifted {
    fn contains(&self, i: u64) -> bool {
        // i lies in block k = [n_k, n_{k+1} - 1], which is L({k + 1}).
        match self.seq.decompose(i) {
            Ok((k, _)) => self.inner.contains_unchecked(k + 1),
            Err(_) => false,
        }
    }
    fn describe(&self) -> String {
        format!("lift({})", self.inner)
    }
    fn is_infinite(&self) -> Option<bool> {
        self.inner.is_infinite()
    }
    fn is_cofinite(&self) -> Option<bool> {
        self.inner.is_cofinite()
    }
}

/// `L(S) = U_{k in S} [n_{k-1}, n_k - 1]`. Finite inputs give a canonical
/// interval union; rule inputs give a rule.
pub fn lift(set: &NatSet, seq: &DerivedSeq) -> Result<NatSet> {
    let horizon = match set.horizon {
        Some(h) => Some(seq.boundary(h)? - 1),
        None => None,
    };
    let lifted = match &set.repr {
        Repr::Rule(_) => NatSet {
            repr: Repr::Rule(Arc::new(Lifted { inner: set.clone(), seq: seq.clone() })),
            horizon: None,
        },
        _ => {
            let members = set.finite_members().unwrap_or_default();
            let mut pieces = Vec::with_capacity(members.len());
            for k in members {
                pieces.push((seq.boundary(k - 1)?, seq.boundary(k)? - 1));
            }
            NatSet::intervals(pieces)?
        }
    };
    Ok(match horizon {
        Some(h) => lifted.with_horizon(h),
        None => lifted,
    })
}

#[derive(Debug)]
struct Shifted {
    inner: NatSet,
    m: u64,
}

impl SetRule for Shifted {
    fn contains(&self, n: u64) -> bool {
        n.checked_add(self.m).is_some_and(|x| self.inner.contains_unchecked(x))
    }
    fn describe(&self) -> String {
        format!("shift({},{})", self.inner, self.m)
    }
    fn is_infinite(&self) -> Option<bool> {
        self.inner.is_infinite()
    }
    fn is_cofinite(&self) -> Option<bool> {
        self.inner.is_cofinite()
    }
}

/// `S - m = { a - m : a in S, a - m >= 1 }`.
pub fn translate(set: &NatSet, m: u64) -> NatSet {
    if m == 0 {
        return set.clone();
    }
    let horizon = set.horizon.map(|h| h.saturating_sub(m));
    let out = match &set.repr {
        Repr::Finite(v) => NatSet {
            repr: Repr::Finite(v.iter().filter(|&&x| x > m).map(|&x| x - m).collect()),
            horizon: None,
        },
        Repr::Intervals(v) => NatSet {
            repr: Repr::Intervals(
                v.iter()
                    .filter(|&&(_, hi)| hi > m)
                    .map(|&(lo, hi)| (lo.saturating_sub(m).max(1), hi - m))
                    .collect(),
            ),
            horizon: None,
        },
        Repr::Rule(_) => {
            NatSet { repr: Repr::Rule(Arc::new(Shifted { inner: set.clone(), m })), horizon: None }
        }
    };
    match horizon {
        Some(h) => out.with_horizon(h),
        None => out,
    }
}

#[derive(Debug)]
struct Combined {
    op: SetOp,
    left: NatSet,
    right: NatSet,
}

impl SetRule for Combined {
    fn contains(&self, n: u64) -> bool {
        let a = self.left.contains_unchecked(n);
        let b = self.right.contains_unchecked(n);
        match self.op {
            SetOp::Union => a || b,
            SetOp::Intersect => a && b,
            SetOp::Difference => a && !b,
        }
    }
    fn describe(&self) -> String {
        let name = match self.op {
            SetOp::Union => "union",
            SetOp::Intersect => "inter",
            SetOp::Difference => "diff",
        };
        format!("{name}({},{})", self.left, self.right)
    }
    fn is_cofinite(&self) -> Option<bool> {
        let (a, b) = (self.left.is_cofinite(), self.right.is_cofinite());
        match self.op {
            SetOp::Union => match (a, b) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                _ => None,
            },
            SetOp::Intersect => match (a, b) {
                (Some(true), Some(true)) => Some(true),
                (Some(false), _) | (_, Some(false)) => Some(false),
                _ => None,
            },
            SetOp::Difference => match (a, self.right.is_infinite()) {
                (Some(true), Some(false)) => Some(true),
                (Some(false), _) => Some(false),
                (_, Some(true)) => Some(false),
                _ => None,
            },
        }
    }
    fn is_infinite(&self) -> Option<bool> {
        let (a, b) = (self.left.is_infinite(), self.right.is_infinite());
        match self.op {
            SetOp::Union => match (a, b) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            SetOp::Intersect => match (a, b) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                _ if self.left.is_cofinite() == Some(true) => b,
                _ if self.right.is_cofinite() == Some(true) => a,
                _ => None,
            },
            SetOp::Difference => match a {
                Some(false) => Some(false),
                Some(true) if b == Some(false) => Some(true),
                _ => None,
            },
        }
    }
}

fn interval_op(op: SetOp, a: &[(u64, u64)], b: &[(u64, u64)]) -> Vec<(u64, u64)> {
    match op {
        SetOp::Union => {
            let mut all: Vec<(u64, u64)> = a.iter().chain(b).copied().collect();
            all.sort_unstable();
            merge_sorted(all)
        }
        SetOp::Intersect => {
            let (mut i, mut j) = (0, 0);
            let mut out = Vec::new();
            while i < a.len() && j < b.len() {
                let lo = a[i].0.max(b[j].0);
                let hi = a[i].1.min(b[j].1);
                if lo <= hi {
                    out.push((lo, hi));
                }
                if a[i].1 < b[j].1 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            merge_sorted(out)
        }
        SetOp::Difference => {
            let mut out = Vec::new();
            let mut j = 0;
            for &(lo, hi) in a {
                let mut cur = lo;
                while j < b.len() && b[j].1 < cur {
                    j += 1;
                }
                let mut jj = j;
                while cur <= hi {
                    if jj >= b.len() || b[jj].0 > hi {
                        out.push((cur, hi));
                        break;
                    }
                    if b[jj].0 > cur {
                        out.push((cur, b[jj].0 - 1));
                    }
                    if b[jj].1 >= hi {
                        break;
                    }
                    cur = b[jj].1 + 1;
                    jj += 1;
                }
            }
            merge_sorted(out)
        }
    }
}

/// Exact union / intersection / difference. Two finite lists stay a list,
/// finite representations otherwise become an interval union, and anything
/// involving a rule becomes a rule. The horizon is the smaller of the two.
pub fn set_algebra(op: SetOp, left: &NatSet, right: &NatSet) -> Result<NatSet> {
    let horizon = match (left.horizon, right.horizon) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let out = match (&left.repr, &right.repr) {
        (Repr::Finite(a), Repr::Finite(b)) => {
            let v: Vec<u64> = match op {
                SetOp::Union => {
                    let mut v: Vec<u64> = a.iter().chain(b).copied().collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                }
                SetOp::Intersect => a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect(),
                SetOp::Difference => a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect(),
            };
            NatSet { repr: Repr::Finite(v), horizon: None }
        }
        (Repr::Rule(_), _) | (_, Repr::Rule(_)) => NatSet {
            repr: Repr::Rule(Arc::new(Combined { op, left: left.clone(), right: right.clone() })),
            horizon: None,
        },
        _ => {
            let a = left.as_intervals().unwrap();
            let b = right.as_intervals().unwrap();
            NatSet { repr: Repr::Intervals(interval_op(op, &a, &b)), horizon: None }
        }
    };
    Ok(match horizon {
        Some(h) => out.with_horizon(h),
        None => out,
    })
}

#[derive(Debug)]
pub struct AllNaturals;

impl SetRule for AllNaturals {
    fn contains(&self, _n: u64) -> bool {
        true
    }
    fn describe(&self) -> String {
        "all".into()
    }
    fn is_cofinite(&self) -> Option<bool> {
        Some(true)
    }
    fn is_infinite(&self) -> Option<bool> {
        Some(true)
    }
}

/// `{ n : n ≡ residue (mod modulus) }`; `evens` is `Residue { 2, 0 }`.
#[derive(Debug)]
pub struct Residue {
    pub modulus: u64,
    pub residue: u64,
}

impl SetRule for Residue {
    fn contains(&self, n: u64) -> bool {
        n % self.modulus == self.residue
    }
    fn describe(&self) -> String {
        match (self.modulus, self.residue) {
            (2, 0) => "evens".into(),
            (2, 1) => "odds".into(),
            (m, r) => format!("mod:{m}:{r}"),
        }
    }
    fn is_cofinite(&self) -> Option<bool> {
        Some(self.modulus == 1)
    }
    fn is_infinite(&self) -> Option<bool> {
        Some(true)
    }
}

#[derive(Debug)]
pub struct Squares;

impl SetRule for Squares {
    fn contains(&self, n: u64) -> bool {
        let r = n.isqrt();
        r * r == n
    }
    fn describe(&self) -> String {
        "squares".into()
    }
    fn is_cofinite(&self) -> Option<bool> {
        Some(false)
    }
    fn is_infinite(&self) -> Option<bool> {
        Some(true)
    }
}

/// `K = U_j [g_j, h_j]` with `g_1 = 1`, `h_j - g_j = j^3`, `g_{j+1} - h_j = j`.
#[derive(Debug)]
pub struct CubeGapBlocks;

impl CubeGapBlocks {
    /// `(g_j, h_j)` for `j = 1, 2, ...` while `g_j <= limit`.
    pub fn blocks_upto(limit: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut g = 1u64;
        let mut j = 1u64;
        while g <= limit {
            let h = g + j * j * j;
            out.push((g, h));
            g = h + j;
            j += 1;
        }
        out
    }

    /// `h_j`.
    pub fn block_end(j: u64) -> u64 {
        let mut g = 1u64;
        for i in 1..j {
            g += i * i * i + i;
        }
        g + j * j * j
    }
}

impl SetRule for CubeGapBlocks {
    fn contains(&self, n: u64) -> bool {
        let mut g = 1u64;
        let mut j = 1u64;
        loop {
            let h = g + j * j * j;
            if n < g {
                return false;
            }
            if n <= h {
                return true;
            }
            g = h + j;
            j += 1;
        }
    }
    fn describe(&self) -> String {
        "blocks:cube-gap".into()
    }
    fn is_cofinite(&self) -> Option<bool> {
        Some(false)
    }
    fn is_infinite(&self) -> Option<bool> {
        Some(true)
    }
}

/// Splits `set ∩ [1, horizon]` into the indices with `b_n <= bound` and the
/// rest (the b-bounded / large-ratio split used for diagnostics).
pub fn split_by_ratio_bound(
    set: &NatSet,
    seq: &DerivedSeq,
    bound: u64,
    horizon: u64,
) -> Result<(NatSet, NatSet)> {
    let bound = BigUint::from(bound);
    let (small, large): (Vec<u64>, Vec<u64>) = set
        .members_upto(horizon)?
        .into_iter()
        .partition(|&n| seq.base().ratio(n) <= bound);
    Ok((NatSet::finite(small)?.with_horizon(horizon), NatSet::finite(large)?.with_horizon(horizon)))
}

/// Ratio helper used by tests and reports: the density as a float, display only.
pub fn approx(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
