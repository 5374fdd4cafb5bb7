//! Points of the circle `T = R/Z` written in canonical digits
//! `x = sum c_n / a_n`, `0 <= c_n <= b_n - 1`, and certified enclosures of
//! `{a_{n-1} x}`, `{d_i x}` and their norms.
//!
//! Everything here is exact. Windows of digits are folded with the ratios
//! `b_n, ..., b_{n+t}` only, so `a_n` itself is never formed: the enclosure
//! of `{a_{n-1} x}` is `[S, S + 1/P]` with `S = N/P` for
//! `N = c_n b_{n+1}...b_{n+t} + ... + c_{n+t}` and `P = b_n ... b_{n+t}`.
//! The true value is strictly below the top because `{a_{n+t} x} < 1`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::density::{NatSet, SetRule};
use crate::error::{Error, Result};
use crate::exact::{big_ratio, fmt_ratio};
use crate::sequences::ArithSeq;

/// Refinement cap used when nothing else is configured.
pub const DEFAULT_DEPTH_CAP: u64 = 64;

/// Digit counts past which `rat:` expansions stop when no horizon is given.
pub const DEFAULT_RATIONAL_HORIZON: u64 = 512;

/// How the digits `c_n` are produced.
#[derive(Debug, Clone)]
pub enum DigitRule {
    /// `c_1..c_m` then zeros.
    Finite(Vec<BigUint>),
    /// `c_1..c_m` known, later digits unknown.
    Prefix(Vec<BigUint>),
    /// `c_n = pattern[(n - 1) mod len]`.
    Periodic(Vec<BigUint>),
    /// `c_n = 1` on the set, 0 elsewhere.
    OnesOn(NatSet),
    /// `c_n = b_n - 1` on the set, 0 elsewhere.
    MaxOn(NatSet),
    /// `c_n = floor(b_n / m_n)` at the listed `(n, m_n)`, 0 elsewhere.
    FloorDiv(Vec<(u64, BigUint)>),
}

impl fmt::Display for DigitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, v: &[BigUint]) -> fmt::Result {
            write!(f, "[")?;
            for (i, c) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "]")
        }
        match self {
            DigitRule::Finite(v) => {
                write!(f, "finite:")?;
                list(f, v)
            }
            DigitRule::Prefix(v) => {
                write!(f, "prefix:")?;
                list(f, v)
            }
            DigitRule::Periodic(v) => {
                write!(f, "periodic:")?;
                list(f, v)
            }
            DigitRule::OnesOn(s) => write!(f, "ones-on:{s}"),
            DigitRule::MaxOn(s) => write!(f, "max-on:{s}"),
            DigitRule::FloorDiv(v) => {
                write!(f, "floor-div:m=[")?;
                for (i, (n, m)) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}:{m}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// What is known about `supp(x)` without scanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportForm {
    /// `supp(x) ⊆ [1, max]`; `max = 0` means `x = 0`.
    Finite { max: u64 },
    Cofinite,
    InfiniteNotCofinite,
    Unknown,
}

/// A point of `T` expanded against a fixed arithmetic sequence.
#[derive(Debug, Clone)]
pub struct CirclePoint {
    seq: ArithSeq,
    rule: Arc<DigitRule>,
    attested: bool,
    source: Option<String>,
}

impl CirclePoint {
    /// Validates ranges of listed digits and rejects rules that are
    /// detectably non-canonical (eventually `c_n = b_n - 1`).
    pub fn new(seq: &ArithSeq, rule: DigitRule) -> Result<Self> {
        validate_listed(seq, &rule)?;
        check_canonical(seq, &rule)?;
        Ok(Self { seq: seq.clone(), rule: Arc::new(rule), attested: false, source: None })
    }

    /// Skips the canonicality check; the point is marked as relying on the
    /// caller's declaration and reports say so.
    pub fn attested(seq: &ArithSeq, rule: DigitRule) -> Result<Self> {
        validate_listed(seq, &rule)?;
        Ok(Self { seq: seq.clone(), rule: Arc::new(rule), attested: true, source: None })
    }

    pub fn zero(seq: &ArithSeq) -> Self {
        Self {
            seq: seq.clone(),
            rule: Arc::new(DigitRule::Finite(Vec::new())),
            attested: false,
            source: Some("zero".into()),
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn seq(&self) -> &ArithSeq {
        &self.seq
    }

    pub fn rule(&self) -> &DigitRule {
        &self.rule
    }

    pub fn is_attested(&self) -> bool {
        self.attested
    }

    /// The expression the point was built from, or its rule.
    pub fn describe(&self) -> String {
        self.source.clone().unwrap_or_else(|| self.rule.to_string())
    }

    /// `c_n`, range-checked against `b_n`.
    pub fn digit(&self, n: u64) -> Result<BigUint> {
        if n == 0 {
            return Err(Error::Domain("digit index starts at 1".into()));
        }
        let c = match &*self.rule {
            DigitRule::Finite(v) => v.get((n - 1) as usize).cloned().unwrap_or_default(),
            DigitRule::Prefix(v) => match v.get((n - 1) as usize) {
                Some(c) => c.clone(),
                None => return Err(Error::UnknownDigit { index: n, known: v.len() as u64 }),
            },
            DigitRule::Periodic(p) => p[((n - 1) % p.len() as u64) as usize].clone(),
            DigitRule::OnesOn(s) => {
                if s.contains(n)? {
                    BigUint::one()
                } else {
                    BigUint::zero()
                }
            }
            DigitRule::MaxOn(s) => {
                if s.contains(n)? {
                    self.seq.ratio(n) - 1u32
                } else {
                    BigUint::zero()
                }
            }
            DigitRule::FloorDiv(v) => match v.binary_search_by_key(&n, |(i, _)| *i) {
                Ok(pos) => self.seq.ratio(n) / &v[pos].1,
                Err(_) => BigUint::zero(),
            },
        };
        let b = self.seq.ratio(n);
        if c >= b {
            return Err(Error::DigitOutOfRange {
                index: n,
                digit: c.to_string(),
                max: (b - 1u32).to_string(),
            });
        }
        Ok(c)
    }

    pub fn support_form(&self) -> SupportForm {
        match &*self.rule {
            DigitRule::Finite(v) => SupportForm::Finite { max: last_nonzero(v) },
            DigitRule::Prefix(_) => SupportForm::Unknown,
            DigitRule::Periodic(p) => {
                if p.iter().all(Zero::is_zero) {
                    SupportForm::Finite { max: 0 }
                } else if p.iter().all(|c| !c.is_zero()) {
                    SupportForm::Cofinite
                } else {
                    SupportForm::InfiniteNotCofinite
                }
            }
            DigitRule::OnesOn(s) | DigitRule::MaxOn(s) => match (s.is_infinite(), s.is_cofinite()) {
                (Some(false), _) => SupportForm::Finite { max: s.max_member().unwrap_or(0) },
                (_, Some(true)) => SupportForm::Cofinite,
                (Some(true), Some(false)) => SupportForm::InfiniteNotCofinite,
                _ => SupportForm::Unknown,
            },
            DigitRule::FloorDiv(v) => SupportForm::Finite { max: v.last().map_or(0, |(n, _)| *n) },
        }
    }

    /// Number of known digits for a prefix point.
    pub fn known_digits(&self) -> Option<u64> {
        match &*self.rule {
            DigitRule::Prefix(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    /// `x` as an exact rational when the support is finite.
    pub fn exact_value(&self) -> Option<BigRational> {
        match self.support_form() {
            SupportForm::Finite { max: 0 } => Some(BigRational::zero()),
            SupportForm::Finite { max } => {
                let s = self.raw_scaled(1, max - 1).ok()?;
                Some(big_ratio(&s.num, &s.den))
            }
            _ => None,
        }
    }

    /// `N` and `P` for the window `c_n .. c_{n+t}`.
    fn raw_scaled(&self, n: u64, t: u64) -> Result<Scaled> {
        let mut num = BigUint::zero();
        let mut den = BigUint::one();
        for j in n..=n + t {
            let b = self.seq.ratio(j);
            num = num * &b + self.digit(j)?;
            den *= b;
        }
        Ok(Scaled { num, den, exact: false, depth: t })
    }

    /// Enclosure of `{a_{n-1} x}` after exactness refinement: finite-support
    /// points give the exact value, prefix points shorten the window to the
    /// known digits. `None` when not even `c_n` is known.
    fn refined_scaled(&self, n: u64, t: u64) -> Result<Option<Scaled>> {
        match self.support_form() {
            SupportForm::Finite { max } if n > max => Ok(Some(Scaled {
                num: BigUint::zero(),
                den: BigUint::one(),
                exact: true,
                depth: 0,
            })),
            SupportForm::Finite { max } => {
                let mut s = self.raw_scaled(n, max - n)?;
                s.exact = true;
                Ok(Some(s))
            }
            _ => match self.known_digits() {
                Some(h) if n > h => Ok(None),
                Some(h) => self.raw_scaled(n, t.min(h - n)).map(Some),
                None => self.raw_scaled(n, t).map(Some),
            },
        }
    }

    /// Digit support up to `horizon` (`quasi = false`) or quasi-support
    /// `{c_n = b_n - 1}` (`quasi = true`). Rule-based points return a rule
    /// set that is exact everywhere.
    pub fn support(&self, horizon: u64, quasi: bool) -> Result<NatSet> {
        if horizon == 0 {
            return Err(Error::Domain("support horizon must be at least 1".into()));
        }
        match &*self.rule {
            DigitRule::Finite(_) | DigitRule::FloorDiv(_) => {
                let max = match self.support_form() {
                    SupportForm::Finite { max } => max,
                    _ => unreachable!(),
                };
                let members = self.scan_digits(1, max, quasi)?;
                NatSet::finite(members)
            }
            DigitRule::Prefix(v) => {
                let upto = horizon.min(v.len() as u64);
                let members = self.scan_digits(1, upto, quasi)?;
                Ok(NatSet::finite(members)?.with_horizon(upto.max(1)))
            }
            DigitRule::OnesOn(s) if !quasi => Ok(s.clone()),
            DigitRule::MaxOn(s) => Ok(s.clone()),
            _ => Ok(NatSet::rule(DigitSet { point: self.clone(), quasi })),
        }
    }

    fn scan_digits(&self, from: u64, to: u64, quasi: bool) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        for n in from..=to {
            let c = self.digit(n)?;
            let hit = if quasi { c + 1u32 == self.seq.ratio(n) } else { !c.is_zero() };
            if hit {
                out.push(n);
            }
        }
        Ok(out)
    }
}

fn last_nonzero(v: &[BigUint]) -> u64 {
    v.iter().rposition(|c| !c.is_zero()).map_or(0, |p| p as u64 + 1)
}

fn validate_listed(seq: &ArithSeq, rule: &DigitRule) -> Result<()> {
    let check = |n: u64, c: &BigUint| -> Result<()> {
        let b = seq.ratio(n);
        if *c >= b {
            return Err(Error::DigitOutOfRange {
                index: n,
                digit: c.to_string(),
                max: (b - 1u32).to_string(),
            });
        }
        Ok(())
    };
    match rule {
        DigitRule::Finite(v) | DigitRule::Prefix(v) => {
            for (i, c) in v.iter().enumerate() {
                check(i as u64 + 1, c)?;
            }
        }
        DigitRule::Periodic(p) => {
            if p.is_empty() {
                return Err(Error::Domain("periodic digit rule needs at least one entry".into()));
            }
            for (i, c) in p.iter().enumerate() {
                check(i as u64 + 1, c)?;
            }
        }
        DigitRule::FloorDiv(v) => {
            if v.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Domain("floor-div indices must be strictly increasing".into()));
            }
            for (n, m) in v {
                if *n == 0 {
                    return Err(Error::Domain("digit index starts at 1".into()));
                }
                let b = seq.ratio(*n);
                if *m <= BigUint::one() || *m > b {
                    return Err(Error::Precondition(format!(
                        "floor-div needs 1 < m_{n} <= b_{n} = {b}, got {m}"
                    )));
                }
            }
        }
        DigitRule::OnesOn(_) | DigitRule::MaxOn(_) => {}
    }
    Ok(())
}

fn check_canonical(seq: &ArithSeq, rule: &DigitRule) -> Result<()> {
    let eventual = seq.spec().eventual_constant();
    match rule {
        DigitRule::Finite(_) | DigitRule::Prefix(_) | DigitRule::FloorDiv(_) => Ok(()),
        DigitRule::Periodic(p) => match eventual {
            Some(c) if p.iter().any(|d| *d >= BigUint::from(c)) => Err(Error::DigitOutOfRange {
                index: 0,
                digit: p.iter().max().unwrap().to_string(),
                max: (c - 1).to_string(),
            }),
            Some(c) if p.iter().all(|d| *d == BigUint::from(c - 1)) => Err(Error::NonCanonical(
                format!("every digit equals b_n - 1 = {} from some point on", c - 1),
            )),
            _ => Ok(()),
        },
        DigitRule::OnesOn(s) => match (eventual, s.is_cofinite()) {
            (Some(2), Some(true)) => Err(Error::NonCanonical(
                "ones on a co-finite set are eventually b_n - 1 = 1".into(),
            )),
            (Some(2), None) => Err(Error::NonCanonical(
                "cannot rule out a co-finite set under ratios eventually 2; attest instead".into(),
            )),
            _ => Ok(()),
        },
        DigitRule::MaxOn(s) => match s.is_cofinite() {
            Some(false) => Ok(()),
            Some(true) => Err(Error::NonCanonical("c_n = b_n - 1 on a co-finite set".into())),
            None => Err(Error::NonCanonical(
                "cannot rule out a co-finite set for max digits; attest instead".into(),
            )),
        },
    }
}

#[derive(Debug)]
struct DigitSet {
    point: CirclePoint,
    quasi: bool,
}

impl SetRule for DigitSet {
    fn contains(&self, n: u64) -> bool {
        match self.point.digit(n) {
            Ok(c) if self.quasi => c + 1u32 == self.point.seq.ratio(n),
            Ok(c) => !c.is_zero(),
            Err(_) => false,
        }
    }
    fn describe(&self) -> String {
        format!("{}({})", if self.quasi { "suppq" } else { "supp" }, self.point.rule)
    }
    fn is_infinite(&self) -> Option<bool> {
        if self.quasi {
            return None;
        }
        match self.point.support_form() {
            SupportForm::Finite { .. } => Some(false),
            SupportForm::Cofinite | SupportForm::InfiniteNotCofinite => Some(true),
            SupportForm::Unknown => None,
        }
    }
    fn is_cofinite(&self) -> Option<bool> {
        if self.quasi {
            return None;
        }
        match self.point.support_form() {
            SupportForm::Cofinite => Some(true),
            SupportForm::Finite { .. } | SupportForm::InfiniteNotCofinite => Some(false),
            SupportForm::Unknown => None,
        }
    }
}

/// Greedy mixed-radix expansion of `p/q ∈ [0, 1)` with exact integer
/// remainders: `s_0 = p`, `c_n = floor(b_n s_{n-1} / q)`,
/// `s_n = b_n s_{n-1} mod q`. A zero remainder within the horizon gives a
/// finite-support point; otherwise digits past the horizon are unknown.
pub fn digits_from_rational(x: &BigRational, seq: &ArithSeq, horizon: u64) -> Result<CirclePoint> {
    if x.is_negative() || *x >= BigRational::one() {
        return Err(Error::Domain(format!("{} is outside [0, 1)", fmt_ratio(x))));
    }
    if horizon == 0 {
        return Err(Error::Domain("expansion horizon must be at least 1".into()));
    }
    let q = x.denom().magnitude().clone();
    let mut s = x.numer().magnitude().clone();
    let mut digits = Vec::new();
    let source = format!("rat:{}@{horizon}", fmt_ratio(x));
    for n in 1..=horizon {
        if s.is_zero() {
            break;
        }
        let y = seq.ratio(n) * &s;
        let (c, rem) = y.div_rem(&q);
        digits.push(c);
        s = rem;
    }
    let rule = if s.is_zero() {
        let keep = last_nonzero(&digits) as usize;
        digits.truncate(keep);
        DigitRule::Finite(digits)
    } else {
        DigitRule::Prefix(digits)
    };
    Ok(CirclePoint::new(seq, rule)?.with_source(source))
}

/// `{n : c_n != 0}` or `{n : c_n = b_n - 1}`.
pub fn support(x: &CirclePoint, horizon: u64, quasi: bool) -> Result<NatSet> {
    x.support(horizon, quasi)
}

/// Exact closed enclosure `[lo, hi] ⊆ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundInterval {
    lo: BigRational,
    hi: BigRational,
}

impl BoundInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo.is_negative() || lo > hi || hi > BigRational::one() {
            return Err(Error::Domain(format!(
                "[{}, {}] is not a sub-interval of [0, 1]",
                fmt_ratio(&lo),
                fmt_ratio(&hi)
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: BigRational) -> Result<Self> {
        Self::new(v.clone(), v)
    }

    pub fn unit() -> Self {
        Self { lo: BigRational::zero(), hi: BigRational::one() }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn subset_of(&self, other: &BoundInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    fn from_scaled(lo: &BigUint, hi: &BigUint, den: &BigUint) -> Self {
        Self { lo: big_ratio(lo, den), hi: big_ratio(hi, den) }
    }
}

impl fmt::Display for BoundInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_ratio(&self.lo), fmt_ratio(&self.hi))
    }
}

impl Serialize for BoundInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq([fmt_ratio(&self.lo), fmt_ratio(&self.hi)])
    }
}

/// `[lo, hi]` reduced mod 1, or `None` if an integer lies strictly inside
/// or the interval is longer than 1.
pub fn reduce_mod_one(lo: &BigRational, hi: &BigRational) -> Option<BoundInterval> {
    let f = lo.floor();
    if *hi > &f + BigRational::one() {
        return None;
    }
    if *hi == &f + BigRational::one() && lo != hi {
        return None;
    }
    let (lo, hi) = if lo == hi && lo.is_integer() {
        (BigRational::zero(), BigRational::zero())
    } else {
        (lo - &f, hi - &f)
    };
    BoundInterval::new(lo, hi).ok()
}

/// `[S, S + 1/(b_n ... b_{n+t})]` for `{a_{n-1} x}`; needs the digits
/// `c_n .. c_{n+t}`.
pub fn frac_bound(x: &CirclePoint, n: u64, t: u64) -> Result<BoundInterval> {
    if n == 0 {
        return Err(Error::Domain("frac_bound index starts at 1".into()));
    }
    let s = x.raw_scaled(n, t)?;
    Ok(BoundInterval::from_scaled(&s.num, &(&s.num + 1u32), &s.den))
}

/// Like [`frac_bound`] but collapses to the exact value on finite-support
/// points and shortens the window to the known digits of prefix points.
pub fn frac_enclosure(x: &CirclePoint, n: u64, t: u64) -> Result<BoundInterval> {
    if n == 0 {
        return Err(Error::Domain("frac_enclosure index starts at 1".into()));
    }
    match x.refined_scaled(n, t)? {
        Some(s) => Ok(s.interval()),
        None => Ok(BoundInterval::unit()),
    }
}

/// Upper bound on the tail `sum_{i>=j} c_i / a_i` read off the depth-`t`
/// enclosure: `hi / a_{j-1}`.
pub fn tail_upper_bound(x: &CirclePoint, j: u64, t: u64) -> Result<BigRational> {
    let j_bound = frac_bound(x, j, t)?;
    let a = BigInt::from(x.seq().term(j - 1));
    Ok(j_bound.hi / BigRational::from_integer(a))
}

/// Enclosure of `min(y, 1 - y)` over `y ∈ J`.
pub fn norm_bound(j: &BoundInterval) -> BoundInterval {
    let half = BigRational::new(1.into(), 2.into());
    let one = BigRational::one();
    if j.hi <= half {
        j.clone()
    } else if j.lo >= half {
        BoundInterval { lo: &one - &j.hi, hi: &one - &j.lo }
    } else {
        let a = &one - &j.hi;
        let lo = if j.lo < a { j.lo.clone() } else { a };
        BoundInterval { lo, hi: half }
    }
}

/// `N / P` with `exact`, or the window `[N/P, (N+1)/P)`.
#[derive(Debug, Clone)]
struct Scaled {
    num: BigUint,
    den: BigUint,
    exact: bool,
    depth: u64,
}

impl Scaled {
    fn interval(&self) -> BoundInterval {
        if self.exact {
            BoundInterval::from_scaled(&self.num, &self.num, &self.den)
        } else {
            BoundInterval::from_scaled(&self.num, &(&self.num + 1u32), &self.den)
        }
    }

    /// `{r y}` for `y` in the window, as `[lo/den, hi/den]`, when no integer
    /// separates the ends.
    fn times(&self, r: u64) -> Option<Reduced> {
        let r = BigUint::from(r);
        let lo = &self.num * &r;
        if self.exact {
            let f = &lo / &self.den;
            let v = lo - f * &self.den;
            return Some(Reduced { lo: v.clone(), hi: v, den: self.den.clone() });
        }
        let hi = (&self.num + 1u32) * &r;
        let f = &lo / &self.den;
        let g = (&hi - 1u32) / &self.den;
        if f != g {
            return None;
        }
        let base = f * &self.den;
        Some(Reduced { lo: lo - &base, hi: hi - base, den: self.den.clone() })
    }
}

#[derive(Debug, Clone)]
struct Reduced {
    lo: BigUint,
    hi: BigUint,
    den: BigUint,
}

/// Classification of one row against a threshold `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowClass {
    AtLeast,
    Below,
    Undecided,
}

impl Reduced {
    /// `‖y‖ >= e/q`, `< e/q`, or neither, over the closed interval.
    fn classify_norm(&self, e: &BigUint, q: &BigUint) -> RowClass {
        let eps_d = e * &self.den;
        let top_d = (q - e) * &self.den;
        let lo_q = &self.lo * q;
        let hi_q = &self.hi * q;
        if lo_q >= eps_d && hi_q <= top_d {
            RowClass::AtLeast
        } else if hi_q < eps_d || lo_q > top_d {
            RowClass::Below
        } else {
            RowClass::Undecided
        }
    }

    fn interval(&self) -> BoundInterval {
        BoundInterval::from_scaled(&self.lo, &self.hi, &self.den)
    }
}

/// Certified enclosure of `{d_i x}` and how it was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedBound {
    pub index: u64,
    pub k: u64,
    pub r: u64,
    pub depth: u64,
    pub decided: bool,
    pub interval: BoundInterval,
}

/// Enclosures of `{a_k x}` for one derived block at the depths
/// `t, max(2t, 1), ...` up to the cap, computed once and shared by every
/// row of the block.
pub struct BlockEval<'a> {
    x: &'a CirclePoint,
    k: u64,
    depths: Vec<u64>,
    levels: Vec<OnceLock<Option<Scaled>>>,
}

impl<'a> BlockEval<'a> {
    pub fn new(x: &'a CirclePoint, k: u64, t: u64, cap: u64) -> Self {
        let mut depths = vec![t.min(cap)];
        let mut d = t;
        while d < cap {
            d = (2 * d).max(1).min(cap);
            depths.push(d);
        }
        let levels = depths.iter().map(|_| OnceLock::new()).collect();
        Self { x, k, depths, levels }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    fn level(&self, j: usize) -> Result<Option<&Scaled>> {
        if let Some(v) = self.levels[j].get() {
            return Ok(v.as_ref());
        }
        let v = self.x.refined_scaled(self.k + 1, self.depths[j])?;
        Ok(self.levels[j].get_or_init(|| v).as_ref())
    }

    /// Walks the depth ladder; stops early once the window cannot get finer.
    fn first<T>(&self, mut f: impl FnMut(&Scaled) -> Option<T>) -> Result<Option<(T, u64)>> {
        let mut prev: Option<BigUint> = None;
        for j in 0..self.depths.len() {
            let Some(s) = self.level(j)? else { return Ok(None) };
            if let Some(v) = f(s) {
                return Ok(Some((v, s.depth)));
            }
            if s.exact || prev.as_ref() == Some(&s.den) {
                return Ok(None);
            }
            prev = Some(s.den.clone());
        }
        Ok(None)
    }

    /// Enclosure of `{r a_k x}`.
    pub fn frac(&self, r: u64) -> Result<DerivedBound> {
        let index = self.x.seq().derived().boundary(self.k)? + r - 1;
        Ok(match self.first(|s| s.times(r))? {
            Some((red, depth)) => {
                DerivedBound { index, k: self.k, r, depth, decided: true, interval: red.interval() }
            }
            None => DerivedBound {
                index,
                k: self.k,
                r,
                depth: *self.depths.last().unwrap(),
                decided: false,
                interval: BoundInterval::unit(),
            },
        })
    }

    /// Classifies `‖r a_k x‖` against `e/q`, refining until decided.
    pub fn classify_norm(&self, r: u64, e: &BigUint, q: &BigUint) -> Result<RowClass> {
        let got = self.first(|s| match s.times(r)?.classify_norm(e, q) {
            RowClass::Undecided => None,
            c => Some(c),
        })?;
        Ok(got.map_or(RowClass::Undecided, |(c, _)| c))
    }
}

/// `{d_i x}` via `d_i = r a_k` and `{r y} = r y - floor(r y)`, refining the
/// depth `t, 2t, ...` up to `cap`; undecided rows come back as `[0, 1]`.
pub fn derived_frac_bound(x: &CirclePoint, i: u64, t: u64, cap: u64) -> Result<DerivedBound> {
    let (k, r) = x.seq().derived().decompose(i)?;
    BlockEval::new(x, k, t, cap).frac(r)
}

/// Exact `{u x}` for an integer `u` and a finite-support point, summing
/// `{u c_n / a_n}` term by term.
pub fn frac_of_multiple(x: &CirclePoint, u: &BigUint) -> Result<BigRational> {
    let SupportForm::Finite { max } = x.support_form() else {
        return Err(Error::Precondition("exact multiples need a finite-support point".into()));
    };
    let mut acc = BigRational::zero();
    for n in 1..=max {
        let c = x.digit(n)?;
        if c.is_zero() {
            continue;
        }
        let a = x.seq().term(n);
        let rem = (u * c) % &a;
        acc += big_ratio(&rem, &a);
    }
    Ok(crate::exact::frac(&acc))
}

/// Display helper: an enclosure's midpoint as a float, labelled approximate
/// wherever it is printed.
pub fn approx_mid(b: &BoundInterval) -> f64 {
    let mid = (&b.lo + &b.hi) / BigRational::from_integer(2.into());
    mid.numer().to_f64().unwrap_or(f64::NAN) / mid.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::AllNaturals;
    use crate::exact::ratio;
    use crate::sequences::RatioSpec;
    use proptest::prelude::*;

    fn l1() -> ArithSeq {
        ArithSeq::new(RatioSpec::linear(1).unwrap())
    }
    fn p2() -> ArithSeq {
        ArithSeq::new(RatioSpec::power(2).unwrap())
    }
    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&c| BigUint::from(c)).collect()
    }

    /// `sum c_n / a_n` straight from the definition.
    fn direct_value(x: &CirclePoint, upto: u64) -> BigRational {
        let mut s = BigRational::zero();
        for n in 1..=upto {
            s += big_ratio(&x.digit(n).unwrap(), &x.seq().term(n));
        }
        s
    }

    #[test]
    fn rational_examples() {
        let x = digits_from_rational(&ratio(1, 2), &l1(), 10).unwrap();
        assert_eq!(x.support_form(), SupportForm::Finite { max: 1 });
        assert_eq!(x.digit(1).unwrap(), BigUint::one());
        let x = digits_from_rational(&ratio(5, 24), &l1(), 10).unwrap();
        let digits: Vec<u64> = (1..=4).map(|n| x.digit(n).unwrap().to_u64().unwrap()).collect();
        assert_eq!(digits, vec![0, 1, 1, 0]);
        assert_eq!(x.support(10, false).unwrap().finite_members().unwrap(), vec![2, 3]);
        let z = digits_from_rational(&ratio(0, 1), &p2(), 5).unwrap();
        assert_eq!(z.support_form(), SupportForm::Finite { max: 0 });
        assert!(z.support(3, false).unwrap().finite_members().unwrap().is_empty());
        assert!(digits_from_rational(&ratio(1, 1), &l1(), 5).is_err());
    }

    #[test]
    fn non_canonical_rules_rejected() {
        let l1 = l1();
        let all = NatSet::rule(AllNaturals);
        assert!(matches!(
            CirclePoint::new(&l1, DigitRule::MaxOn(all.clone())),
            Err(Error::NonCanonical(_))
        ));
        let c2 = ArithSeq::new(RatioSpec::constant(2).unwrap());
        assert!(CirclePoint::new(&c2, DigitRule::OnesOn(all.clone())).is_err());
        assert!(CirclePoint::new(&c2, DigitRule::Periodic(big(&[1]))).is_err());
        assert!(CirclePoint::new(&c2, DigitRule::Periodic(big(&[1, 0]))).is_ok());
        assert!(CirclePoint::new(&p2(), DigitRule::OnesOn(all.clone())).is_ok());
        assert!(CirclePoint::attested(&c2, DigitRule::OnesOn(all)).unwrap().is_attested());
        assert!(matches!(
            CirclePoint::new(&l1, DigitRule::Finite(big(&[2]))),
            Err(Error::DigitOutOfRange { .. })
        ));
    }

    #[test]
    fn frac_bound_examples() {
        let x = digits_from_rational(&ratio(5, 24), &l1(), 10).unwrap();
        let j = frac_bound(&x, 2, 1).unwrap();
        assert_eq!((j.lo().clone(), j.hi().clone()), (ratio(5, 12), ratio(6, 12)));
        assert_eq!(frac_enclosure(&x, 2, 1).unwrap(), BoundInterval::point(ratio(5, 12)).unwrap());
        let z = CirclePoint::zero(&p2());
        let j = frac_bound(&z, 3, 2).unwrap();
        assert_eq!(j.hi().clone(), ratio(1, 8 * 16 * 32));
        assert_eq!(j.lo().clone(), ratio(0, 1));
    }

    #[test]
    fn norm_examples() {
        let p = BoundInterval::point(ratio(5, 12)).unwrap();
        assert_eq!(norm_bound(&p), p);
        let q = BoundInterval::point(ratio(3, 4)).unwrap();
        assert_eq!(norm_bound(&q), BoundInterval::point(ratio(1, 4)).unwrap());
        let w = BoundInterval::new(ratio(2, 5), ratio(3, 5)).unwrap();
        assert_eq!(norm_bound(&w), BoundInterval::new(ratio(2, 5), ratio(1, 2)).unwrap());
    }

    #[test]
    fn derived_examples() {
        let l1 = l1();
        let x = digits_from_rational(&ratio(1, 24), &l1, 10).unwrap();
        let d = derived_frac_bound(&x, 5, 0, DEFAULT_DEPTH_CAP).unwrap();
        assert!(d.decided);
        assert_eq!(d.interval, BoundInterval::point(ratio(1, 2)).unwrap());
        let x = digits_from_rational(&ratio(5, 24), &l1, 10).unwrap();
        let d = derived_frac_bound(&x, 2, 0, DEFAULT_DEPTH_CAP).unwrap();
        assert_eq!(d.interval, BoundInterval::point(ratio(5, 12)).unwrap());
        // support ⊆ [1, 3] so every i >= n_3 = 7 gives an integer.
        for i in 7..200 {
            let d = derived_frac_bound(&x, i, 0, DEFAULT_DEPTH_CAP).unwrap();
            assert_eq!(d.interval, BoundInterval::point(ratio(0, 1)).unwrap());
        }
    }

    #[test]
    fn undecided_is_flagged() {
        // prefix point: nothing is known past the declared digits
        let x = digits_from_rational(&ratio(1, 7), &p2(), 2).unwrap();
        assert_eq!(x.known_digits(), Some(2));
        let far = x.seq().derived().boundary(5).unwrap();
        let d = derived_frac_bound(&x, far, 4, 8).unwrap();
        assert!(!d.decided);
        assert_eq!(d.interval, BoundInterval::unit());
        assert!(matches!(frac_bound(&x, 2, 3), Err(Error::UnknownDigit { .. })));
    }

    #[test]
    fn ones_everywhere_under_pow2_decides() {
        let x = CirclePoint::new(&p2(), DigitRule::OnesOn(NatSet::rule(AllNaturals))).unwrap();
        let mut undecided = 0;
        for i in 1..=2000u64 {
            if !derived_frac_bound(&x, i, 0, DEFAULT_DEPTH_CAP).unwrap().decided {
                undecided += 1;
            }
        }
        assert_eq!(undecided, 0);
    }

    #[test]
    fn multiples_of_finite_points() {
        let l1 = l1();
        let x = digits_from_rational(&ratio(5, 24), &l1, 10).unwrap();
        assert_eq!(frac_of_multiple(&x, &BigUint::from(7u32)).unwrap(), ratio(11, 24));
        assert_eq!(x.exact_value().unwrap(), ratio(5, 24));
    }

    fn spec_strategy() -> impl Strategy<Value = RatioSpec> {
        prop_oneof![
            Just(RatioSpec::linear(1).unwrap()),
            Just(RatioSpec::power(2).unwrap()),
            Just(RatioSpec::constant(3).unwrap()),
            Just(RatioSpec::blocks()),
        ]
    }

    fn finite_point() -> impl Strategy<Value = (RatioSpec, Vec<u64>)> {
        (spec_strategy(), prop::collection::vec(0u64..1000, 0..10))
    }

    fn make_point(spec: RatioSpec, raw: Vec<u64>) -> CirclePoint {
        let seq = ArithSeq::new(spec);
        let digits = raw
            .iter()
            .enumerate()
            .map(|(i, &c)| BigUint::from(c) % seq.ratio(i as u64 + 1))
            .collect();
        CirclePoint::new(&seq, DigitRule::Finite(digits)).unwrap()
    }

    proptest! {
        #[test]
        fn greedy_expansion_reconstructs(p in 0u64..10_000, q in 1u64..10_000, spec in spec_strategy()) {
            let x = ratio(p % q, q);
            let seq = ArithSeq::new(spec);
            let pt = digits_from_rational(&x, &seq, 40).unwrap();
            match pt.support_form() {
                SupportForm::Finite { max } => prop_assert_eq!(direct_value(&pt, max.max(1)), x),
                _ => {
                    // remainder after 40 digits is a fraction of 1/a_40
                    let partial = direct_value(&pt, 40);
                    let gap = &x - &partial;
                    prop_assert!(!gap.is_negative());
                    prop_assert!(gap < big_ratio(&BigUint::one(), &seq.term(40)));
                    // never a run of maximal digits to the end of the prefix
                    let tail_max = (31..=40).all(|n| pt.digit(n).unwrap() + 1u32 == seq.ratio(n));
                    prop_assert!(!tail_max);
                }
            }
        }

        #[test]
        fn widths_and_nesting((spec, raw) in finite_point(), n in 1u64..12, t in 0u64..6) {
            let x = make_point(spec, raw);
            let j0 = frac_bound(&x, n, t).unwrap();
            let j1 = frac_bound(&x, n, t + 1).unwrap();
            let p: BigUint = (n..=n + t).map(|j| x.seq().ratio(j)).product();
            prop_assert_eq!(j0.width(), big_ratio(&BigUint::one(), &p));
            prop_assert_eq!(j0.width() / j1.width(),
                BigRational::from_integer(BigInt::from(x.seq().ratio(n + t + 1))));
            prop_assert!(j1.subset_of(&j0));
            // the exact value sits inside every window
            let v = x.exact_value().unwrap();
            let a = BigRational::from_integer(BigInt::from(x.seq().term(n - 1)));
            let exact = crate::exact::frac(&(v * a));
            prop_assert!(j0.contains(&exact));
            prop_assert!(exact < *j0.hi());
            prop_assert_eq!(frac_enclosure(&x, n, t).unwrap(), BoundInterval::point(exact).unwrap());
        }

        #[test]
        fn norm_scaling_and_translation((spec, raw) in finite_point(), i in 1u64..400, z in -5i64..5) {
            let x = make_point(spec, raw);
            let (k, r) = x.seq().derived().decompose(i).unwrap();
            let j = frac_enclosure(&x, k + 1, 4).unwrap();
            let nb = norm_bound(&j);
            let rr = BigRational::from_integer(BigInt::from(r));
            let d = derived_frac_bound(&x, i, 4, DEFAULT_DEPTH_CAP).unwrap();
            prop_assert!(d.decided);
            if &rr * nb.hi() < ratio(1, 2) {
                let scaled = BoundInterval::new(&rr * nb.lo(), &rr * nb.hi()).unwrap();
                prop_assert_eq!(norm_bound(&d.interval), scaled);
            }
            let shift = BigRational::from_integer(BigInt::from(z));
            let moved = reduce_mod_one(&(&rr * j.lo() + &shift), &(&rr * j.hi() + &shift)).unwrap();
            prop_assert_eq!(&moved, &d.interval);
        }

        #[test]
        fn refinement_is_monotone(i in 1u64..3000, t in 0u64..4) {
            let x = CirclePoint::new(&p2(), DigitRule::OnesOn(NatSet::rule(AllNaturals))).unwrap();
            let (k, r) = x.seq().derived().decompose(i).unwrap();
            let e = BigUint::from(1u32);
            let q = BigUint::from(8u32);
            let shallow = BlockEval::new(&x, k, t, t).classify_norm(r, &e, &q).unwrap();
            let deep = BlockEval::new(&x, k, t + 3, t + 3).classify_norm(r, &e, &q).unwrap();
            if shallow != RowClass::Undecided {
                prop_assert_eq!(shallow, deep);
            }
        }
    }
}
