//! Arithmetic sequences `a_0 = 1 | a_1 | a_2 | ...` given by their ratio rule,
//! and the derived sequence `(d_i)` enumerating every `r * a_k` with
//! `1 <= r < b_{k+1}` in increasing order.
//!
//! Index origins: ratios `b_n` and derived terms `d_i` start at 1, while
//! `a_k` and the block boundaries `n_k` start at 0 with `n_0 = 1`. The block
//! `k` of the derived sequence is `[n_k, n_{k+1} - 1]` and holds
//! `d_{n_k + r - 1} = r * a_k`.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// How the ratios `b_n = a_n / a_{n-1}` are produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatioKind {
    /// `b_n = c`.
    Constant(u64),
    /// `b_n = n + offset`; `linear:1` gives `a_k = (k + 1)!`.
    Linear(u64),
    /// `b_n = base^n`.
    Power(u64),
    /// `b_1..b_m` listed explicitly, then `b_n = tail(n)` for `n > m`
    /// (the tail rule is evaluated at the absolute index).
    Explicit { list: Vec<BigUint>, tail: Box<RatioSpec> },
    /// Ratios read off the cube-gap block set `K = U [g_j, h_j]` with
    /// `h_j - g_j = j^3` and `g_{j+1} - h_j = j`: `b = 2` inside blocks and
    /// `b = j + 1` at the join after block `j`.
    Blocks,
}

/// A validated ratio rule. Every rule yields `b_n >= 2` for all `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioSpec {
    kind: RatioKind,
}

impl RatioSpec {
    pub fn constant(c: u64) -> Result<Self> {
        if c < 2 {
            return Err(Error::InvalidRatio(format!("const:{c} gives b_n < 2")));
        }
        Ok(Self { kind: RatioKind::Constant(c) })
    }

    pub fn linear(offset: u64) -> Result<Self> {
        if offset < 1 {
            return Err(Error::InvalidRatio(format!("linear:{offset} gives b_1 < 2")));
        }
        Ok(Self { kind: RatioKind::Linear(offset) })
    }

    pub fn power(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidRatio(format!("pow:{base} gives b_1 < 2")));
        }
        Ok(Self { kind: RatioKind::Power(base) })
    }

    pub fn explicit(list: Vec<BigUint>, tail: RatioSpec) -> Result<Self> {
        let two = BigUint::from(2u32);
        if let Some(pos) = list.iter().position(|b| *b < two) {
            return Err(Error::InvalidRatio(format!(
                "explicit ratio b_{} = {} is below 2",
                pos + 1,
                list[pos]
            )));
        }
        Ok(Self { kind: RatioKind::Explicit { list, tail: Box::new(tail) } })
    }

    pub fn blocks() -> Self {
        Self { kind: RatioKind::Blocks }
    }

    pub fn kind(&self) -> &RatioKind {
        &self.kind
    }

    /// `b_n` for `n >= 1`.
    pub fn term(&self, n: u64) -> BigUint {
        assert!(n >= 1, "ratio index starts at 1");
        match &self.kind {
            RatioKind::Constant(c) => BigUint::from(*c),
            RatioKind::Linear(offset) => BigUint::from(n) + BigUint::from(*offset),
            RatioKind::Power(base) => num_traits::pow(BigUint::from(*base), n as usize),
            RatioKind::Explicit { list, tail } => match list.get((n - 1) as usize) {
                Some(b) => b.clone(),
                None => tail.term(n),
            },
            RatioKind::Blocks => BigUint::from(blocks_ratio(n)),
        }
    }

    /// `Some(c)` when `b_n = c` for every large `n`; `None` when the ratios
    /// take a value above their minimum infinitely often.
    pub fn eventual_constant(&self) -> Option<u64> {
        match &self.kind {
            RatioKind::Constant(c) => Some(*c),
            RatioKind::Linear(_) | RatioKind::Power(_) | RatioKind::Blocks => None,
            RatioKind::Explicit { tail, .. } => tail.eventual_constant(),
        }
    }
}

/// Join positions of the cube-gap construction: the ratio at index
/// `sum_{i<=j} (i^3 + 1)` is `j + 1`; every other ratio is 2.
fn blocks_ratio(n: u64) -> u64 {
    let mut pos: u64 = 0;
    let mut j: u64 = 1;
    loop {
        pos += j * j * j + 1;
        if n == pos {
            return j + 1;
        }
        if n < pos {
            return 2;
        }
        j += 1;
    }
}

impl fmt::Display for RatioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RatioKind::Constant(c) => write!(f, "const:{c}"),
            RatioKind::Linear(o) => write!(f, "linear:{o}"),
            RatioKind::Power(b) => write!(f, "pow:{b}"),
            RatioKind::Explicit { list, tail } => {
                write!(f, "list:[")?;
                for (i, b) in list.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "];tail={tail}")
            }
            RatioKind::Blocks => write!(f, "dlictrex"),
        }
    }
}

#[derive(Debug, Default)]
struct Memo {
    /// `ratios[n - 1] = b_n`
    ratios: RwLock<Vec<BigUint>>,
    /// `terms[k] = a_k`
    terms: RwLock<Vec<BigUint>>,
    /// `bounds[k] = n_k`, kept while it fits in a `u64`
    bounds: RwLock<Vec<u64>>,
}

/// The arithmetic sequence generated by a ratio rule. Cloning is cheap and
/// clones share the memo tables.
#[derive(Debug, Clone)]
pub struct ArithSeq {
    spec: Arc<RatioSpec>,
    memo: Arc<Memo>,
}

impl ArithSeq {
    pub fn new(spec: RatioSpec) -> Self {
        Self { spec: Arc::new(spec), memo: Arc::new(Memo::default()) }
    }

    pub fn spec(&self) -> &RatioSpec {
        &self.spec
    }

    pub fn derived(&self) -> DerivedSeq {
        DerivedSeq { base: self.clone() }
    }

    fn fill_ratios(&self, n: u64) {
        if self.memo.ratios.read().unwrap().len() as u64 >= n {
            return;
        }
        let mut ratios = self.memo.ratios.write().unwrap();
        while (ratios.len() as u64) < n {
            let next = ratios.len() as u64 + 1;
            ratios.push(self.spec.term(next));
        }
    }

    /// `b_n`, `n >= 1`.
    pub fn ratio(&self, n: u64) -> BigUint {
        assert!(n >= 1, "ratio index starts at 1");
        self.fill_ratios(n);
        self.memo.ratios.read().unwrap()[(n - 1) as usize].clone()
    }

    /// `b_n` when it fits in a `u64`.
    pub fn ratio_u64(&self, n: u64) -> Option<u64> {
        assert!(n >= 1, "ratio index starts at 1");
        self.fill_ratios(n);
        self.memo.ratios.read().unwrap()[(n - 1) as usize].to_u64()
    }

    /// `b_from, ..., b_to` (inclusive).
    pub fn ratios(&self, from: u64, to: u64) -> Vec<BigUint> {
        assert!(from >= 1, "ratio index starts at 1");
        if to < from {
            return Vec::new();
        }
        self.fill_ratios(to);
        self.memo.ratios.read().unwrap()[(from - 1) as usize..to as usize].to_vec()
    }

    /// `a_k = b_1 * ... * b_k`, exact. Memoized; `a_k` has on the order of
    /// `k^2` bits under power rules, so callers that only need ratios should
    /// use [`ArithSeq::ratio`].
    pub fn term(&self, k: u64) -> BigUint {
        {
            let terms = self.memo.terms.read().unwrap();
            if let Some(a) = terms.get(k as usize) {
                return a.clone();
            }
        }
        self.fill_ratios(k.max(1));
        let ratios = self.memo.ratios.read().unwrap();
        let mut terms = self.memo.terms.write().unwrap();
        if terms.is_empty() {
            terms.push(BigUint::one());
        }
        while (terms.len() as u64) <= k {
            let j = terms.len();
            let next = &terms[j - 1] * &ratios[j - 1];
            terms.push(next);
        }
        terms[k as usize].clone()
    }

    fn fill_bounds_until<F: Fn(&[u64]) -> bool>(&self, done: F) -> Result<()> {
        if done(&self.memo.bounds.read().unwrap()) {
            return Ok(());
        }
        let mut bounds = self.memo.bounds.write().unwrap();
        if bounds.is_empty() {
            bounds.push(1);
        }
        while !done(&bounds) {
            let k = bounds.len() as u64;
            let last = *bounds.last().unwrap();
            let step = self
                .ratio_u64(k)
                .and_then(|b| last.checked_add(b - 1))
                .ok_or_else(|| Error::Overflow(format!("n_{k} does not fit in 64 bits")))?;
            bounds.push(step);
        }
        Ok(())
    }

    /// `n_k = 1 + sum_{j<=k} (b_j - 1)` as a `u64`, or an overflow error.
    pub fn boundary_u64(&self, k: u64) -> Result<u64> {
        if let RatioKind::Constant(c) = self.spec.kind() {
            return k
                .checked_mul(c - 1)
                .and_then(|v| v.checked_add(1))
                .ok_or_else(|| Error::Overflow(format!("n_{k} does not fit in 64 bits")));
        }
        self.fill_bounds_until(|b| b.len() as u64 > k)?;
        Ok(self.memo.bounds.read().unwrap()[k as usize])
    }

    /// `n_k`, exact at any size.
    pub fn boundary(&self, k: u64) -> BigUint {
        if let Ok(v) = self.boundary_u64(k) {
            return BigUint::from(v);
        }
        // Beyond 64 bits: continue the sum from the last representable entry.
        let (start, mut acc) = {
            let bounds = self.memo.bounds.read().unwrap();
            let last = bounds.len() as u64 - 1;
            (last, BigUint::from(bounds[last as usize]))
        };
        for j in start + 1..=k {
            acc += self.ratio(j) - 1u32;
        }
        acc
    }

    /// Largest `k` with `n_k <= i`, for `i >= 1`.
    fn block_of(&self, i: u64) -> Result<u64> {
        assert!(i >= 1, "derived index starts at 1");
        if let RatioKind::Constant(c) = self.spec.kind() {
            return Ok((i - 1) / (c - 1));
        }
        self.fill_bounds_until(|b| b.last().is_some_and(|&last| last > i))?;
        let bounds = self.memo.bounds.read().unwrap();
        let pos = bounds.partition_point(|&n| n <= i);
        Ok(pos as u64 - 1)
    }
}

/// The increasing enumeration of `{ r * a_k : k >= 0, 1 <= r < b_{k+1} }`.
#[derive(Debug, Clone)]
pub struct DerivedSeq {
    base: ArithSeq,
}

impl DerivedSeq {
    pub fn base(&self) -> &ArithSeq {
        &self.base
    }

    /// `n_k` as a `u64`.
    pub fn boundary(&self, k: u64) -> Result<u64> {
        self.base.boundary_u64(k)
    }

    /// The unique `(k, r)` with `n_k <= i < n_{k+1}` and `r = i - n_k + 1`,
    /// so that `d_i = r * a_k`.
    pub fn decompose(&self, i: u64) -> Result<(u64, u64)> {
        if i == 0 {
            return Err(Error::Domain("derived index starts at 1".into()));
        }
        let k = self.base.block_of(i)?;
        let r = i - self.base.boundary_u64(k)? + 1;
        Ok((k, r))
    }

    /// `d_i`, exact.
    pub fn term(&self, i: u64) -> Result<BigUint> {
        let (k, r) = self.decompose(i)?;
        Ok(self.base.term(k) * r)
    }

    /// Number of derived indices in block `k`, i.e. `b_{k+1} - 1`.
    pub fn block_len(&self, k: u64) -> BigUint {
        self.base.ratio(k + 1) - 1u32
    }
}

/// `b_n` straight from the rule.
pub fn ratio_term(spec: &RatioSpec, n: u64) -> BigUint {
    spec.term(n)
}

/// `a_k`, memoized in `seq`.
pub fn arith_term(seq: &ArithSeq, k: u64) -> BigUint {
    seq.term(k)
}

/// `n_k`.
pub fn boundary(seq: &DerivedSeq, k: u64) -> BigUint {
    seq.base.boundary(k)
}

/// `d_i`.
pub fn derived_term(seq: &DerivedSeq, i: u64) -> Result<BigUint> {
    seq.term(i)
}

/// `(k, r)` with `d_i = r * a_k`.
pub fn decompose_index(seq: &DerivedSeq, i: u64) -> Result<(u64, u64)> {
    seq.decompose(i)
}

/// One block `[n_k, n_{k+1} - 1]` of derived indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedBlock {
    pub k: u64,
    pub start: u64,
    pub len: u64,
}

impl DerivedSeq {
    /// Blocks meeting `[1, horizon]`, each clipped to the horizon.
    pub fn blocks_upto(&self, horizon: u64) -> Result<Vec<DerivedBlock>> {
        let mut out = Vec::new();
        if horizon == 0 {
            return Ok(out);
        }
        let last = self.base.block_of(horizon)?;
        for k in 0..=last {
            let start = self.base.boundary_u64(k)?;
            let end = if k == last { horizon } else { self.base.boundary_u64(k + 1)? - 1 };
            out.push(DerivedBlock { k, start, len: end - start + 1 });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(spec: RatioSpec) -> DerivedSeq {
        ArithSeq::new(spec).derived()
    }

    /// Sorted multiples `{ r a_k : k <= kmax, 1 <= r < b_{k+1} }`, built
    /// without the boundary machinery.
    fn brute_derived(spec: &RatioSpec, kmax: u64) -> Vec<BigUint> {
        let mut a = BigUint::one();
        let mut all = Vec::new();
        for k in 0..=kmax {
            if k > 0 {
                a *= spec.term(k);
            }
            let b_next = spec.term(k + 1);
            let mut r = BigUint::one();
            while r < b_next {
                all.push(&r * &a);
                r += 1u32;
            }
        }
        all.sort();
        all
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(RatioSpec::constant(2).unwrap().term(7), BigUint::from(2u32));
        assert_eq!(RatioSpec::power(2).unwrap().term(4), BigUint::from(16u32));
        assert_eq!(RatioSpec::linear(1).unwrap().term(3), BigUint::from(4u32));
    }

    #[test]
    fn invalid_rules_rejected() {
        assert!(RatioSpec::constant(1).is_err());
        assert!(RatioSpec::linear(0).is_err());
        assert!(RatioSpec::power(1).is_err());
        let tail = RatioSpec::constant(2).unwrap();
        assert!(RatioSpec::explicit(vec![BigUint::from(3u32), BigUint::one()], tail).is_err());
    }

    #[test]
    fn arith_examples() {
        let c2 = ArithSeq::new(RatioSpec::constant(2).unwrap());
        assert_eq!(c2.term(3), BigUint::from(8u32));
        let p2 = ArithSeq::new(RatioSpec::power(2).unwrap());
        assert_eq!(p2.term(4), BigUint::from(1024u32));
        let l1 = ArithSeq::new(RatioSpec::linear(1).unwrap());
        assert_eq!(l1.term(3), BigUint::from(24u32));
        assert_eq!(l1.term(0), BigUint::one());
    }

    #[test]
    fn boundary_examples() {
        let l1 = seq(RatioSpec::linear(1).unwrap());
        assert_eq!(l1.boundary(3).unwrap(), 7);
        assert_eq!(l1.boundary(0).unwrap(), 1);
        let p2 = seq(RatioSpec::power(2).unwrap());
        assert_eq!(p2.boundary(2).unwrap(), 5);
        assert_eq!(p2.boundary(3).unwrap(), 12);
        let c3 = seq(RatioSpec::constant(3).unwrap());
        assert_eq!(c3.boundary(4).unwrap(), 9);
    }

    #[test]
    fn derived_examples() {
        let l1 = seq(RatioSpec::linear(1).unwrap());
        let listed: Vec<u64> =
            (1..=7).map(|i| l1.term(i).unwrap().to_u64().unwrap()).collect();
        assert_eq!(listed, vec![1, 2, 4, 6, 12, 18, 24]);
        assert_eq!(l1.decompose(5).unwrap(), (2, 2));
        assert_eq!(l1.decompose(1).unwrap(), (0, 1));

        let p2 = seq(RatioSpec::power(2).unwrap());
        assert_eq!(p2.term(3).unwrap(), BigUint::from(4u32));
        assert_eq!(p2.decompose(12).unwrap(), (3, 1));
        assert_eq!(p2.term(12).unwrap(), BigUint::from(64u32));
        assert_eq!(p2.term(5).unwrap(), BigUint::from(8u32));
        assert!(p2.decompose(0).is_err());
    }

    #[test]
    fn brute_force_matches_for_small_specs() {
        let specs = [
            RatioSpec::linear(1).unwrap(),
            RatioSpec::power(2).unwrap(),
            RatioSpec::constant(3).unwrap(),
            RatioSpec::linear(3).unwrap(),
            RatioSpec::blocks(),
        ];
        for spec in specs {
            let d = seq(spec.clone());
            let brute = brute_derived(&spec, 4);
            let n5 = d.boundary(5).unwrap();
            assert_eq!(brute.len() as u64, n5 - 1, "{spec}");
            for (idx, v) in brute.iter().enumerate() {
                assert_eq!(&d.term(idx as u64 + 1).unwrap(), v, "{spec} at {}", idx + 1);
            }
        }
    }

    #[test]
    fn block_terms_hit_arith_terms() {
        for spec in [
            RatioSpec::linear(1).unwrap(),
            RatioSpec::power(2).unwrap(),
            RatioSpec::constant(2).unwrap(),
            RatioSpec::blocks(),
        ] {
            let d = seq(spec.clone());
            for k in 0..=50u64 {
                let Ok(nk) = d.boundary(k) else { break };
                assert_eq!(d.term(nk).unwrap(), d.base().term(k), "{spec} k={k}");
            }
        }
    }

    #[test]
    fn derived_strictly_increasing() {
        for spec in [
            RatioSpec::linear(1).unwrap(),
            RatioSpec::power(2).unwrap(),
            RatioSpec::constant(2).unwrap(),
            RatioSpec::blocks(),
        ] {
            let d = seq(spec);
            let mut prev = d.term(1).unwrap();
            for i in 2..=10_000u64 {
                let cur = d.term(i).unwrap();
                assert!(prev < cur);
                prev = cur;
            }
        }
    }

    #[test]
    fn big_boundary_continues_past_u64() {
        let a = ArithSeq::new(RatioSpec::power(2).unwrap());
        assert!(a.boundary_u64(70).is_err());
        // n_k = 2^{k+1} - 1 - k for b_n = 2^n.
        let expect = (BigUint::one() << 71usize) - 1u32 - 70u32;
        assert_eq!(a.boundary(70), expect);
    }

    #[test]
    fn blocks_ratios_follow_joins() {
        let s = RatioSpec::blocks();
        // block 1 has one step, join after it at index 2 has gap 1.
        assert_eq!(s.term(1), BigUint::from(2u32));
        assert_eq!(s.term(2), BigUint::from(2u32));
        // second join at 2 + 9 = 11 has gap 2.
        assert_eq!(s.term(11), BigUint::from(3u32));
        assert_eq!(s.term(10), BigUint::from(2u32));
        assert_eq!(s.term(11 + 28), BigUint::from(4u32));
    }

    #[test]
    fn display_round_trip_form() {
        let tail = RatioSpec::constant(2).unwrap();
        let e = RatioSpec::explicit(vec![BigUint::from(3u32), BigUint::from(5u32)], tail).unwrap();
        assert_eq!(e.to_string(), "list:[3,5];tail=const:2");
        assert_eq!(e.term(3), BigUint::from(2u32));
        assert_eq!(RatioSpec::blocks().to_string(), "dlictrex");
    }
}
