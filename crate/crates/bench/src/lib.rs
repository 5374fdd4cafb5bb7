//! Fixtures shared by the criterion benches.

use circlab::density::AllNaturals;
use circlab::{ArithSeq, CirclePoint, DigitRule, NatSet, RatioSpec};

/// `b_n = 2^n` with `c_n = 1` everywhere, the heaviest scan fixture.
pub fn pow2_all_ones() -> CirclePoint {
    let seq = ArithSeq::new(RatioSpec::power(2).expect("valid rule"));
    CirclePoint::new(&seq, DigitRule::OnesOn(NatSet::rule(AllNaturals))).expect("canonical")
}

/// `b_n = n + 1` and a point with `c_n = 1` on a few indices.
pub fn factorial_sparse() -> CirclePoint {
    let seq = ArithSeq::new(RatioSpec::linear(1).expect("valid rule"));
    let set = NatSet::finite([5, 26, 55]).expect("positive");
    CirclePoint::new(&seq, DigitRule::OnesOn(set)).expect("canonical")
}
