//! Text forms for ratio specs, set expressions and digit rules, shared by
//! the command line and config files. Every `Display` form in the crate
//! parses back to an equal value.

use std::path::Path;

use num_bigint::BigUint;

use crate::circle::{digits_from_rational, CirclePoint, DigitRule, DEFAULT_RATIONAL_HORIZON};
use crate::density::{
    lift, set_algebra, translate, AllNaturals, CubeGapBlocks, NatSet, Residue, SetOp, Squares,
};
use crate::error::{Error, Result};
use crate::exact::parse_ratio;
use crate::sequences::{ArithSeq, RatioSpec};

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| perr(format!("expected a non-negative integer, got '{}'", s.trim())))
}

fn parse_big(s: &str) -> Result<BigUint> {
    s.trim().parse().map_err(|_| perr(format!("expected a non-negative integer, got '{}'", s.trim())))
}

/// Splits on commas that are not nested inside brackets.
fn split_top(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(perr(format!("unbalanced brackets in '{s}'")));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(perr(format!("unbalanced brackets in '{s}'")));
    }
    out.push(&s[start..]);
    Ok(out)
}

/// Contents of `open ... close` when `s` is exactly that.
fn bracketed(s: &str, open: char, close: char) -> Option<&str> {
    let s = s.trim();
    s.strip_prefix(open)?.strip_suffix(close)
}

fn int_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let inner = bracketed(s, '[', ']').ok_or_else(|| perr(format!("expected [..], got '{s}'")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(f).collect()
}

/// `const:c`, `linear:o`, `pow:b`, `list:[b1,..];tail=<spec>`,
/// `file:<path>` or `dlictrex`.
pub fn parse_ratio_spec(s: &str) -> Result<RatioSpec> {
    let s = s.trim();
    if s == "dlictrex" {
        return Ok(RatioSpec::blocks());
    }
    let (head, rest) = s.split_once(':').ok_or_else(|| perr(format!("unknown ratio spec '{s}'")))?;
    match head {
        "const" => RatioSpec::constant(parse_u64(rest)?),
        "linear" => RatioSpec::linear(parse_u64(rest)?),
        "pow" => RatioSpec::power(parse_u64(rest)?),
        "list" => {
            let (list, tail) =
                rest.split_once(";tail=").ok_or_else(|| perr("list spec needs ';tail=<spec>'"))?;
            RatioSpec::explicit(int_list(list, parse_big)?, parse_ratio_spec(tail)?)
        }
        "file" => ratio_spec_from_file(Path::new(rest)),
        _ => Err(perr(format!("unknown ratio spec '{s}'"))),
    }
}

/// One ratio per line, then a line `tail:<spec>`. Blank lines and `#`
/// comments are ignored.
pub fn ratio_spec_from_file(path: &Path) -> Result<RatioSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| perr(format!("cannot read {}: {e}", path.display())))?;
    parse_ratio_file(&text)
}

pub fn parse_ratio_file(text: &str) -> Result<RatioSpec> {
    let mut list = Vec::new();
    let mut tail = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if tail.is_some() {
            return Err(perr("nothing may follow the tail line"));
        }
        match line.strip_prefix("tail:") {
            Some(t) => tail = Some(parse_ratio_spec(t)?),
            None => list.push(parse_big(line)?),
        }
    }
    let tail = tail.ok_or_else(|| perr("ratio file needs a final 'tail:<spec>' line"))?;
    RatioSpec::explicit(list, tail)
}

/// Set expressions. `seq` is needed only by `lift(..)`. A trailing `@h`
/// declares that the set is known only on `[1, h]`.
pub fn parse_set(s: &str, seq: &ArithSeq) -> Result<NatSet> {
    let s = s.trim();
    if let Some((body, h)) = s.rsplit_once('@') {
        if !h.is_empty() && h.bytes().all(|b| b.is_ascii_digit()) && split_top(body, ',').is_ok() {
            return Ok(parse_set(body, seq)?.with_horizon(parse_u64(h)?));
        }
    }
    match s {
        "all" => return Ok(NatSet::rule(AllNaturals)),
        "evens" => return Ok(NatSet::rule(Residue { modulus: 2, residue: 0 })),
        "odds" => return Ok(NatSet::rule(Residue { modulus: 2, residue: 1 })),
        "squares" => return Ok(NatSet::rule(Squares)),
        "blocks:cube-gap" => return Ok(NatSet::rule(CubeGapBlocks)),
        "{}" | "fin:{}" | "empty" => return Ok(NatSet::empty()),
        _ => {}
    }
    if let Some(inner) = bracketed(s.strip_prefix("fin:").unwrap_or(s), '{', '}') {
        return NatSet::finite(inner.split(',').map(parse_u64).collect::<Result<Vec<_>>>()?);
    }
    let ivl = s.strip_prefix("ivl:").unwrap_or(s);
    if ivl.starts_with('[') {
        let mut pieces = Vec::new();
        for piece in split_top(ivl, '+')? {
            let inner = bracketed(piece, '[', ']').ok_or_else(|| perr(format!("bad interval '{piece}'")))?;
            let (a, b) = inner.split_once(',').ok_or_else(|| perr(format!("bad interval '{piece}'")))?;
            pieces.push((parse_u64(a)?, parse_u64(b)?));
        }
        return NatSet::intervals(pieces);
    }
    if let Some(rest) = s.strip_prefix("mod:") {
        let (m, r) = rest.split_once(':').ok_or_else(|| perr("expected mod:m:r"))?;
        let (modulus, residue) = (parse_u64(m)?, parse_u64(r)?);
        if modulus == 0 || residue >= modulus {
            return Err(perr(format!("bad residue class '{s}'")));
        }
        return Ok(NatSet::rule(Residue { modulus, residue }));
    }
    if let Some((name, args)) = s.split_once('(') {
        let args = args.strip_suffix(')').ok_or_else(|| perr(format!("missing ')' in '{s}'")))?;
        let parts = split_top(args, ',')?;
        let arity = |n: usize| {
            if parts.len() == n {
                Ok(())
            } else {
                Err(perr(format!("{name} takes {n} argument(s)")))
            }
        };
        return match name {
            "lift" => {
                arity(1)?;
                lift(&parse_set(parts[0], seq)?, &seq.derived())
            }
            "shift" => {
                arity(2)?;
                Ok(translate(&parse_set(parts[0], seq)?, parse_u64(parts[1])?))
            }
            "union" | "inter" | "diff" => {
                arity(2)?;
                let op = match name {
                    "union" => SetOp::Union,
                    "inter" => SetOp::Intersect,
                    _ => SetOp::Difference,
                };
                set_algebra(op, &parse_set(parts[0], seq)?, &parse_set(parts[1], seq)?)
            }
            _ => Err(perr(format!("unknown set function '{name}'"))),
        };
    }
    Err(perr(format!("unknown set expression '{s}'")))
}

/// Digit rules: `rat:p/q[@h]`, `finite:[..]`, `prefix:[..]`,
/// `periodic:[..]`, `ones-on:<set>`, `max-on:<set>`,
/// `floor-div:m=[n:m,..]` or `zero`.
pub fn parse_point(s: &str, seq: &ArithSeq) -> Result<CirclePoint> {
    let s = s.trim();
    if s == "zero" {
        return Ok(CirclePoint::zero(seq));
    }
    let (head, rest) = s.split_once(':').ok_or_else(|| perr(format!("unknown digit rule '{s}'")))?;
    let rule = match head {
        "rat" => {
            let (r, h) = match rest.split_once('@') {
                Some((r, h)) => (r, parse_u64(h)?),
                None => (rest, DEFAULT_RATIONAL_HORIZON),
            };
            return digits_from_rational(&parse_ratio(r)?, seq, h);
        }
        "finite" => DigitRule::Finite(int_list(rest, parse_big)?),
        "prefix" => DigitRule::Prefix(int_list(rest, parse_big)?),
        "periodic" => {
            let p = int_list(rest, parse_big)?;
            if p.is_empty() {
                return Err(perr("periodic pattern must be non-empty"));
            }
            DigitRule::Periodic(p)
        }
        "ones-on" => DigitRule::OnesOn(parse_set(rest, seq)?),
        "max-on" => DigitRule::MaxOn(parse_set(rest, seq)?),
        "floor-div" => {
            let body = rest.strip_prefix("m=").ok_or_else(|| perr("expected floor-div:m=[n:m,..]"))?;
            let mut v = int_list(body, |p| {
                let (n, m) = p.split_once(':').ok_or_else(|| perr(format!("expected n:m, got '{p}'")))?;
                let m = parse_big(m)?;
                if m == BigUint::from(0u32) {
                    return Err(perr("floor-div divisor must be positive"));
                }
                Ok((parse_u64(n)?, m))
            })?;
            v.sort_by_key(|(n, _)| *n);
            if v.windows(2).any(|w| w[0].0 == w[1].0) || v.first().is_some_and(|(n, _)| *n == 0) {
                return Err(perr("floor-div indices must be distinct and positive"));
            }
            DigitRule::FloorDiv(v)
        }
        _ => return Err(perr(format!("unknown digit rule '{s}'"))),
    };
    CirclePoint::new(seq, rule)
}

/// Comma separated positive integers, e.g. horizons.
pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(parse_u64).collect()
}
