//! Dimensional thresholds for sphere-distance configurations.
//!
//! Every threshold here has the shape `(a - sqrt(r)) / b` with integer
//! `a`, `r`, `b` depending on `d`, so besides the double-precision value an
//! exact path is available: the radicand is formed in integers, the square
//! root is taken as `isqrt(r * 10^(2P))`, and the decimal result is rounded
//! once by the float parser.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{out_of_range, Result};

/// Decimal digits carried by the exact path.
pub const EXACT_DIGITS: u32 = 40;

/// Integer data `(a, r, b)` of a closed form `(a - sqrt(r)) / b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub a: u128,
    pub r: u128,
    pub b: u128,
}

impl ClosedForm {
    pub fn eval(&self) -> f64 {
        (self.a as f64 - (self.r as f64).sqrt()) / self.b as f64
    }

    pub fn eval_exact(&self) -> f64 {
        exact_value(self, EXACT_DIGITS)
    }
}

fn check_d(d: u64, min: u64) -> Result<()> {
    if d < min {
        return Err(out_of_range("d", format!("{d} is below the minimum {min}")));
    }
    if d > 1_000_000_000 {
        return Err(out_of_range("d", format!("{d} exceeds 10^9")));
    }
    Ok(())
}

/// `(29d + 2 - sqrt(81d² + 116d - 156)) / 20`.
pub fn s_d_form(d: u64) -> Result<ClosedForm> {
    check_d(d, 3)?;
    let d = d as u128;
    Ok(ClosedForm {
        a: 29 * d + 2,
        r: 81 * d * d + 116 * d - 156,
        b: 20,
    })
}

/// `(17d + 2 - sqrt(25d² + 68d - 92)) / 12`.
pub fn four_cycle_form(d: u64) -> Result<ClosedForm> {
    check_d(d, 3)?;
    let d = d as u128;
    Ok(ClosedForm {
        a: 17 * d + 2,
        r: 25 * d * d + 68 * d - 92,
        b: 12,
    })
}

/// Dimension threshold for VC-dimension at least 3 of sphere classifiers.
pub fn s_d(d: u64) -> Result<f64> {
    Ok(s_d_form(d)?.eval())
}

pub fn s_d_exact(d: u64) -> Result<f64> {
    Ok(s_d_form(d)?.eval_exact())
}

/// Dimension threshold for t-distance 4-cycles.
pub fn four_cycle_threshold(d: u64) -> Result<f64> {
    Ok(four_cycle_form(d)?.eval())
}

pub fn four_cycle_threshold_exact(d: u64) -> Result<f64> {
    Ok(four_cycle_form(d)?.eval_exact())
}

/// `max((d+1)/2, d-1)`, the threshold for VC-dimension at least 2.
pub fn chain_threshold(d: u64) -> Result<f64> {
    check_d(d, 2)?;
    let d = d as f64;
    Ok(((d + 1.0) / 2.0).max(d - 1.0))
}

/// The classical `(d+1)/2` exponent.
pub fn falconer_classical(d: u64) -> Result<f64> {
    check_d(d, 2)?;
    Ok((d as f64 + 1.0) / 2.0)
}

fn pow10(n: u32) -> BigUint {
    BigUint::from(10u32).pow(n)
}

/// `(a - sqrt(r)) / b` truncated to `digits` decimals, then rounded to f64.
fn exact_value(f: &ClosedForm, digits: u32) -> f64 {
    let scale = pow10(digits);
    let root = (BigUint::from(f.r) * &scale * &scale).sqrt();
    let numer = BigUint::from(f.a) * &scale;
    // the forms used here are positive; guard anyway
    let (numer, negative) = if numer >= root {
        (numer - root, false)
    } else {
        (root - numer, true)
    };
    // keep a few guard digits through the division by b
    let guard = pow10(6);
    let q = numer * &guard / BigUint::from(f.b);
    let text = q.to_str_radix(10);
    let frac_digits = (digits + 6) as usize;
    let padded = if text.len() <= frac_digits {
        format!("{}{}", "0".repeat(frac_digits + 1 - text.len()), text)
    } else {
        text
    };
    let split = padded.len() - frac_digits;
    let literal = format!("{}.{}", &padded[..split], &padded[split..]);
    let v: f64 = literal.parse().expect("decimal literal");
    if negative && !v.is_zero() {
        -v
    } else {
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub holds: bool,
    /// Positive when the inequality holds; the distance to failure.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub d: u64,
    pub s_d: f64,
    pub four_cycle: f64,
    pub chain: f64,
    pub falconer_classical: f64,
    pub checks: Vec<ThresholdCheck>,
}

impl ThresholdReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn check(name: &str, lhs: f64, rhs: f64) -> ThresholdCheck {
    // lhs < rhs
    ThresholdCheck {
        name: name.to_string(),
        holds: lhs < rhs,
        slack: rhs - lhs,
    }
}

/// Thresholds and comparison checks at one dimension `d >= 3`.
pub fn threshold_report(d: u64) -> Result<ThresholdReport> {
    let s = s_d(d)?;
    let fc = four_cycle_threshold(d)?;
    let df = d as f64;
    let mut checks = vec![check("s_d < d - 1/20", s, df - 1.0 / 20.0)];
    if d >= 4 {
        checks.push(check("s_d < d - 1/10", s, df - 0.1));
    }
    checks.push(check("d - s_d < 2/9", df - s, 2.0 / 9.0));
    checks.push(check("s_d > d - 1", df - 1.0, s));
    checks.push(check("four_cycle < s_d", fc, s));
    Ok(ThresholdReport {
        d,
        s_d: s,
        four_cycle: fc,
        chain: chain_threshold(d)?,
        falconer_classical: falconer_classical(d)?,
        checks,
    })
}

/// Reports for `d = 3..=d_max`.
pub fn verify_remarks(d_max: u64) -> Result<Vec<ThresholdReport>> {
    check_d(d_max, 3)?;
    (3..=d_max).map(threshold_report).collect()
}

pub const REPORT_HEADER: [&str; 7] = ["d", "s_d", "four_cycle", "chain", "falconer_classical", "all_hold", "min_slack"];

pub fn write_reports_csv<W: std::io::Write>(writer: W, reports: &[ThresholdReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        let min_slack = r.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        w.write_record([
            r.d.to_string(),
            r.s_d.to_string(),
            r.four_cycle.to_string(),
            r.chain.to_string(),
            r.falconer_classical.to_string(),
            r.all_hold().to_string(),
            min_slack.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
