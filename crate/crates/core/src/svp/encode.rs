//! Base-2M packing of coefficient vectors into Z_N with N = (2M)ⁿ.

use super::SvpError;

/// (2M)ⁿ, if it fits in a u64.
pub fn dcp_modulus(range: u64, n: usize) -> Result<u64, SvpError> {
    if range == 0 || n == 0 {
        return Err(SvpError::Invalid("need M ≥ 1 and n ≥ 1".into()));
    }
    let base = range
        .checked_mul(2)
        .ok_or_else(|| SvpError::Invalid(format!("2M overflows for M = {range}")))?;
    (0..n)
        .try_fold(1u64, |acc, _| acc.checked_mul(base))
        .ok_or_else(|| SvpError::Invalid(format!("(2M)^n overflows for M = {range}, n = {n}")))
}

/// a_1 + a_2·2M + … + a_n·(2M)^{n−1} for ā ∈ {0, …, M−1}ⁿ.
pub fn encode(a: &[i64], range: u64) -> Result<u64, SvpError> {
    let base = 2 * range;
    let mut acc = 0u64;
    for (i, &x) in a.iter().enumerate().rev() {
        if x < 0 || x as u64 >= range {
            return Err(SvpError::OutOfRange(format!(
                "coefficient a_{} = {x} outside [0, {range})",
                i + 1
            )));
        }
        acc = acc * base + x as u64;
    }
    Ok(acc)
}

/// The same packing for a difference vector b̄ ∈ (−M, M)ⁿ, reduced mod N.
pub fn encode_difference(b: &[i64], range: u64) -> Result<u64, SvpError> {
    let n = dcp_modulus(range, b.len())? as i128;
    let base = 2 * range as i128;
    let mut acc: i128 = 0;
    for (i, &x) in b.iter().enumerate().rev() {
        if x.unsigned_abs() >= range {
            return Err(SvpError::OutOfRange(format!(
                "difference b_{} = {x} outside (−{range}, {range})",
                i + 1
            )));
        }
        acc = (acc * base + x as i128).rem_euclid(n);
    }
    Ok(acc as u64)
}

/// Inverse of [`encode_difference`]: add M·(1 + 2M + …), read base-2M digits, subtract M.
pub fn decode_difference(d: u64, range: u64, n: usize) -> Result<Vec<i64>, SvpError> {
    let modulus = dcp_modulus(range, n)?;
    if d >= modulus {
        return Err(SvpError::OutOfRange(format!("{d} is not in Z_{modulus}")));
    }
    let base = 2 * range;
    let offset = (0..n).fold(0u128, |acc, _| acc * base as u128 + range as u128);
    let mut v = ((d as u128 + offset) % modulus as u128) as u64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let digit = v % base;
        v /= base;
        if digit == 0 {
            return Err(SvpError::DecodeOverflow { index: i });
        }
        out.push(digit as i64 - range as i64);
    }
    Ok(out)
}
