use crate::error::Result;
use crate::volume::Mask;

/// Dice overlap `2|a∩b| / (|a|+|b|)`; two empty masks score 1.0.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}
