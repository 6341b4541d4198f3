//! In-place fast Walsh-Hadamard transform, normalized so the transform is a
//! symmetric orthogonal involution.

use crate::error::{Error, Result};

/// Smallest power of two >= x (and >= 1).
pub fn next_pow2(x: usize) -> usize {
    x.max(1).next_power_of_two()
}

/// Applies the normalized Hadamard matrix H to `v` in place.
///
/// Requires `v.len()` to be a power of two (2^0 is allowed). The normalized
/// transform satisfies H * H = I and preserves the l2 norm exactly up to
/// rounding.
pub fn fwht_normalized(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::Dimension(format!(
            "fwht length must be a power of two, got {n}"
        )));
    }
    fwht_unscaled(v);
    let scale = 1.0 / (n as f64).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    Ok(())
}

/// Butterfly passes without the 1/sqrt(n) normalization.
fn fwht_unscaled(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for i in block..block + h {
                let a = v[i];
                let b = v[i + h];
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}
