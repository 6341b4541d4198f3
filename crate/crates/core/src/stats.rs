//! Order statistics and small summaries used by the estimators and the
//! benchmark reports.

use crate::error::{Error, Result};

/// Median of absolute values. Even lengths take the arithmetic mean of the
/// two middle order statistics.
pub fn median_abs(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Argument("median_abs of empty input".into()));
    }
    let mut abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    Ok(median_in_place(&mut abs))
}

/// Median of values (same even-length convention as [`median_abs`]).
pub fn median(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Argument("median of empty input".into()));
    }
    let mut work = v.to_vec();
    Ok(median_in_place(&mut work))
}

fn median_in_place(work: &mut [f64]) -> f64 {
    let n = work.len();
    let mid = n / 2;
    let (_, m, _) = work.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    let hi = *m;
    if n % 2 == 1 {
        hi
    } else {
        // Largest element of the lower half.
        let lo = work[..mid]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Quantile with linear interpolation between order statistics (the
/// position is q * (n - 1)).
pub fn quantile(v: &[f64], q: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Argument("quantile of empty input".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("quantile level {q} outside [0,1]")));
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    // Returning early when the position is integral keeps infinite order
    // statistics from turning into 0 * inf = NaN.
    if frac == 0.0 {
        return Ok(s[lo]);
    }
    Ok(s[lo] + (s[hi] - s[lo]) * frac)
}

/// First and third quartiles.
pub fn quartiles(v: &[f64]) -> Result<(f64, f64)> {
    Ok((quantile(v, 0.25)?, quantile(v, 0.75)?))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(v: &[f64]) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(Error::Argument("mean_and_se needs at least 2 samples".into()));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Argument("spearman needs two equal-length samples".into()));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
    let mut r = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        return Err(Error::Argument("spearman: constant input".into()));
    }
    Ok(num / (da * db).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_abs_odd() {
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn median_abs_even_mean_convention() {
        assert_eq!(median_abs(&[1.0, -2.0, 3.0, -4.0]).unwrap(), 2.5);
    }

    #[test]
    fn median_abs_singleton() {
        assert_eq!(median_abs(&[5.0]).unwrap(), 5.0);
        assert_eq!(median_abs(&[-5.0]).unwrap(), 5.0);
    }

    #[test]
    fn median_abs_empty_errors() {
        assert!(median_abs(&[]).is_err());
    }

    #[test]
    fn median_signed() {
        assert_eq!(median(&[9.0, 1.0, 5.0]).unwrap(), 5.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        let (q1, q3) = quartiles(&v).unwrap();
        assert_eq!(q1, 1.75);
        assert_eq!(q3, 3.25);
    }

    #[test]
    fn spearman_monotone_is_one() {
        let a = [1.0, 2.0, 5.0, 9.0];
        let b = [10.0, 20.0, 21.0, 30.0];
        assert!((spearman(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let c = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&a, &c).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_handles_ties() {
        let a = [1.0, 1.0, 2.0, 3.0];
        let b = [1.0, 1.0, 2.0, 3.0];
        assert!((spearman(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_and_se_matches_hand_calc() {
        let (m, se) = mean_and_se(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        // var = 2, se = sqrt(2/2) = 1.
        assert!((se - 1.0).abs() < 1e-12);
    }
}
