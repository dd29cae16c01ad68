use super::{find_root, Bracket, KernelError};

/// Points in the derivative sign scan used to detect non-concavity.
pub const DIAGNOSTIC_POINTS: usize = 33;

fn derivative_scan<G: Fn(f64) -> f64>(f_prime: &G, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = DIAGNOSTIC_POINTS - 1;
    (0..=n)
        .map(|i| {
            let x = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
            (x, f_prime(x))
        })
        .collect()
}

/// Number of strict sign changes along the scan, zeros skipped.
fn sign_changes(scan: &[(f64, f64)]) -> usize {
    let signs: Vec<bool> = scan.iter().filter(|p| p.1 != 0.0).map(|p| p.1 > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Maximizes `f` on `[lo, hi]` by locating the zero of `f_prime`.
///
/// `f_prime` is scanned on a fixed grid first: more than one sign change, or a single
/// change from negative to positive, means the maximizer is not unique and `NonConcave`
/// is returned. Otherwise boundary maxima are returned directly (`f'(lo) <= 0` gives `lo`,
/// `f'(hi) >= 0` gives `hi`) and interior ones are polished with [`find_root`].
pub fn maximize_concave<F, G>(f: F, f_prime: G, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), KernelError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let scan = derivative_scan(&f_prime, lo, hi);
    let changes = sign_changes(&scan);
    let d_lo = scan[0].1;
    let d_hi = scan[scan.len() - 1].1;
    let rising = changes == 1 && d_lo < 0.0 && d_hi > 0.0;
    if changes > 1 || rising {
        return Err(KernelError::NonConcave { sign_changes: changes, lo, hi });
    }
    if d_lo <= 0.0 {
        return Ok((lo, f(lo)));
    }
    if d_hi >= 0.0 {
        return Ok((hi, f(hi)));
    }
    let x = descent_root(&f_prime, &scan, tol)?;
    Ok((x, f(x)))
}

/// Smallest point on `[lo, hi]` where `f_prime` crosses from positive to non-positive,
/// or `None` if the scan shows no such crossing. Used as the tie-break when the
/// objective is not concave.
pub fn first_descent_root<G: Fn(f64) -> f64>(f_prime: G, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>, KernelError> {
    let scan = derivative_scan(&f_prime, lo, hi);
    if scan.windows(2).any(|w| w[0].1 > 0.0 && w[1].1 <= 0.0) {
        descent_root(&f_prime, &scan, tol).map(Some)
    } else {
        Ok(None)
    }
}

fn descent_root<G: Fn(f64) -> f64>(f_prime: &G, scan: &[(f64, f64)], tol: f64) -> Result<f64, KernelError> {
    let w = scan
        .windows(2)
        .find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0)
        .expect("caller checked for a descent crossing");
    let bracket = Bracket::from_values(w[0].0, w[1].0, w[0].1, w[1].1)?;
    find_root(f_prime, &bracket, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_quadratic_maximum() {
        let (x, fx) = maximize_concave(|x| -(x - 1.0) * (x - 1.0), |x| -2.0 * (x - 1.0), 0.0, 3.0, 1e-13).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
        assert!(fx.abs() < 1e-20);
    }

    #[test]
    fn boundary_maxima() {
        let (x, _) = maximize_concave(|x| -x, |_| -1.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(x, 0.0);
        let (x, _) = maximize_concave(|x| x, |_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn multiple_critical_points_are_flagged() {
        // f' = cos(x) has several zeros on [0, 10]
        let r = maximize_concave(f64::sin, f64::cos, 0.0, 10.0, 1e-12);
        assert!(matches!(r, Err(KernelError::NonConcave { sign_changes: 3, .. })));
        let first = first_descent_root(f64::cos, 0.0, 10.0, 1e-14).unwrap().unwrap();
        assert!((first - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn interior_minimum_is_flagged() {
        let r = maximize_concave(|x| (x - 1.0).powi(2), |x| 2.0 * (x - 1.0), 0.0, 3.0, 1e-12);
        assert!(matches!(r, Err(KernelError::NonConcave { .. })));
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| x.ln() - x * x;
        let g = |x: f64| 1.0 / x - 2.0 * x;
        let a = maximize_concave(f, g, 0.1, 2.0, 1e-14).unwrap();
        let b = maximize_concave(f, g, 0.1, 2.0, 1e-14).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert!((a.0 - 0.5f64.sqrt()).abs() < 1e-13);
    }
}
