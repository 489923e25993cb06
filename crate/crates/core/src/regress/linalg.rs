//! Householder QR least squares on small dense column-major systems.

/// A column's remaining norm after orthogonalization against the earlier
/// columns, relative to its original norm, below which it is treated as
/// linearly dependent. Corresponds to a tolerance (1 − R²) of about 1e-14.
const RANK_EPS: f64 = 1e-7;

/// Solves `min ‖A·b − y‖₂` for `A` given as `p` columns of length `n`.
///
/// Returns `Err(j)` when column `j` lies (numerically) in the span of
/// columns `0..j`.
pub(crate) fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, usize> {
    let n = y.len();
    let p = cols.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut qty = y.to_vec();
    let orig_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();

    for k in 0..p {
        let tail_norm = norm(&a[k][k..]);
        if orig_norms[k] == 0.0 || tail_norm <= RANK_EPS * orig_norms[k] {
            return Err(k);
        }
        let alpha = if a[k][k] > 0.0 { -tail_norm } else { tail_norm };
        let mut v = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();

        let reflect = |col: &mut [f64]| {
            let d: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * d / vv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..n]);
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
    }

    let mut b = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = qty[k];
        for j in k + 1..p {
            s -= a[j][k] * b[j];
        }
        b[k] = s / a[k][k];
    }
    Ok(b)
}

fn norm(x: &[f64]) -> f64 {
    // Scale to avoid overflow for large-magnitude columns.
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [2 1; 1 3] b = [3; 5]  →  b = [0.8, 1.4]
        let b = lstsq(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[3.0, 5.0]).unwrap();
        assert!((b[0] - 0.8).abs() < 1e-14);
        assert!((b[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_matches_hand_solution() {
        // Fit through origin: y ≈ b·x, b = Σxy / Σx².
        let x = vec![1.0, 2.0, 3.0];
        let y = [1.0, 2.5, 2.5];
        let b = lstsq(&[x], &y).unwrap();
        assert!((b[0] - 13.5 / 14.0).abs() < 1e-14);
    }

    #[test]
    fn detects_dependent_column() {
        let c0 = vec![1.0, -1.0, 2.0, 0.5];
        let c1 = vec![0.0, 1.0, 1.0, -3.0];
        let c2: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| 2.0 * a - b).collect();
        assert_eq!(lstsq(&[c0.clone(), c1, c2], &[1.0, 2.0, 3.0, 4.0]), Err(2));
        assert_eq!(lstsq(&[vec![0.0; 4]], &[1.0, 2.0, 3.0, 4.0]), Err(0));
    }
}
