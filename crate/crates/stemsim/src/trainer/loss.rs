//! Cosine distance and the triplet hinge loss.

use ndarray::Array1;

use crate::error::{Error, Result};

/// Cosine distance `1 - <a,b>/(|a||b|)`, clamped into [0, 2] against
/// floating-point spill. Errors on zero-norm input.
pub fn cosine_distance(a: &Array1<f64>, b: &Array1<f64>) -> Result<f64> {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((1.0 - a.dot(b) / (na * nb)).clamp(0.0, 2.0))
}

/// Triplet hinge: `max(d_ap - d_an + margin, 0)`.
pub fn triplet_loss(d_ap: f64, d_an: f64, margin: f64) -> f64 {
    (d_ap - d_an + margin).max(0.0)
}

/// Subgradients of the hinge with respect to the two distances:
/// `(1, -1)` when active, `(0, 0)` otherwise, including at the boundary.
pub fn hinge_gradients(d_ap: f64, d_an: f64, margin: f64) -> (f64, f64) {
    if d_ap - d_an + margin > 0.0 {
        (1.0, -1.0)
    } else {
        (0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn cosine_distance_reference_points() {
        let a = arr1(&[1.0, 0.0, 0.0]);
        let b = arr1(&[0.0, 1.0, 0.0]);
        assert_eq!(cosine_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(cosine_distance(&a, &b).unwrap(), 1.0);
        let neg = arr1(&[-1.0, 0.0, 0.0]);
        assert_eq!(cosine_distance(&a, &neg).unwrap(), 2.0);
        // Symmetry and scale invariance.
        let c = arr1(&[0.3, -0.2, 0.9]);
        let d = arr1(&[0.1, 0.8, 0.2]);
        assert_eq!(
            cosine_distance(&c, &d).unwrap(),
            cosine_distance(&d, &c).unwrap()
        );
        let scaled = &c * 5.0;
        assert!(
            (cosine_distance(&c, &d).unwrap() - cosine_distance(&scaled, &d).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn zero_norm_is_an_error() {
        let a = arr1(&[0.0, 0.0]);
        let b = arr1(&[1.0, 0.0]);
        assert!(matches!(cosine_distance(&a, &b), Err(Error::ZeroNorm)));
    }

    #[test]
    fn hinge_tabulated_cases() {
        assert_eq!(triplet_loss(0.3, 0.9, 0.2), 0.0);
        assert_eq!(triplet_loss(0.5, 0.5, 0.2), 0.2);
        assert!((triplet_loss(0.9, 0.3, 0.2) - 0.8).abs() < 1e-15);
        // Zero margin with equal distances is exactly zero.
        for d in [0.0, 0.3, 1.7] {
            assert_eq!(triplet_loss(d, d, 0.0), 0.0);
        }
    }

    #[test]
    fn hinge_gradients_switch_with_activity() {
        assert_eq!(hinge_gradients(0.9, 0.3, 0.2), (1.0, -1.0));
        assert_eq!(hinge_gradients(0.3, 0.9, 0.2), (0.0, 0.0));
        // At the exact boundary the lower subgradient (0) is used.
        assert_eq!(hinge_gradients(0.3, 0.5, 0.2), (0.0, 0.0));
    }
}
