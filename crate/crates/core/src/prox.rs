//! Per-edge kernels shared by the solvers.
//!
//! Both operate on a single `p`-vector and are nonexpansive. They are related by
//! the Moreau decomposition `v = prox_group_norm(v, t) + project_dual_ball(v, t)`.

use nalgebra::{DVector, DVectorView, DVectorViewMut};

/// Group soft-threshold: `max(0, 1 - t / ||v||) * v`, written into `out`.
pub fn prox_group_norm_into(v: DVectorView<'_, f64>, threshold: f64, mut out: DVectorViewMut<'_, f64>) {
    let norm = v.norm();
    if norm <= threshold {
        out.fill(0.0);
    } else {
        let factor = 1.0 - threshold / norm;
        out.zip_apply(&v, |o, x| *o = factor * x);
    }
}

pub fn prox_group_norm(v: &DVector<f64>, threshold: f64) -> DVector<f64> {
    debug_assert!(threshold >= 0.0);
    let mut out = DVector::zeros(v.len());
    prox_group_norm_into(v.as_view(), threshold, out.as_view_mut());
    out
}

/// Scales `z` in place onto the ball of the given radius if it lies outside.
/// Returns the original norm.
pub fn project_dual_ball_in_place(mut z: DVectorViewMut<'_, f64>, radius: f64) -> f64 {
    let norm = z.norm();
    if norm > radius {
        if radius > 0.0 {
            z.scale_mut(radius / norm);
        } else {
            z.fill(0.0);
        }
    }
    norm
}

pub fn project_dual_ball(z: &DVector<f64>, radius: f64) -> DVector<f64> {
    debug_assert!(radius >= 0.0);
    let mut out = z.clone();
    project_dual_ball_in_place(out.as_view_mut(), radius);
    out
}
