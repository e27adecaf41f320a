//! Pointwise reaction substeps: `du/dt = C(u)` (physical) or
//! `dw/dt = C(w) - w` (rescaled).

use rayon::prelude::*;

use crate::fields::Field;
use crate::model::VelocityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionIntegrator {
    /// Heun's method; works for any model.
    #[default]
    Rk2,
    /// Closed-form solution of the Broadwell exchange at a point.
    ExactPairExchange,
}

/// Advances one Broadwell cell `(u1, u2, u3, u4)` by `h` exactly.
///
/// The sums `u1+u2`, `u1+u4`, `u3+u2`, `u3+u4` are invariants, and with
/// `q = u1` the system collapses to `q' = s12 s14 - rho q` where
/// `s12 = u1 + u2`, `s14 = u1 + u4` and `rho` is the total density.
pub fn exact_pair_exchange(u: &mut [f64], h: f64) {
    let (s12, s14, s32) = (u[0] + u[1], u[0] + u[3], u[2] + u[1]);
    let rho = s12 + u[2] + u[3];
    if !(rho > 0.0) {
        return;
    }
    let q_inf = s12 * s14 / rho;
    let q = q_inf + (u[0] - q_inf) * (-rho * h).exp();
    u[0] = q;
    u[1] = s12 - q;
    u[3] = s14 - q;
    u[2] = s32 - u[1];
}

/// Heun step for `du/dt = C(u) - damping * u`.
#[inline]
fn heun_cell(
    model: &VelocityModel,
    u: &mut [f64],
    h: f64,
    damping: f64,
    k1: &mut [f64],
    k2: &mut [f64],
    mid: &mut [f64],
) {
    model.collision_rhs_into(u, k1);
    for i in 0..u.len() {
        k1[i] -= damping * u[i];
        mid[i] = u[i] + h * k1[i];
    }
    model.collision_rhs_into(mid, k2);
    for i in 0..u.len() {
        k2[i] -= damping * mid[i];
        u[i] += 0.5 * h * (k1[i] + k2[i]);
    }
}

/// Applies `substeps` reaction steps of length `h` to every cell.
/// `damping` adds the linear `-w` term of the rescaled system.
pub(crate) fn react(
    field: &mut Field,
    model: &VelocityModel,
    integrator: CollisionIntegrator,
    h: f64,
    substeps: usize,
    damping: bool,
) {
    if h == 0.0 || substeps == 0 {
        return;
    }
    if !model.has_collisions() && !damping {
        return;
    }
    let n = field.nspecies();
    let row_len = field.domain().nx * n;
    let decay = if damping { 1.0 } else { 0.0 };
    field.data_mut().par_chunks_mut(row_len).for_each(|row| {
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut mid = vec![0.0; n];
        for cell in row.chunks_exact_mut(n) {
            for _ in 0..substeps {
                match integrator {
                    CollisionIntegrator::Rk2 => {
                        heun_cell(model, cell, h, decay, &mut k1, &mut k2, &mut mid)
                    }
                    CollisionIntegrator::ExactPairExchange => {
                        if damping {
                            let f = (-0.5 * h).exp();
                            cell.iter_mut().for_each(|v| *v *= f);
                            exact_pair_exchange(cell, h);
                            cell.iter_mut().for_each(|v| *v *= f);
                        } else {
                            exact_pair_exchange(cell, h);
                        }
                    }
                }
            }
        }
    });
}
