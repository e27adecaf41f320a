use super::Boundary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Tensor-product linear; a convex combination, so it never creates
    /// negative values.
    #[default]
    Bilinear,
    /// Tensor-product Catmull-Rom; results are clamped at zero.
    Cubic,
}

/// Indices and weights of a 1-D interpolation stencil.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Taps {
    idx: [usize; 4],
    w: [f64; 4],
    len: usize,
}

impl Taps {
    const EMPTY: Taps = Taps {
        idx: [0; 4],
        w: [0.0; 4],
        len: 0,
    };

    pub(crate) fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len]
            .iter()
            .copied()
            .zip(self.w[..self.len].iter().copied())
    }
}

/// Fractional positions this close to a node are snapped onto it.
const NODE_SNAP: f64 = 1e-10;

/// 1-D stencil for a sample at `pos` on the cell-centred axis
/// `min + (i + 1/2) h`, `i in 0..n`.
///
/// Periodic axes wrap. On outflow axes positions outside `[min, min + n h]`
/// get an empty stencil (vacuum) and stencil indices are clamped to the grid,
/// i.e. values are held constant across the half cell next to each edge.
pub(crate) fn axis_taps(
    pos: f64,
    min: f64,
    h: f64,
    n: usize,
    boundary: Boundary,
    method: Interpolation,
) -> Taps {
    if boundary == Boundary::Outflow && !(pos >= min && pos <= min + h * n as f64) {
        return Taps::EMPTY;
    }
    if !pos.is_finite() {
        return Taps::EMPTY;
    }
    let mut s = (pos - min) / h - 0.5;
    let r = s.round();
    if (s - r).abs() < NODE_SNAP {
        s = r;
    }
    let i0 = s.floor();
    let f = s - i0;
    let i0 = i0 as i64;
    let n_i = n as i64;
    let map = |i: i64| -> usize {
        match boundary {
            Boundary::Periodic => i.rem_euclid(n_i) as usize,
            Boundary::Outflow => i.clamp(0, n_i - 1) as usize,
        }
    };
    match method {
        Interpolation::Bilinear => Taps {
            idx: [map(i0), map(i0 + 1), 0, 0],
            w: [1.0 - f, f, 0.0, 0.0],
            len: 2,
        },
        Interpolation::Cubic => {
            let (f2, f3) = (f * f, f * f * f);
            Taps {
                idx: [map(i0 - 1), map(i0), map(i0 + 1), map(i0 + 2)],
                w: [
                    0.5 * (-f3 + 2.0 * f2 - f),
                    0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
                    0.5 * (-3.0 * f3 + 4.0 * f2 + f),
                    0.5 * (f3 - f2),
                ],
                len: 4,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for method in [Interpolation::Bilinear, Interpolation::Cubic] {
            for k in 0..50 {
                let pos = -1.0 + 2.0 * k as f64 / 49.0;
                let t = axis_taps(pos, -1.0, 0.25, 8, Boundary::Periodic, method);
                let sum: f64 = t.iter().map(|(_, w)| w).sum();
                assert!((sum - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn node_snapping() {
        let h = 0.1;
        let pos = -1.0 + 3.5 * h + 1e-14;
        let t = axis_taps(pos, -1.0, h, 20, Boundary::Outflow, Interpolation::Bilinear);
        let taps: Vec<_> = t.iter().collect();
        assert_eq!(taps[0], (3, 1.0));
        assert_eq!(taps[1].1, 0.0);
    }

    #[test]
    fn edge_band_and_vacuum() {
        let t = axis_taps(
            0.99,
            -1.0,
            0.25,
            8,
            Boundary::Outflow,
            Interpolation::Bilinear,
        );
        assert!(t.iter().all(|(i, _)| i == 7));
        assert_eq!(
            axis_taps(
                1.01,
                -1.0,
                0.25,
                8,
                Boundary::Outflow,
                Interpolation::Bilinear
            )
            .len,
            0
        );
    }
}
