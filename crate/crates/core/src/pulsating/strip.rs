//! Finite differences for `div(M∇φ) + (q(X) sin α - c) φ_Y + f(φ)` on the
//! periodic strip. The mixed term uses the centred cross stencil.

use crate::evolution::Discretization;
use crate::grid::PeriodicStripGrid;
use crate::model::{DiffusionMatrix, ShearFlow};
use crate::numerics::sparse::CsrBuilder;

pub fn discretize_strip(grid: &PeriodicStripGrid, matrix: &DiffusionMatrix, flow: &ShearFlow, alpha: f64) -> Discretization {
    let nx = grid.nx;
    let ny = grid.ny;
    let n = nx * (ny - 1);
    let (hx, hy) = (grid.dx(), grid.dy());
    let a11 = matrix.entries[0][0];
    let a22 = matrix.entries[1][1];
    let a12 = matrix.entries[0][1];
    let sin_a = alpha.sin();
    let mut a = CsrBuilder::new(n, 9 * n);
    let mut g = CsrBuilder::new(n, 2 * n);
    let mut a_bc = vec![0.0; n];
    let mut g_bc = vec![0.0; n];
    for j in 1..ny {
        for i in 0..nx {
            let k = (j - 1) * nx + i;
            let q = flow.eval(grid.x(i)) * sin_a;
            let push = |b: &mut CsrBuilder, bc: &mut Vec<f64>, di: isize, dj: isize, coef: f64| {
                let ii = (i as isize + di).rem_euclid(nx as isize) as usize;
                let jj = j as isize + dj;
                if jj <= 0 {
                    // bottom edge carries 0
                } else if jj >= ny as isize {
                    bc[k] += coef;
                } else {
                    b.push((jj as usize - 1) * nx + ii, coef);
                }
            };
            let cx = a11 / (hx * hx);
            let cy = a22 / (hy * hy);
            let cxy = a12 / (2.0 * hx * hy);
            let adv = q / (2.0 * hy);
            push(&mut a, &mut a_bc, 0, 0, -2.0 * cx - 2.0 * cy);
            push(&mut a, &mut a_bc, 1, 0, cx);
            push(&mut a, &mut a_bc, -1, 0, cx);
            push(&mut a, &mut a_bc, 0, 1, cy + adv);
            push(&mut a, &mut a_bc, 0, -1, cy - adv);
            if cxy != 0.0 {
                push(&mut a, &mut a_bc, 1, 1, cxy);
                push(&mut a, &mut a_bc, -1, -1, cxy);
                push(&mut a, &mut a_bc, 1, -1, -cxy);
                push(&mut a, &mut a_bc, -1, 1, -cxy);
            }
            a.finish_row();
            push(&mut g, &mut g_bc, 0, 1, 1.0 / (2.0 * hy));
            push(&mut g, &mut g_bc, 0, -1, -1.0 / (2.0 * hy));
            g.finish_row();
        }
    }
    Discretization {
        ncols: nx,
        nrows: ny + 1,
        y0: -grid.y_max,
        dy: hy,
        track_column: 0,
        a: a.build(),
        a_bc,
        g: g.build(),
        g_bc,
    }
}
