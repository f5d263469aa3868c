//! Five-point discretization of `Δu + q(x) u_y` on the truncated plane.
//!
//! Bottom and top rows carry 0 and 1. On the lateral edges the default
//! condition continues the solution along the asymptotic oblique fronts:
//! the right branch satisfies `u(x+L, y) = u(x, y + L·cot α)` and the left
//! branch `u(x-L, y) = u(x, y + L·cot α)`, so a ghost node one period outside
//! is read from inside the grid, interpolating linearly in `y`.
//!
//! For even `q` the front is symmetric in `x`; the half-domain layout keeps only
//! the columns `x ≥ 0` and mirrors across the axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Discretization;
use crate::grid::PlaneGrid;
use crate::model::ShearFlow;
use crate::numerics::sparse::CsrBuilder;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralCondition {
    #[default]
    ObliquePeriodic,
    Neumann,
}

/// First computed column: 0 for the full grid, `nx/2` for the half domain.
pub fn first_column(grid: &PlaneGrid, symmetric: bool) -> usize {
    if symmetric {
        grid.center_column()
    } else {
        0
    }
}

pub fn discretize_plane(
    grid: &PlaneGrid,
    flow: &ShearFlow,
    alpha: f64,
    lateral: LateralCondition,
    symmetric: bool,
) -> Result<Discretization> {
    let (nx, ny) = (grid.nx, grid.ny);
    let start = first_column(grid, symmetric);
    let ncols = nx + 1 - start;
    let n = ncols * (ny - 1);
    let (hx, hy) = (grid.dx(), grid.dy());
    let period_cells = flow.period / hx;
    let n_per = period_cells.round() as isize;
    if lateral == LateralCondition::ObliquePeriodic
        && ((period_cells - n_per as f64).abs() > 1e-8 || n_per < 2 || n_per > (nx - start) as isize + 1)
    {
        return Err(Error::InvalidInput(format!(
            "flow period must span an integer number (2..=nx+1) of plane cells, got {period_cells}"
        )));
    }
    let row_shift = flow.period * alpha.cos() / alpha.sin() / hy;
    let mut a = CsrBuilder::new(n, 7 * n);
    let mut g = CsrBuilder::new(n, 2 * n);
    let mut a_bc = vec![0.0; n];
    let mut g_bc = vec![0.0; n];
    // pushes `coef·u(i, jf)` where `jf` may be fractional (lateral ghosts)
    // `i` is a global column index
    let push = |b: &mut CsrBuilder, bc: &mut f64, i: usize, jf: f64, coef: f64| {
        let i = i - start;
        let j0 = jf.floor();
        let w = jf - j0;
        for (jj, wt) in [(j0 as isize, 1.0 - w), (j0 as isize + 1, w)] {
            if wt == 0.0 {
                continue;
            }
            if jj <= 0 {
                continue;
            }
            if jj >= ny as isize {
                *bc += coef * wt;
            } else {
                b.push((jj as usize - 1) * ncols + i, coef * wt);
            }
        }
    };
    for j in 1..ny {
        for i in start..=nx {
            let k = (j - 1) * ncols + i - start;
            let q = flow.eval(grid.x(i));
            let cx = 1.0 / (hx * hx);
            let cy = 1.0 / (hy * hy);
            let adv = q / (2.0 * hy);
            let jf = j as f64;
            let mut bc = 0.0;
            push(&mut a, &mut bc, i, jf, -2.0 * cx - 2.0 * cy);
            push(&mut a, &mut bc, i, jf + 1.0, cy + adv);
            push(&mut a, &mut bc, i, jf - 1.0, cy - adv);
            for di in [-1isize, 1] {
                let ii = i as isize + di;
                if ii >= start as isize && ii <= nx as isize {
                    push(&mut a, &mut bc, ii as usize, jf, cx);
                    continue;
                }
                if symmetric && di < 0 {
                    push(&mut a, &mut bc, start + 1, jf, cx);
                    continue;
                }
                match lateral {
                    LateralCondition::Neumann => push(&mut a, &mut bc, (i as isize - di) as usize, jf, cx),
                    LateralCondition::ObliquePeriodic => {
                        let src = if di > 0 { ii - n_per } else { ii + n_per };
                        if src < start as isize || src > nx as isize {
                            return Err(Error::InvalidInput("flow period exceeds the computed width".into()));
                        }
                        push(&mut a, &mut bc, src as usize, jf + row_shift, cx);
                    }
                }
            }
            a_bc[k] = bc;
            a.finish_row();
            let mut gbc = 0.0;
            push(&mut g, &mut gbc, i, jf + 1.0, 1.0 / (2.0 * hy));
            push(&mut g, &mut gbc, i, jf - 1.0, -1.0 / (2.0 * hy));
            g_bc[k] = gbc;
            g.finish_row();
        }
    }
    Ok(Discretization {
        ncols,
        nrows: ny + 1,
        y0: -grid.y_max,
        dy: hy,
        track_column: grid.center_column() - start,
        a: a.build(),
        a_bc,
        g: g.build(),
        g_bc,
    })
}
