//! Hardy–Littlewood maximal function over a finite cube family.

use rayon::prelude::*;

use crate::cube::{CubeFamily, IndexBox};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::morrey::Prefix;

/// `(Mf)(y) = max over family cubes containing y of |Q|^{-1} ∫_Q |f|`, with
/// `|Q|` the clipped volume.
pub fn maximal(f: &GridFunction, fam: &CubeFamily) -> Result<GridFunction> {
    let d = fam.domain();
    if f.domain() != d {
        return Err(Error::InvalidDomain("function and family live on different grids".into()));
    }
    let abs: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    let pre = Prefix::new(d, &abs);
    let avgs: Vec<f64> = fam.boxes().par_iter().map(|b| pre.sum(b) / b.count() as f64).collect();
    Ok(paint_max(d, fam.boxes(), &avgs))
}

/// Pointwise maximum of per-box values over the boxes covering each cell.
fn paint_max(d: &Domain, boxes: &[IndexBox], vals: &[f64]) -> GridFunction {
    let np = d.points_per_axis();
    let rows = if d.n() == 1 { 1 } else { np };
    let mut out = vec![0.0f64; d.cell_count()];
    out.par_chunks_mut(np).enumerate().for_each(|(row, chunk)| {
        for (b, &v) in boxes.iter().zip(vals) {
            if v == 0.0 || (rows > 1 && (row < b.lo[1] || row > b.hi[1])) {
                continue;
            }
            for x in &mut chunk[b.lo[0]..=b.hi[0]] {
                if v > *x {
                    *x = v;
                }
            }
        }
    });
    GridFunction::new(*d, out).expect("averages are finite")
}

/// `n = 1` oracle: maximum over every run of consecutive cells containing
/// the point. `O(N^2)` per point.
pub fn maximal_dense_1d(f: &GridFunction) -> Result<GridFunction> {
    let d = f.domain();
    d.check_dim(1)?;
    let np = d.points_per_axis();
    let mut pre = vec![0.0; np + 1];
    for i in 0..np {
        pre[i + 1] = pre[i] + f.samples()[i].abs();
    }
    let out: Vec<f64> = (0..np)
        .into_par_iter()
        .map(|y| {
            let mut best = 0.0f64;
            for a in 0..=y {
                for b in y..np {
                    best = best.max((pre[b + 1] - pre[a]) / (b - a + 1) as f64);
                }
            }
            best
        })
        .collect();
    GridFunction::new(*d, out)
}
