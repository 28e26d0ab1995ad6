//! Discretized Carleson maximal operator, `n = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

/// `C_* f(x) = max over ε, ξ of |Σ_{|x-y| >= ε} f(y) e^{2πiξy} / (x - y) h|`.
pub fn carleson_maximal(f: &GridFunction, eps_list: &[f64], xi_grid: &[f64]) -> Result<GridFunction> {
    let d = *f.domain();
    d.check_dim(1)?;
    if eps_list.is_empty() {
        return Err(Error::EmptyTruncationList);
    }
    if xi_grid.is_empty() {
        return Err(Error::InvalidParameter("empty frequency grid".into()));
    }
    let h = d.spacing();
    for &e in eps_list {
        if e < 2.0 * h * (1.0 - 1e-12) {
            return Err(Error::BelowResolution { eps: e, min: 2.0 * h });
        }
    }
    // truncation thresholds in whole cells
    let mut cuts: Vec<usize> = eps_list.iter().map(|&e| (e / h - 1e-9).ceil() as usize).collect();
    cuts.sort_unstable();
    let np = d.points_per_axis();
    let src = f.samples();
    let support: Vec<usize> = (0..np).filter(|&i| src[i] != 0.0).collect();
    let modulated: Vec<Vec<Complex64>> = xi_grid
        .iter()
        .map(|&xi| support.iter().map(|&j| Complex64::from_polar(src[j], 2.0 * PI * xi * d.axis_center(j))).collect())
        .collect();
    let out: Vec<f64> = (0..np)
        .into_par_iter()
        .map(|x| {
            let mut best = 0.0f64;
            let mut shell = vec![Complex64::new(0.0, 0.0); cuts.len() + 1];
            for row in &modulated {
                shell.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
                for (k, &y) in support.iter().enumerate() {
                    if y == x {
                        continue;
                    }
                    let dist = x.abs_diff(y);
                    let s = cuts.partition_point(|&c| c <= dist);
                    shell[s] += row[k] / ((x as f64 - y as f64) * h);
                }
                let mut tail = Complex64::new(0.0, 0.0);
                for s in (1..shell.len()).rev() {
                    tail += shell[s];
                    best = best.max(tail.norm() * h);
                }
            }
            best
        })
        .collect();
    GridFunction::new(d, out)
}

/// 64 equispaced frequencies in `[-N/(8L), N/(8L)]`.
pub fn default_xi_grid(d: &Domain) -> Vec<f64> {
    let top = d.points_per_axis() as f64 / (8.0 * d.half_width());
    (0..64).map(|k| -top + 2.0 * top * k as f64 / 63.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::kernel::{cz_maximal_truncation, default_eps_list, CZKernel};

    #[test]
    fn zero_frequency_is_pi_times_hilbert_truncation() {
        let d = Domain::new(1, 4.0, 256).unwrap();
        let f = GridFunction::from_fn(d, |x| (2.0 * x[0]).cos() * (-x[0] * x[0]).exp()).unwrap();
        let eps = default_eps_list(&d);
        let c = carleson_maximal(&f, &eps, &[0.0]).unwrap();
        let h = cz_maximal_truncation(&CZKernel::hilbert(), &f, &eps).unwrap().scale(PI);
        assert!(c.sub(&h).unwrap().max_abs() <= 1e-10 * h.max_abs());
    }

    #[test]
    fn modulation_invariance_and_monotone_grid() {
        let d = Domain::new(1, 4.0, 256).unwrap();
        let f = GridFunction::from_fn(d, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let eps = default_eps_list(&d);
        let xi = default_xi_grid(&d);
        let all = carleson_maximal(&f, &eps, &xi).unwrap();
        let few = carleson_maximal(&f, &eps, &xi[..8]).unwrap();
        for i in 0..d.cell_count() {
            assert!(all.samples()[i] >= few.samples()[i] - 1e-15);
        }
        assert!(carleson_maximal(&GridFunction::zeros(d), &eps, &xi).unwrap().is_zero());
        assert!(carleson_maximal(&f, &[d.spacing()], &xi).is_err());
    }
}
