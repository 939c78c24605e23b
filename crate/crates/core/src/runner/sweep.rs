//! Two-parameter maps of `P₂→₂` over time and `D` (or `ω`).

use rayon::prelude::*;

use crate::analytic::transition_matrix;
use crate::models::{DriveSpec, ModelParams, Semiclassical};
use crate::propagate::{evolve_density, DensityMatrix, TimeGrid};
use crate::{Error, Result};

use super::compare::interpolate;
use super::config::{Engine, ScenarioConfig, SweepAxis, SweepSpec, Variant};
use super::output::render_csv;
use super::run::analytic_pair;

/// Grid of `P₂→₂`; `values[j * xs.len() + i]` belongs to `(xs[i], ys[j])`.
/// Axes are in units of `√α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    /// One row at fixed `y`.
    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.xs.len();
        &self.values[j * n..(j + 1) * n]
    }

    /// Largest `|P(x, y) − P(x, −y)|` over rows paired by mirror index;
    /// meaningful when the `y` range is symmetric about zero.
    pub fn mirror_asymmetry(&self) -> f64 {
        let ny = self.ys.len();
        let mut m: f64 = 0.0;
        for j in 0..ny / 2 {
            for (a, b) in self.row(j).iter().zip(self.row(ny - 1 - j)) {
                m = m.max((a - b).abs());
            }
        }
        m
    }

    /// Long-format `x,y,p22` CSV, `y` outer.
    pub fn to_csv(&self, metadata: &[String]) -> String {
        let rows = self
            .ys
            .iter()
            .enumerate()
            .flat_map(|(j, &y)| self.xs.iter().enumerate().map(move |(i, &x)| (i, j, x, y)))
            .map(|(i, j, x, y)| vec![x, y, self.get(i, j)]);
        render_csv(metadata, &["x", "y", "p22"], rows)
    }
}

/// `n` evenly spaced points from `a` to `b`, endpoints exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}

/// Evaluates `P₂→₂` on the `[sweep]` grid of `cfg`, cells in parallel. The
/// analytic engines evaluate each cell independently; `numeric-density`
/// propagates one row per `y` from `grid.t_start` and interpolates onto the
/// `x` points.
pub fn sweep_pattern(cfg: &ScenarioConfig) -> Result<SweepGrid> {
    cfg.validate()?;
    let spec: SweepSpec = cfg.sweep.ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    if cfg.scenario.variant != Variant::Su3 {
        return Err(Error::Config("sweeps run on the su3 model".into()));
    }
    if cfg.initial.basis_index(3)? != 1 {
        return Err(Error::Config("sweeps record P22 and need initial level 2".into()));
    }
    let sa = cfg.model.alpha.sqrt();
    let xs = linspace(spec.x_min, spec.x_max, spec.nx);
    let ys = linspace(spec.y_min, spec.y_max, spec.ny);
    let t0 = cfg.grid.t_start;
    if spec.x_min / sa < t0 {
        return Err(Error::Config("sweep x range starts before grid.t_start".into()));
    }
    let setup = |y: f64| -> (ModelParams, ScenarioConfig) {
        let mut c = cfg.clone();
        match spec.y_axis {
            SweepAxis::D => c.model.d_aniso = y * sa,
            SweepAxis::Omega => {
                for h in &mut c.drive.harmonics {
                    h.freq = y * sa;
                }
            }
        }
        (c.model, c)
    };
    let values: Vec<f64> = match cfg.scenario.engine {
        e if e.is_analytic() => (0..spec.nx * spec.ny)
            .into_par_iter()
            .map(|cell| {
                let (i, j) = (cell % spec.nx, cell / spec.nx);
                let (p, c) = setup(ys[j]);
                let (pp, pm) = analytic_pair(&c, &p, xs[i] / sa, t0)?;
                Ok(transition_matrix(pp, pm)[(1, 1)])
            })
            .collect::<Result<_>>()?,
        Engine::NumericDensity => {
            let rows: Vec<Vec<f64>> = ys
                .par_iter()
                .map(|&y| {
                    let (p, c) = setup(y);
                    numeric_row(&p, &c.drive, &c.grid, &xs, sa)
                })
                .collect::<Result<_>>()?;
            rows.concat()
        }
        e => return Err(Error::Config(format!("engine {e} cannot drive a sweep"))),
    };
    Ok(SweepGrid { axis: spec.y_axis, xs, ys, values })
}

fn numeric_row(p: &ModelParams, drive: &DriveSpec, grid: &TimeGrid, xs: &[f64], sa: f64) -> Result<Vec<f64>> {
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let mut g = *grid;
    g.t_end = xs[xs.len() - 1] / sa;
    g.output_stride = (dx / sa).min(grid.output_stride);
    let h = Semiclassical::new(*p, drive.clone());
    let tr = evolve_density(&h, &DensityMatrix::pure_level(3, 1)?, &g)?;
    let p22 = tr.level(1);
    Ok(xs.iter().map(|&x| interpolate(&tr.times, &p22, x / sa)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::presets::preset;

    fn small(nx: usize, ny: usize) -> ScenarioConfig {
        let mut c = preset("fig5").unwrap();
        let s = c.sweep.as_mut().unwrap();
        s.nx = nx;
        s.ny = ny;
        c
    }

    #[test]
    fn two_by_two_has_four_cells() {
        let g = sweep_pattern(&small(2, 2)).unwrap();
        assert_eq!(g.values.len(), 4);
        let csv = g.to_csv(&[]);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("x,y,p22\n"));
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let mut c = small(7, 5);
        c.drive.harmonics[0].amp = 0.0;
        let g = sweep_pattern(&c).unwrap();
        assert!(g.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn resolution_checked() {
        assert!(matches!(sweep_pattern(&small(1, 4)), Err(Error::Config(_))));
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-10.0, 10.0, 200);
        assert_eq!((v[0], v[199]), (-10.0, 10.0));
    }
}
