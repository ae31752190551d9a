//! Fixed-step classical Runge-Kutta integration on a [`TimeGrid`].
//!
//! Backward integration runs the time-reversed field `w' = -f(T - s, w)`
//! forward in `s = T - t`, so there is a single stepping routine.

use crate::model::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From node 0 towards node `n_steps`.
    Forward,
    /// From node `n_steps` towards node 0.
    Backward,
}

/// Scratch buffers for one RK4 step.
#[derive(Debug, Clone)]
struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step<F, E>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, out: &mut [f64]) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let half = 0.5 * h;
        f(t, y, &mut self.k1)?;
        for ((s, &yi), &k) in self.tmp.iter_mut().zip(y).zip(&self.k1) {
            *s = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k2)?;
        for ((s, &yi), &k) in self.tmp.iter_mut().zip(y).zip(&self.k2) {
            *s = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k3)?;
        for ((s, &yi), &k) in self.tmp.iter_mut().zip(y).zip(&self.k3) {
            *s = yi + h * k;
        }
        f(t + h, &self.tmp, &mut self.k4)?;
        let sixth = h / 6.0;
        for (i, o) in out.iter_mut().enumerate() {
            *o = y[i] + sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// One classical RK4 step of size `h` (negative `h` steps backward).
///
/// `f(t, y, dy)` writes the derivative into `dy`, which has the length of `y`.
pub fn rk4_step<F, E>(mut f: F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let mut out = vec![0.0; y.len()];
    Stages::new(y.len()).step(&mut f, t, y, h, &mut out)?;
    Ok(out)
}

/// Integrates over every interval of `grid`, returning node-major values
/// (`n_nodes * dim`).
///
/// The field receives the index of the interval being stepped across, so
/// interval-constant inputs (policies) and node-indexed inputs (mean fields)
/// can be looked up without guessing from `t`.
pub fn integrate_grid<F, E>(f: F, y_start: &[f64], grid: &TimeGrid, direction: Direction) -> Result<Vec<f64>, E>
where
    F: FnMut(usize, f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    integrate_grid_with(f, y_start, grid, direction, |_, _| Ok(()))
}

/// Like [`integrate_grid`], calling `post(node, y)` on each new node value
/// right after it is computed (and before it seeds the next step).
pub fn integrate_grid_with<F, P, E>(
    mut f: F,
    y_start: &[f64],
    grid: &TimeGrid,
    direction: Direction,
    mut post: P,
) -> Result<Vec<f64>, E>
where
    F: FnMut(usize, f64, &[f64], &mut [f64]) -> Result<(), E>,
    P: FnMut(usize, &mut [f64]) -> Result<(), E>,
{
    let dim = y_start.len();
    let n = grid.n_steps();
    let dt = grid.dt();
    let horizon = grid.horizon();
    let mut out = vec![0.0; (n + 1) * dim];
    let mut stages = Stages::new(dim);
    let mut next = vec![0.0; dim];

    match direction {
        Direction::Forward => {
            out[..dim].copy_from_slice(y_start);
            for k in 0..n {
                let (done, rest) = out.split_at_mut((k + 1) * dim);
                let y = &done[k * dim..];
                let mut field = |t: f64, y: &[f64], dy: &mut [f64]| f(k, t, y, dy);
                stages.step(&mut field, grid.node(k), y, dt, &mut next)?;
                post(k + 1, &mut next)?;
                rest[..dim].copy_from_slice(&next);
            }
        }
        Direction::Backward => {
            out[n * dim..].copy_from_slice(y_start);
            for k in (0..n).rev() {
                let (head, tail) = out.split_at_mut((k + 1) * dim);
                let y = &tail[..dim];
                let mut reversed = |s: f64, w: &[f64], dw: &mut [f64]| {
                    f(k, horizon - s, w, dw)?;
                    dw.iter_mut().for_each(|d| *d = -*d);
                    Ok(())
                };
                stages.step(&mut reversed, horizon - grid.node(k + 1), y, dt, &mut next)?;
                post(k, &mut next)?;
                head[k * dim..].copy_from_slice(&next);
            }
        }
    }
    Ok(out)
}
