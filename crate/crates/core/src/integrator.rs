//! Fixed-step classical Runge–Kutta (order 4) integration.
//!
//! Fields are plain closures `f(x, dx)` writing the derivative of `x` into
//! `dx`. The stepper keeps its stage buffers between calls so long runs do
//! not allocate per step.

use crate::error::{Error, Result};

/// Flat real-valued state of an autonomous system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        first_non_finite(&self.0)
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

fn first_non_finite(xs: &[f64]) -> Option<usize> {
    xs.iter().position(|x| !x.is_finite())
}

/// Reusable RK4 stepper with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    /// Advance `x` in place by one step of size `dt`.
    ///
    /// `step` is only used to label errors. On error `x` is left untouched.
    #[allow(clippy::needless_range_loop)]
    pub fn step_in_place<F>(
        &mut self,
        field: &mut F,
        x: &mut [f64],
        dt: f64,
        step: usize,
    ) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let check = |v: &[f64]| match first_non_finite(v) {
            Some(component) => Err(Error::NonFinite { step, component }),
            None => Ok(()),
        };

        field(x, &mut self.k1);
        check(&self.k1)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k1[i];
        }
        field(&self.tmp, &mut self.k2);
        check(&self.k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k2[i];
        }
        field(&self.tmp, &mut self.k3);
        check(&self.k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        field(&self.tmp, &mut self.k4);
        check(&self.k4)?;

        for i in 0..n {
            self.tmp[i] =
                x[i] + dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        check(&self.tmp)?;
        x.copy_from_slice(&self.tmp);
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            "dt",
            format!("must be positive and finite, got {dt}"),
        ))
    }
}

/// One classical RK4 step; `x` is not modified.
pub fn rk4_step<F>(mut field: F, x: &StateVector, dt: f64) -> Result<StateVector>
where
    F: FnMut(&[f64], &mut [f64]),
{
    check_dt(dt)?;
    let mut out = x.0.clone();
    Rk4::new(x.dim()).step_in_place(&mut field, &mut out, dt, 0)?;
    Ok(StateVector(out))
}

/// Integrate `n_steps` fixed steps from `x0`, calling `observer(step, t, state)`
/// after every step (steps are numbered from 1, `t = step * dt`).
pub fn integrate<F, O>(
    mut field: F,
    x0: &StateVector,
    dt: f64,
    n_steps: usize,
    mut observer: O,
) -> Result<StateVector>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]),
{
    check_dt(dt)?;
    if let Some(component) = x0.first_non_finite() {
        return Err(Error::NonFinite { step: 0, component });
    }
    let mut rk = Rk4::new(x0.dim());
    let mut x = x0.0.clone();
    for step in 1..=n_steps {
        rk.step_in_place(&mut field, &mut x, dt, step)?;
        observer(step, step as f64 * dt, &x);
    }
    Ok(StateVector(x))
}
