//! Numerical checks for gradient (scalar-descending) structure of planar
//! flows: descent of a candidate potential, finite-difference curl, and
//! the Oja and bilinear-minimax reference flows.
//!
//! Descent of one candidate `V` can be certified on a grid; the absence of
//! every such `V` cannot. A nonzero curl is the refutation this module
//! reports instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Rk4;

/// Default step for finite-difference gradients.
pub const GRAD_H: f64 = 1e-5;
/// Default step for curl grids.
pub const CURL_H: f64 = 1e-3;

pub struct VectorField2D<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync + 'a>,
}

impl<'a> VectorField2D<'a> {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'a,
    ) -> Self {
        VectorField2D {
            name: name.into(),
            eval: Box::new(f),
        }
    }

    pub fn at(&self, x1: f64, x2: f64) -> [f64; 2] {
        (self.eval)(x1, x2)
    }

    /// Pure rotation `omega (-x2, x1)`.
    pub fn rotation(omega: f64) -> Self {
        Self::new("rotation", move |x1, x2| [-omega * x2, omega * x1])
    }

    /// `-grad V` for `V = (x1^2 + x2^2) / 2`.
    pub fn quadratic_descent() -> Self {
        Self::new("gradient", |x1, x2| [-x1, -x2])
    }
}

pub struct ScalarField2D<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(f64, f64) -> f64 + Send + Sync + 'a>,
}

impl<'a> ScalarField2D<'a> {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'a) -> Self {
        ScalarField2D {
            name: name.into(),
            eval: Box::new(f),
        }
    }

    pub fn at(&self, x1: f64, x2: f64) -> f64 {
        (self.eval)(x1, x2)
    }

    pub fn quadratic() -> Self {
        Self::new("quadratic", |x1, x2| 0.5 * (x1 * x1 + x2 * x2))
    }

    /// Central-difference gradient.
    pub fn grad(&self, x1: f64, x2: f64, h: f64) -> [f64; 2] {
        [
            (self.at(x1 + h, x2) - self.at(x1 - h, x2)) / (2.0 * h),
            (self.at(x1, x2 + h) - self.at(x1, x2 - h)) / (2.0 * h),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub fn square(half: f64) -> Self {
        Rect {
            x1_min: -half,
            x1_max: half,
            x2_min: -half,
            x2_max: half,
        }
    }

    /// `n x n` grid points including the corners, row-major in `x2`.
    pub fn grid(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 2 {
            return Err(Error::config("n", "grid needs at least 2 points per axis"));
        }
        if !(self.x1_min < self.x1_max && self.x2_min < self.x2_max) {
            return Err(Error::config("domain", "empty rectangle"));
        }
        let d1 = (self.x1_max - self.x1_min) / (n - 1) as f64;
        let d2 = (self.x2_max - self.x2_min) / (n - 1) as f64;
        Ok((0..n)
            .flat_map(|j| {
                (0..n).map(move |i| (self.x1_min + d1 * i as f64, self.x2_min + d2 * j as f64))
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentReport {
    pub n_samples: usize,
    pub max_inner_product: f64,
    pub violation_fraction: f64,
    pub worst_point: (f64, f64),
}

/// Evaluate `grad V . F` on an `n x n` grid; samples above `tol` count as
/// violations.
pub fn descent_check(
    field: &VectorField2D,
    v: &ScalarField2D,
    domain: &Rect,
    n: usize,
    tol: f64,
    h: f64,
) -> Result<DescentReport> {
    let pts = domain.grid(n)?;
    let vals = pts
        .par_iter()
        .map(|&(x1, x2)| {
            let f = field.at(x1, x2);
            let g = v.grad(x1, x2, h);
            let ip = g[0] * f[0] + g[1] * f[1];
            if ip.is_finite() {
                Ok(ip)
            } else {
                Err(Error::NonFiniteField { x1, x2 })
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut worst = 0;
    for (i, ip) in vals.iter().enumerate() {
        if *ip > vals[worst] {
            worst = i;
        }
    }
    let violations = vals.iter().filter(|ip| **ip > tol).count();
    Ok(DescentReport {
        n_samples: vals.len(),
        max_inner_product: vals[worst],
        violation_fraction: violations as f64 / vals.len() as f64,
        worst_point: pts[worst],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurlSample {
    pub x1: f64,
    pub x2: f64,
    pub curl: f64,
}

/// Central-difference `dF2/dx1 - dF1/dx2` on an `n x n` grid.
pub fn planar_curl(
    field: &VectorField2D,
    domain: &Rect,
    n: usize,
    h: f64,
) -> Result<Vec<CurlSample>> {
    if !(h > 0.0) {
        return Err(Error::config("h", "must be positive"));
    }
    domain
        .grid(n)?
        .par_iter()
        .map(|&(x1, x2)| {
            let df2 = (field.at(x1 + h, x2)[1] - field.at(x1 - h, x2)[1]) / (2.0 * h);
            let df1 = (field.at(x1, x2 + h)[0] - field.at(x1, x2 - h)[0]) / (2.0 * h);
            let curl = df2 - df1;
            if curl.is_finite() {
                Ok(CurlSample { x1, x2, curl })
            } else {
                Err(Error::NonFiniteField { x1, x2 })
            }
        })
        .collect()
}

/// Symmetric 2x2 matrix `[[c11, c12], [c12, c22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

impl Sym2 {
    /// From row-major entries; rejects asymmetry above 1e-12.
    pub fn from_rows(m: [f64; 4]) -> Result<Self> {
        if (m[1] - m[2]).abs() > 1e-12 {
            return Err(Error::config(
                "C",
                format!("not symmetric: {} vs {}", m[1], m[2]),
            ));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("C", "entries must be finite"));
        }
        Ok(Sym2 {
            c11: m[0],
            c12: m[1],
            c22: m[3],
        })
    }

    pub fn apply(&self, w: [f64; 2]) -> [f64; 2] {
        [
            self.c11 * w[0] + self.c12 * w[1],
            self.c12 * w[0] + self.c22 * w[1],
        ]
    }

    pub fn quad(&self, w: [f64; 2]) -> f64 {
        let cw = self.apply(w);
        w[0] * cw[0] + w[1] * cw[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OjaPoint {
    pub t: f64,
    pub w: [f64; 2],
    pub v: f64,
}

/// Mean Oja dynamics `w' = C w - (w^T C w) w` with `V(w) = -w^T C w / 2`
/// logged at every step (first entry is the initial state).
pub fn oja_simulate(c: &Sym2, w0: [f64; 2], dt: f64, n_steps: usize) -> Result<Vec<OjaPoint>> {
    if w0 == [0.0, 0.0] {
        return Err(Error::config("w0", "must be nonzero"));
    }
    if !(dt > 0.0) {
        return Err(Error::config("dt", "must be positive"));
    }
    let c = *c;
    let mut field = |w: &[f64], dw: &mut [f64]| {
        let cw = c.apply([w[0], w[1]]);
        let q = w[0] * cw[0] + w[1] * cw[1];
        dw[0] = cw[0] - q * w[0];
        dw[1] = cw[1] - q * w[1];
    };
    let mut rk = Rk4::new(2);
    let mut w = w0;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(OjaPoint {
        t: 0.0,
        w,
        v: -0.5 * c.quad(w),
    });
    for k in 1..=n_steps {
        rk.step_in_place(&mut field, &mut w, dt, k)?;
        out.push(OjaPoint {
            t: k as f64 * dt,
            w,
            v: -0.5 * c.quad(w),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub r2: f64,
}

/// Simultaneous gradient play on `L = x y`: `x' = -y`, `y' = x`.
pub fn minimax_simulate(x0: f64, y0: f64, dt: f64, n_steps: usize) -> Result<Vec<MinimaxPoint>> {
    if !(dt > 0.0) {
        return Err(Error::config("dt", "must be positive"));
    }
    let mut field = |z: &[f64], dz: &mut [f64]| {
        dz[0] = -z[1];
        dz[1] = z[0];
    };
    let mut rk = Rk4::new(2);
    let mut z = [x0, y0];
    let mut out = Vec::with_capacity(n_steps + 1);
    let point = |t: f64, z: [f64; 2]| MinimaxPoint {
        t,
        x: z[0],
        y: z[1],
        r2: z[0] * z[0] + z[1] * z[1],
    };
    out.push(point(0.0, z));
    for k in 1..=n_steps {
        rk.step_in_place(&mut field, &mut z, dt, k)?;
        out.push(point(k as f64 * dt, z));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Largest single-step increase (negative when strictly decreasing).
    pub max_increase: f64,
    /// Index of the first step whose increase exceeds `tol`.
    pub first_violation: Option<usize>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn descent_along_trajectory(series: &[f64], tol: f64) -> MonotonicityReport {
    let mut max_increase = f64::NEG_INFINITY;
    let mut first_violation = None;
    for (i, w) in series.windows(2).enumerate() {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        if inc > tol && first_violation.is_none() {
            first_violation = Some(i + 1);
        }
    }
    if series.len() < 2 {
        max_increase = 0.0;
    }
    MonotonicityReport {
        max_increase,
        first_violation,
    }
}

/// Oja end-state diagnostics against the principal eigenvector of `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OjaReport {
    pub final_w: [f64; 2],
    pub angle_to_principal: f64,
    pub norm_error: f64,
    pub descent: MonotonicityReport,
}

/// Principal eigenvector of a symmetric 2x2 matrix (closed form).
pub fn principal_eigenvector(c: &Sym2) -> [f64; 2] {
    let tr = c.c11 + c.c22;
    let det = c.c11 * c.c22 - c.c12 * c.c12;
    let lam = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    let v = if c.c12.abs() > 1e-300 {
        [c.c12, lam - c.c11]
    } else if c.c11 >= c.c22 {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

pub fn oja_report(c: &Sym2, traj: &[OjaPoint], tol: f64) -> OjaReport {
    let w = traj.last().map(|p| p.w).unwrap_or([0.0, 0.0]);
    let e = principal_eigenvector(c);
    let n = w[0].hypot(w[1]);
    // sign of w is arbitrary
    let cos = ((w[0] * e[0] + w[1] * e[1]).abs() / n).min(1.0);
    let vs: Vec<f64> = traj.iter().map(|p| p.v).collect();
    OjaReport {
        final_w: w,
        angle_to_principal: cos.acos(),
        norm_error: (n - 1.0).abs(),
        descent: descent_along_trajectory(&vs, tol),
    }
}
