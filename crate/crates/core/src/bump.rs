//! The common bump function and its symbolic derivatives.
//!
//! The base shape is `exp(-1/(1-(2x-1)^2)) = exp(-1/(4x(1-x)))` on (0,1),
//! zero at the endpoints, normalized so the integral over [0,1] is one.
//! Derivatives follow the closed form `b0^(k) = P_k/(4^k d^{2k}) * b0` with
//! `d = x(1-x)` and the integer polynomial recurrence
//! `P_{k+1} = 4 d (P_k' d - 2k P_k d') + d' P_k`, evaluated in binary64.
//! Endpoint derivatives are exactly zero at every order.

use crate::quad::{integrate, QuadResult};
use thiserror::Error;

/// Highest supported derivative order.
pub const K_MAX: usize = 6;

/// Quadrature tolerance for the normalization constant.
const Z_TOL: f64 = 1e-12;

/// Below this distance from an endpoint the exponential factor is far under
/// binary64 resolution, so derivatives evaluate to zero directly.
const EDGE_GUARD: f64 = 1e-6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BumpError {
    #[error("input {0} outside [0, 1]")]
    OutsideDomain(String),
    #[error("derivative order {0} above the supported maximum {K_MAX}")]
    UnsupportedOrder(usize),
}

/// Normalized bump function with certified normalization and sup norms of
/// its derivatives measured on a recorded probe grid.
#[derive(Clone, Debug)]
pub struct BumpFunction {
    z: f64,
    z_error: f64,
    /// `deriv_polys[k]` holds the coefficients of `P_k`, ascending degree.
    deriv_polys: Vec<Vec<f64>>,
    /// `sup_norms[k]` is the probe-grid maximum of `|b^(k)|`.
    sup_norms: Vec<f64>,
    probe_count: usize,
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j]
                .checked_add(x.checked_mul(y).expect("coefficient overflow"))
                .expect("coefficient overflow");
        }
    }
    out
}

fn poly_add(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_scale(a: &[i64], c: i64) -> Vec<i64> {
    a.iter()
        .map(|&x| x.checked_mul(c).expect("coefficient overflow"))
        .collect()
}

fn poly_derivative(a: &[i64]) -> Vec<i64> {
    if a.len() <= 1 {
        return vec![0];
    }
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as i64)
        .collect()
}

/// The integer polynomials `P_0..P_k_max` of the derivative closed form.
fn derivative_polynomials(k_max: usize) -> Vec<Vec<i64>> {
    let d = [0i64, 1, -1]; // x - x^2
    let dp = [1i64, -2]; // 1 - 2x
    let mut polys: Vec<Vec<i64>> = vec![vec![1]];
    for k in 0..k_max {
        let pk = &polys[k];
        let inner = poly_add(
            &poly_mul(&poly_derivative(pk), &d),
            &poly_scale(&poly_mul(pk, &dp), -2 * k as i64),
        );
        let next = poly_add(&poly_scale(&poly_mul(&d, &inner), 4), &poly_mul(&dp, pk));
        polys.push(next);
    }
    polys
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Unnormalized base shape.
fn base_shape(x: f64) -> f64 {
    let d = x * (1.0 - x);
    if d <= EDGE_GUARD {
        0.0
    } else {
        (-1.0 / (4.0 * d)).exp()
    }
}

impl BumpFunction {
    pub fn new() -> Self {
        Self::with_probe_count(20_001)
    }

    /// `probe_count` controls the density of the norm-measuring grid; it is
    /// recorded in the instance.
    pub fn with_probe_count(probe_count: usize) -> Self {
        let polys_int = derivative_polynomials(K_MAX);
        let deriv_polys: Vec<Vec<f64>> = polys_int
            .iter()
            .map(|p| p.iter().map(|&c| c as f64).collect())
            .collect();
        let QuadResult {
            value: z,
            error_bound: z_error,
            ..
        } = integrate(&base_shape, 0.0, 1.0, Z_TOL);
        let mut bump = BumpFunction {
            z,
            z_error,
            deriv_polys,
            sup_norms: Vec::new(),
            probe_count,
        };
        let mut norms = vec![0.0f64; K_MAX + 1];
        for i in 1..probe_count {
            let x = i as f64 / probe_count as f64;
            for (k, norm) in norms.iter_mut().enumerate() {
                let v = bump.deriv_unchecked(x, k).abs();
                if v > *norm {
                    *norm = v;
                }
            }
        }
        bump.sup_norms = norms;
        bump
    }

    /// Normalization constant `Z` with `b = base/Z`.
    pub fn normalization(&self) -> f64 {
        self.z
    }

    /// Certified bound on the quadrature error of `Z`.
    pub fn normalization_error(&self) -> f64 {
        self.z_error
    }

    pub fn probe_count(&self) -> usize {
        self.probe_count
    }

    pub fn eval(&self, x: f64) -> Result<f64, BumpError> {
        self.deriv(x, 0)
    }

    /// `b^(k)(x)`; exactly zero at the endpoints for every order.
    pub fn deriv(&self, x: f64, k: usize) -> Result<f64, BumpError> {
        if k > K_MAX {
            return Err(BumpError::UnsupportedOrder(k));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(BumpError::OutsideDomain(format!("{x}")));
        }
        Ok(self.deriv_unchecked(x, k))
    }

    fn deriv_unchecked(&self, x: f64, k: usize) -> f64 {
        let d = x * (1.0 - x);
        if d <= EDGE_GUARD {
            return 0.0;
        }
        let base = (-1.0 / (4.0 * d)).exp() / self.z;
        if k == 0 {
            return base;
        }
        let p = horner(&self.deriv_polys[k], x);
        let scale = 4f64.powi(k as i32) * d.powi(2 * k as i32);
        p / scale * base
    }

    /// Probe-grid sup norm of `|b^(k)|`.
    pub fn sup_norm(&self, k: usize) -> Result<f64, BumpError> {
        self.sup_norms
            .get(k)
            .copied()
            .ok_or(BumpError::UnsupportedOrder(k))
    }

    /// Fresh adaptive quadrature of the normalized bump over [0,1]; the
    /// certified deviation from one combines both quadrature error bounds.
    pub fn normalization_check(&self) -> (f64, f64) {
        let r = integrate(&|x| self.deriv_unchecked(x, 0), 0.0, 1.0, 1e-11);
        let bound = r.error_bound + self.z_error / self.z;
        ((r.value - 1.0).abs(), bound)
    }

    /// Integral of the normalized bump from 0 to `u`, certified to `tol`.
    pub fn integral_to(&self, u: f64, tol: f64) -> QuadResult {
        integrate(&|x| self.deriv_unchecked(x, 0), 0.0, u, tol)
    }
}

impl Default for BumpFunction {
    fn default() -> Self {
        Self::new()
    }
}
