//! Tangent-linear cocycle of the Lorenz-63 system along a reference orbit.

use std::sync::RwLock;

use nalgebra::{Matrix3, Vector3};

use super::{check_overflow, Cocycle};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::time::TimeDomain;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    /// Fixed RK4 step; requested times are rounded to multiples of it.
    pub step: f64,
    /// Time integrated from `(1, 1, 1)` and discarded before the orbit origin.
    pub transient: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, step: 1e-3, transient: 100.0 }
    }
}

/// States are orbit times `τ >= 0` measured from the end of the transient.
/// The reference orbit is integrated lazily and cached behind a lock, so the
/// cocycle can be shared between threads.
#[derive(Debug)]
pub struct Lorenz63 {
    params: Lorenz63Params,
    orbit: RwLock<Vec<Vector3<f64>>>,
}

pub fn lorenz63(params: Lorenz63Params) -> Result<Lorenz63> {
    let Lorenz63Params { sigma, rho, beta, step, transient } = params;
    if ![sigma, rho, beta, step, transient].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(step > 0.0) || transient < 0.0 {
        return Err(Error::InvalidArgument("step must be positive and transient non-negative".into()));
    }
    let c = Lorenz63 { params, orbit: RwLock::new(Vec::new()) };
    let mut x = Vector3::new(1.0, 1.0, 1.0);
    for _ in 0..(transient / step).round() as usize {
        x = c.rk4(&x);
    }
    c.orbit.write().expect("fresh lock").push(x);
    Ok(c)
}

impl Lorenz63 {
    pub fn params(&self) -> &Lorenz63Params {
        &self.params
    }

    pub fn vector_field(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let Lorenz63Params { sigma, rho, beta, .. } = self.params;
        Vector3::new(sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2])
    }

    pub fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let Lorenz63Params { sigma, rho, beta, .. } = self.params;
        Matrix3::new(-sigma, sigma, 0.0, rho - x[2], -1.0, -x[0], x[1], x[0], -beta)
    }

    /// Trace of the Jacobian, `-(σ + 1 + β)` everywhere.
    pub fn divergence(&self) -> f64 {
        -(self.params.sigma + 1.0 + self.params.beta)
    }

    fn rk4(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let h = self.params.step;
        let k1 = self.vector_field(x);
        let k2 = self.vector_field(&(x + k1 * (h / 2.0)));
        let k3 = self.vector_field(&(x + k2 * (h / 2.0)));
        let k4 = self.vector_field(&(x + k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn index_of(&self, omega: f64) -> Result<usize> {
        let k = (omega / self.params.step).round();
        if !omega.is_finite() || k < 0.0 {
            return Err(Error::OrbitOutOfRange(omega));
        }
        Ok(k as usize)
    }

    fn ensure(&self, last: usize) {
        if self.orbit.read().expect("orbit lock").len() > last {
            return;
        }
        let mut orbit = self.orbit.write().expect("orbit lock");
        let target = last.max(2 * orbit.len());
        while orbit.len() <= target {
            let next = self.rk4(orbit.last().expect("orbit has an origin"));
            orbit.push(next);
        }
    }

    /// Point of the reference orbit at state `omega`.
    pub fn point(&self, omega: f64) -> Result<Vector3<f64>> {
        let k = self.index_of(omega)?;
        self.ensure(k);
        Ok(self.orbit.read().expect("orbit lock")[k])
    }

    /// RK4 for the variational equation `Y' = J(x(t)) Y` over `n` steps from orbit index `k0`.
    fn tangent(&self, k0: usize, n: usize) -> Matrix3<f64> {
        self.ensure(k0 + n);
        let orbit = self.orbit.read().expect("orbit lock");
        let h = self.params.step;
        let mut y = Matrix3::identity();
        for x in &orbit[k0..k0 + n] {
            let f1 = self.vector_field(x);
            let x2 = x + f1 * (h / 2.0);
            let f2 = self.vector_field(&x2);
            let x3 = x + f2 * (h / 2.0);
            let f3 = self.vector_field(&x3);
            let x4 = x + f3 * h;
            let k1 = self.jacobian(x) * y;
            let k2 = self.jacobian(&x2) * (y + k1 * (h / 2.0));
            let k3 = self.jacobian(&x3) * (y + k2 * (h / 2.0));
            let k4 = self.jacobian(&x4) * (y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        y
    }
}

impl Cocycle for Lorenz63 {
    type State = f64;

    fn dim(&self) -> usize {
        3
    }

    fn time_domain(&self) -> TimeDomain {
        TimeDomain::Continuous { base_step: self.params.step }
    }

    fn flow(&self, t: f64, omega: &f64) -> Result<f64> {
        let end = omega + t;
        self.index_of(end)?;
        Ok(end)
    }

    fn propagate(&self, t: f64, omega: &f64) -> Result<Mat> {
        if !t.is_finite() {
            return Err(Error::InvalidTime { time: t });
        }
        let k0 = self.index_of(*omega)? as i64;
        let n = (t / self.params.step).round() as i64;
        let y = if n >= 0 {
            self.tangent(k0 as usize, n as usize)
        } else {
            let start = k0 + n;
            if start < 0 {
                return Err(Error::OrbitOutOfRange(omega + t));
            }
            let fwd = self.tangent(start as usize, (-n) as usize);
            fwd.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?
        };
        let m = Mat::from_iterator(3, 3, y.iter().copied());
        check_overflow(&m, t)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system() -> Lorenz63 {
        lorenz63(Lorenz63Params { transient: 10.0, ..Default::default() }).unwrap()
    }

    #[test]
    fn jacobian_trace_is_constant_divergence() {
        let c = system();
        for tau in [0.0, 1.3, 7.9] {
            let x = c.point(tau).unwrap();
            assert!((c.jacobian(&x).trace() - c.divergence()).abs() < 1e-12);
        }
        assert!((c.divergence() + 13.0 + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = system();
        let x = c.point(2.0).unwrap();
        let j = c.jacobian(&x);
        let eps = 1e-6;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = eps;
            let fd = (c.vector_field(&(x + e)) - c.vector_field(&(x - e))) / (2.0 * eps);
            assert!((fd - j.column(k)).amax() < 1e-6);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let c = system();
        assert_eq!(c.propagate(0.0, &3.0).unwrap(), Mat::identity(3, 3));
    }

    #[test]
    fn composition_matches_one_shot() {
        let c = system();
        let (s, t, w) = (0.7, 0.4, 1.1);
        let one = c.propagate(s + t, &w).unwrap();
        let two = c.propagate(s, &c.flow(t, &w).unwrap()).unwrap() * c.propagate(t, &w).unwrap();
        let rel = (&one - two).amax() / one.amax();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn flow_direction_is_covariant() {
        // Φ(t, ω) f(x(ω)) = f(x(θ_t ω)) up to integration error.
        let c = system();
        let w = 2.0;
        let m = c.propagate(0.5, &w).unwrap();
        let f0 = c.vector_field(&c.point(w).unwrap());
        let f1 = c.vector_field(&c.point(w + 0.5).unwrap());
        let image = m * crate::linalg::Vector::from_column_slice(f0.as_slice());
        let rel = (image - crate::linalg::Vector::from_column_slice(f1.as_slice())).norm() / f1.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn past_of_origin_is_out_of_range() {
        let c = system();
        assert!(matches!(c.propagate(-2.0, &1.0), Err(Error::OrbitOutOfRange(_))));
        let back = c.propagate(-1.0, &1.0).unwrap();
        let fwd = c.propagate(1.0, &0.0).unwrap();
        assert!((back * fwd - Mat::identity(3, 3)).amax() < 1e-9);
    }
}
