//! Cocycles with closed-form propagators and Oseledets splittings.

use std::f64::consts::PI;

use super::{check_overflow, Cocycle, LyapunovSpectrum, OseledetsData};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::pattern::DegeneracyPattern;
use crate::subspace::Subspace;
use crate::time::TimeDomain;

/// Rotation of the plane by `2π x`.
pub fn rotation(x: f64) -> Mat {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `Φ(t, ω) = diag(e^{t λ_1}, ..., e^{t λ_d})`, independent of `ω`.
#[derive(Debug, Clone)]
pub struct DiagonalCocycle {
    lambdas: Vec<f64>,
    domain: TimeDomain,
}

pub fn diagonal_cocycle(lambdas: &[f64], domain: TimeDomain) -> Result<DiagonalCocycle> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("diagonal cocycle needs at least one exponent".into()));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(DiagonalCocycle { lambdas: lambdas.to_vec(), domain })
}

impl DiagonalCocycle {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Distinct exponents in decreasing order, each with the coordinate axes carrying it.
    fn groups(&self) -> Vec<(f64, Vec<usize>)> {
        let mut order: Vec<usize> = (0..self.lambdas.len()).collect();
        order.sort_by(|&a, &b| self.lambdas[b].total_cmp(&self.lambdas[a]));
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some((l, axes)) if *l == self.lambdas[i] => axes.push(i),
                _ => groups.push((self.lambdas[i], vec![i])),
            }
        }
        groups
    }

    pub fn spectrum(&self) -> LyapunovSpectrum {
        let groups = self.groups();
        let pattern = DegeneracyPattern::new(groups.iter().map(|g| g.1.len()).collect()).expect("nonempty groups");
        LyapunovSpectrum::new(groups.iter().map(|g| g.0).collect(), pattern).expect("distinct sorted exponents")
    }
}

impl Cocycle for DiagonalCocycle {
    type State = f64;

    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    fn flow(&self, t: f64, omega: &f64) -> Result<f64> {
        self.domain.check(t)?;
        Ok(omega + t)
    }

    fn propagate(&self, t: f64, _omega: &f64) -> Result<Mat> {
        self.domain.check(t)?;
        let m = Mat::from_diagonal(&Vector::from_iterator(self.lambdas.len(), self.lambdas.iter().map(|l| (l * t).exp())));
        check_overflow(&m, t)?;
        Ok(m)
    }

    fn oseledets(&self, _omega: &f64) -> Result<OseledetsData> {
        let d = self.dim();
        let spaces = self.groups().iter().map(|(_, axes)| Subspace::coordinate(d, axes)).collect();
        OseledetsData::new(self.spectrum(), spaces)
    }
}

/// `Φ(t, ω) = R(ω + t) diag(e^{t λ_1}, e^{t λ_2}) R(-ω)` over the circle flow
/// `θ_t ω = ω + t mod 1`, so that `E_i(ω) = span(R(ω) e_i)`.
#[derive(Debug, Clone)]
pub struct RotatingCocycle {
    lambda1: f64,
    lambda2: f64,
    domain: TimeDomain,
}

pub fn rotating_cocycle(lambda1: f64, lambda2: f64, domain: TimeDomain) -> Result<RotatingCocycle> {
    if !(lambda1.is_finite() && lambda2.is_finite()) {
        return Err(Error::NonFinite);
    }
    if lambda1 <= lambda2 {
        return Err(Error::InvalidArgument(format!("need lambda1 > lambda2, got {lambda1} <= {lambda2}")));
    }
    Ok(RotatingCocycle { lambda1, lambda2, domain })
}

impl RotatingCocycle {
    pub fn spectrum(&self) -> LyapunovSpectrum {
        LyapunovSpectrum::new(vec![self.lambda1, self.lambda2], DegeneracyPattern::simple(2)).expect("ordered")
    }
}

impl Cocycle for RotatingCocycle {
    type State = f64;

    fn dim(&self) -> usize {
        2
    }

    fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    fn flow(&self, t: f64, omega: &f64) -> Result<f64> {
        self.domain.check(t)?;
        Ok((omega + t).rem_euclid(1.0))
    }

    fn propagate(&self, t: f64, omega: &f64) -> Result<Mat> {
        let end = self.flow(t, omega)?;
        let d = Mat::from_row_slice(2, 2, &[(self.lambda1 * t).exp(), 0.0, 0.0, (self.lambda2 * t).exp()]);
        let m = rotation(end) * d * rotation(-omega);
        check_overflow(&m, t)?;
        Ok(m)
    }

    fn oseledets(&self, omega: &f64) -> Result<OseledetsData> {
        let r = rotation(*omega);
        let spaces = vec![
            Subspace::from_vector(&r.column(0).into_owned())?,
            Subspace::from_vector(&r.column(1).into_owned())?,
        ];
        OseledetsData::new(self.spectrum(), spaces)
    }
}

/// Mixing matrix for the four-dimensional degenerate cocycle; condition number about 3.1.
const MIXING: [f64; 16] = [
    1.0, 0.3, -0.2, 0.1, //
    0.2, 1.0, 0.1, -0.3, //
    -0.1, 0.2, 1.0, 0.25, //
    0.3, -0.1, 0.2, 1.0,
];

/// A degenerate exponent with inner rotation:
/// `Φ(t, ω) = e^{t λ_1} R(s (ω + t)) R(-s ω)` on `R^2`, where `s` is the
/// rotation speed. With a second exponent `λ_2 < λ_1` the plane is paired with
/// a block `e^{t λ_2} I_2` and both are mixed by a fixed invertible matrix `S`.
#[derive(Debug, Clone)]
pub struct DegenerateRotatingCocycle {
    lambda1: f64,
    rot_speed: f64,
    lambda2: Option<f64>,
    domain: TimeDomain,
    mixing: Mat,
    mixing_inv: Mat,
}

pub fn degenerate_rotating_cocycle(
    lambda1: f64,
    rot_speed: f64,
    lambda2: Option<f64>,
    domain: TimeDomain,
) -> Result<DegenerateRotatingCocycle> {
    if !(lambda1.is_finite() && rot_speed.is_finite() && lambda2.is_none_or(f64::is_finite)) {
        return Err(Error::NonFinite);
    }
    if let Some(l2) = lambda2 {
        if l2 >= lambda1 {
            return Err(Error::InvalidArgument(format!("need lambda2 < lambda1, got {l2} >= {lambda1}")));
        }
    }
    let mixing = Mat::from_row_slice(4, 4, &MIXING);
    let mixing_inv = mixing.clone().try_inverse().expect("mixing matrix is invertible");
    Ok(DegenerateRotatingCocycle { lambda1, rot_speed, lambda2, domain, mixing, mixing_inv })
}

impl DegenerateRotatingCocycle {
    pub fn spectrum(&self) -> LyapunovSpectrum {
        match self.lambda2 {
            None => LyapunovSpectrum::new(vec![self.lambda1], DegeneracyPattern::new(vec![2]).unwrap()),
            Some(l2) => LyapunovSpectrum::new(vec![self.lambda1, l2], DegeneracyPattern::new(vec![2, 2]).unwrap()),
        }
        .expect("ordered")
    }

    pub fn mixing(&self) -> &Mat {
        &self.mixing
    }
}

impl Cocycle for DegenerateRotatingCocycle {
    type State = f64;

    fn dim(&self) -> usize {
        if self.lambda2.is_some() { 4 } else { 2 }
    }

    fn time_domain(&self) -> TimeDomain {
        self.domain
    }

    fn flow(&self, t: f64, omega: &f64) -> Result<f64> {
        self.domain.check(t)?;
        Ok(omega + t)
    }

    fn propagate(&self, t: f64, omega: &f64) -> Result<Mat> {
        self.domain.check(t)?;
        let s = self.rot_speed;
        let block = rotation(s * (omega + t)) * rotation(-s * omega) * (self.lambda1 * t).exp();
        let m = match self.lambda2 {
            None => block,
            Some(l2) => {
                let mut inner = Mat::zeros(4, 4);
                inner.view_mut((0, 0), (2, 2)).copy_from(&block);
                inner[(2, 2)] = (l2 * t).exp();
                inner[(3, 3)] = (l2 * t).exp();
                &self.mixing * inner * &self.mixing_inv
            }
        };
        check_overflow(&m, t)?;
        Ok(m)
    }

    fn oseledets(&self, _omega: &f64) -> Result<OseledetsData> {
        let spaces = match self.lambda2 {
            None => vec![Subspace::full(2)],
            Some(_) => vec![
                Subspace::span(&self.mixing.columns(0, 2).into_owned())?,
                Subspace::span(&self.mixing.columns(2, 2).into_owned())?,
            ],
        };
        OseledetsData::new(self.spectrum(), spaces)
    }
}
