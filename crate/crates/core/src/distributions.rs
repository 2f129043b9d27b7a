//! Outcome distributions for photon counting and homodyne detection, together
//! with their derivatives with respect to the absorbance.

pub mod hermite;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    binomial_thinning, ln_factorials, loss_moments, perturb_state, tpa_vectors, LossSpec,
    PerturbedState,
};
use crate::error::{Result, TpaError};
use crate::fock::{FieldMoments, FockCutoff, ProbeSpec};

/// Photon-number distribution, index = photon count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    p: Vec<f64>,
}

const NEG_CLIP: f64 = -1e-14;

impl Pmf {
    /// Validates entries (`≥ −1e-14`, then clipped to zero) and normalisation
    /// within `tail_tol`.
    pub fn new(mut p: Vec<f64>, tail_tol: f64) -> Result<Self> {
        for v in p.iter_mut() {
            if !v.is_finite() || *v < NEG_CLIP {
                return Err(TpaError::Numerical(format!(
                    "probability {v} is not admissible"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > tail_tol {
            return Err(TpaError::Numerical(format!("probabilities sum to {total}")));
        }
        Ok(Self { p })
    }

    /// Wraps a vector after clipping tiny negatives; no normalisation check.
    pub fn from_vec_unchecked(mut p: Vec<f64>) -> Self {
        for v in p.iter_mut() {
            if *v < 0.0 && *v >= NEG_CLIP {
                *v = 0.0;
            }
        }
        Self { p }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, v)| n as f64 * v).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.p
            .iter()
            .enumerate()
            .map(|(n, v)| (n as f64 - m).powi(2) * v)
            .sum()
    }
}

/// `P_{2k} = C(2k,k)/4^k · n̄^k/(1+n̄)^{k+1/2}`, odd entries zero.
pub fn sv_pmf_closed_form(nbar: f64, n_max: usize) -> Result<Pmf> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(TpaError::param(format!(
            "mean photon number must be >= 0, got {nbar}"
        )));
    }
    let mut p = vec![0.0; n_max + 1];
    if nbar == 0.0 {
        p[0] = 1.0;
        return Ok(Pmf { p });
    }
    let lf = ln_factorials(n_max);
    let ratio = (nbar / (1.0 + nbar)).ln();
    let base = -0.5 * (1.0 + nbar).ln();
    for m in (0..=n_max).step_by(2) {
        let k = m / 2;
        let lc = lf[m] - 2.0 * lf[k] - k as f64 * 4f64.ln();
        p[m] = (lc + k as f64 * ratio + base).exp();
    }
    Ok(Pmf { p })
}

/// Poisson distribution with mean `nbar`, truncated at `n_max`.
pub fn coherent_pmf(nbar: f64, n_max: usize) -> Result<Pmf> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(TpaError::param(format!(
            "mean photon number must be >= 0, got {nbar}"
        )));
    }
    let mut p = vec![0.0; n_max + 1];
    if nbar == 0.0 {
        p[0] = 1.0;
        return Ok(Pmf { p });
    }
    let lf = ln_factorials(n_max);
    let ln = nbar.ln();
    for (m, v) in p.iter_mut().enumerate() {
        *v = (-nbar + m as f64 * ln - lf[m]).exp();
    }
    Ok(Pmf { p })
}

/// Detected photon-number distribution and its absorbance derivative.
pub fn pmf_with_derivative(
    spec: &ProbeSpec,
    loss: &LossSpec,
    cutoff: &FockCutoff,
) -> Result<(Pmf, Vec<f64>)> {
    let ps = perturb_state(spec, cutoff)?;
    Ok(pmf_with_derivative_from(&ps, loss))
}

pub fn pmf_with_derivative_from(ps: &PerturbedState, loss: &LossSpec) -> (Pmf, Vec<f64>) {
    let (p, dp) = ps.populations();
    let mut out = binomial_thinning(&[&p, &dp], loss.eta());
    let dp = out.pop().unwrap_or_default();
    let p = out.pop().unwrap_or_default();
    (Pmf::from_vec_unchecked(p), dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

/// Output grid for quadrature densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadGridSpec {
    /// Number of grid points (≥ 3).
    pub points: usize,
    /// Fixed half-width; `None` picks `width_sigmas·σ + |μ|` of the detected
    /// distribution.
    pub half_width: Option<f64>,
    pub width_sigmas: f64,
}

impl Default for QuadGridSpec {
    fn default() -> Self {
        Self {
            points: 2001,
            half_width: None,
            width_sigmas: 8.0,
        }
    }
}

/// Density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadPdf {
    grid: Vec<f64>,
    density: Vec<f64>,
    dq: f64,
    quadrature: Quadrature,
}

impl QuadPdf {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, quadrature: Quadrature) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(TpaError::DimensionMismatch {
                expected: grid.len(),
                found: density.len(),
            });
        }
        let dq = grid[1] - grid[0];
        let uniform = grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dq).abs() <= 1e-9 * dq.abs().max(1.0));
        if !(dq > 0.0 && uniform) {
            return Err(TpaError::param(
                "quadrature grid must be uniform and increasing",
            ));
        }
        Ok(Self {
            grid,
            density,
            dq,
            quadrature,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    /// Trapezoid weights of the grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.grid.len(), self.dq)
    }

    /// `∫ q^k f(q) dq` by the trapezoid rule.
    pub fn moment(&self, k: i32) -> f64 {
        self.grid
            .iter()
            .zip(&self.density)
            .zip(self.weights())
            .map(|((q, f), w)| q.powi(k) * f * w)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.moment(0)
    }
}

fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if len > 0 {
        w[0] = h / 2.0;
        w[len - 1] = h / 2.0;
    }
    w
}

const MASS_TOL: f64 = 1e-6;

/// Detected quadrature density and its absorbance derivative.
pub fn quad_pdf_with_derivative(
    spec: &ProbeSpec,
    loss: &LossSpec,
    which: Quadrature,
    grid: &QuadGridSpec,
    cutoff: &FockCutoff,
) -> Result<(QuadPdf, QuadPdf)> {
    let ps = perturb_state(spec, cutoff)?;
    quad_pdf_from_state(&ps, loss, which, grid)
}

/// Same as [`quad_pdf_with_derivative`] for an already perturbed state.
///
/// Lossless densities are `P₀(x) = ⟨x|ρ|x⟩`; loss rescales by `√η` and
/// convolves with the vacuum noise of variance `(1−η)/2`, evaluated by
/// trapezoid quadrature on an internal grid.
pub fn quad_pdf_from_state(
    ps: &PerturbedState,
    loss: &LossSpec,
    which: Quadrature,
    grid: &QuadGridSpec,
) -> Result<(QuadPdf, QuadPdf)> {
    if grid.points < 3 {
        return Err(TpaError::param("quadrature grid needs at least 3 points"));
    }
    let eta = loss.eta();
    let evaluator = LosslessDensity::new(ps, which);
    let (mean0, var0) = evaluator.lossless_mean_var();
    let sd0 = var0.max(0.0).sqrt();
    let mean_d = eta.sqrt() * mean0;
    let var_d = eta * var0 + 0.5 * (1.0 - eta);
    let half = match grid.half_width {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(TpaError::param(format!(
                "grid half-width must be positive, got {h}"
            )))
        }
        None => grid.width_sigmas * var_d.sqrt() + mean_d.abs(),
    };
    let dq = 2.0 * half / (grid.points - 1) as f64;
    let qs: Vec<f64> = (0..grid.points).map(|j| -half + j as f64 * dq).collect();

    let (density, deriv) = if eta == 1.0 {
        evaluator.eval(&qs)
    } else {
        let noise_sd = (0.5 * (1.0 - eta)).sqrt();
        let mut h = sd0 / 16.0;
        if eta > 0.0 {
            h = h.min(noise_sd / (8.0 * eta.sqrt()));
        }
        if let Some(n_eff) = evaluator.oscillation_levels() {
            h = h.min(0.25 / (2.0 * n_eff + 1.0).sqrt());
        }
        let lo = mean0 - 12.0 * sd0;
        let count = ((24.0 * sd0 / h).ceil() as usize).max(2) + 1;
        let xs: Vec<f64> = (0..count).map(|i| lo + i as f64 * h).collect();
        let (p0, dp0) = evaluator.eval(&xs);
        let wx = trapezoid_weights(count, h);
        let f0: Vec<f64> = p0.iter().zip(&wx).map(|(p, w)| p * w).collect();
        let f1: Vec<f64> = dp0.iter().zip(&wx).map(|(p, w)| p * w).collect();
        let se = eta.sqrt();
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * noise_sd);
        let inv = 1.0 / (2.0 * noise_sd * noise_sd);
        let reach = 40.0 * noise_sd;
        qs.par_iter()
            .map(|&q| {
                let (mut a, mut b) = (0.0, 0.0);
                for ((x, u), v) in xs.iter().zip(&f0).zip(&f1) {
                    let d = q - se * x;
                    if d.abs() > reach {
                        continue;
                    }
                    let k = norm * (-d * d * inv).exp();
                    a += k * u;
                    b += k * v;
                }
                (a, b)
            })
            .unzip()
    };

    let pdf = QuadPdf::new(qs.clone(), density, which)?;
    let mass = pdf.integral();
    let retained: f64 = ps.populations().0.iter().sum();
    if mass < retained - MASS_TOL {
        return Err(TpaError::GridTooNarrow {
            missing: retained - mass,
        });
    }
    if mass > retained + MASS_TOL {
        return Err(TpaError::Numerical(format!(
            "quadrature density integrates to {mass}"
        )));
    }
    Ok((pdf, QuadPdf::new(qs, deriv, which)?))
}

/// Pointwise `P₀(x)` and `∂P₀(x)` in the requested quadrature.
enum LosslessDensity {
    Pure {
        psi: Vec<C64>,
        gain: Vec<C64>,
        chi: Vec<C64>,
    },
    Dense {
        rho: Array2<C64>,
        drho: Array2<C64>,
    },
}

impl LosslessDensity {
    fn new(ps: &PerturbedState, which: Quadrature) -> Self {
        // q-distribution of e^{−iπn̂/2}ρe^{iπn̂/2} is the p-distribution of ρ.
        let phase = |n: usize| match which {
            Quadrature::Q => C64::new(1.0, 0.0),
            Quadrature::P => [
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
            ][n % 4],
        };
        match ps.pure_state() {
            Some(state) => {
                let psi: Vec<C64> = state
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c * phase(n))
                    .collect();
                let (gain, chi) = tpa_vectors(&psi);
                LosslessDensity::Pure { psi, gain, chi }
            }
            None => {
                let rot = |m: &Array2<C64>| {
                    let d = m.nrows();
                    Array2::from_shape_fn((d, d), |(i, j)| m[[i, j]] * phase(i) * phase(j).conj())
                };
                LosslessDensity::Dense {
                    rho: rot(ps.rho0().matrix()),
                    drho: rot(&ps.drho()),
                }
            }
        }
    }

    fn lossless_mean_var(&self) -> (f64, f64) {
        let m = match self {
            LosslessDensity::Pure { psi, .. } => FieldMoments::of(
                &crate::fock::StateVector::from_amplitudes(psi.clone()).expect("normalised"),
            ),
            LosslessDensity::Dense { rho, .. } => FieldMoments::of(rho),
        };
        let mean = m.mean_q() / m.trace;
        (mean, m.second_q() / m.trace - mean * mean)
    }

    /// Fock scale whose Hermite oscillations a general mixed state may carry.
    fn oscillation_levels(&self) -> Option<f64> {
        match self {
            LosslessDensity::Pure { .. } => None,
            LosslessDensity::Dense { rho, .. } => Some((rho.nrows() - 1) as f64),
        }
    }

    fn eval(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            LosslessDensity::Pure { psi, gain, chi } => xs
                .par_iter()
                .map(|&x| {
                    let s = hermite::expand(&[psi, gain, chi], x);
                    let p = s[0].norm_sqr();
                    let dp = 0.5 * s[1].norm_sqr() - 0.5 * (s[2] * s[0].conj()).re;
                    (p, dp)
                })
                .unzip(),
            LosslessDensity::Dense { rho, drho } => xs
                .par_iter()
                .map(|&x| {
                    let h = hermite::hermite_functions(rho.nrows() - 1, x);
                    let form = |m: &Array2<C64>| {
                        let mut acc = 0.0;
                        for (i, hi) in h.iter().enumerate() {
                            for (j, hj) in h.iter().enumerate() {
                                acc += m[[i, j]].re * hi * hj;
                            }
                        }
                        acc
                    };
                    (form(rho), form(drho))
                })
                .unzip(),
        }
    }
}

/// Quadrature mean and variance after loss, computed operator-side.
pub fn detected_quadrature_moments(
    ps: &PerturbedState,
    loss: &LossSpec,
    which: Quadrature,
) -> (f64, f64) {
    let (m0, _) = ps.field_moments();
    let m = loss_moments(&m0, loss);
    let (mean, second) = match which {
        Quadrature::Q => (m.mean_q(), m.second_q()),
        Quadrature::P => (m.mean_p(), m.second_p()),
    };
    (mean, second - mean * mean)
}
