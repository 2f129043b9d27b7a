//! Single-mode states and operators in a truncated photon-number basis.
//!
//! Quadratures follow `q = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so the vacuum has
//! `Var(q) = Var(p) = 1/2`. The squeezing operator is
//! `S(ζ) = exp((ζ/2)a†² − (ζ*/2)a²)` with `ζ = r e^{iφ_r}`; for `φ_r = 0` the
//! `p` quadrature is squeezed and `q` anti-squeezed.

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TpaError};

/// Default admissible population outside the retained Fock levels.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
/// Default upper bound for adaptively grown cutoffs.
pub const DEFAULT_CUTOFF_CAP: usize = 4096;

/// Input state `S(ζ)D(α)|0⟩`: a coherent seed displaced first, then squeezed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    r: f64,
    phi_r: f64,
    alpha_abs: f64,
    phi: f64,
}

impl ProbeSpec {
    pub fn new(r: f64, phi_r: f64, alpha_abs: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(TpaError::param(format!(
                "squeezing r must be finite and >= 0, got {r}"
            )));
        }
        if !(alpha_abs.is_finite() && alpha_abs >= 0.0) {
            return Err(TpaError::param(format!(
                "coherent amplitude |alpha| must be finite and >= 0, got {alpha_abs}"
            )));
        }
        if !(phi_r.is_finite() && phi.is_finite()) {
            return Err(TpaError::param("phases must be finite"));
        }
        Ok(Self {
            r,
            phi_r: phi_r.rem_euclid(TAU),
            alpha_abs,
            phi: phi.rem_euclid(TAU),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            r: 0.0,
            phi_r: 0.0,
            alpha_abs: 0.0,
            phi: 0.0,
        }
    }

    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        Self::new(r, 0.0, 0.0, 0.0)
    }

    /// Squeezed vacuum with `sinh²r = n_r`.
    pub fn squeezed_vacuum_photons(n_r: f64) -> Result<Self> {
        if !(n_r.is_finite() && n_r >= 0.0) {
            return Err(TpaError::param(format!(
                "photon number must be >= 0, got {n_r}"
            )));
        }
        Self::squeezed_vacuum(n_r.sqrt().asinh())
    }

    pub fn coherent(alpha_abs: f64, phi: f64) -> Result<Self> {
        Self::new(0.0, 0.0, alpha_abs, phi)
    }

    /// Coherent state with `|α|² = nbar`.
    pub fn coherent_photons(nbar: f64, phi: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(TpaError::param(format!(
                "photon number must be >= 0, got {nbar}"
            )));
        }
        Self::coherent(nbar.sqrt(), phi)
    }

    /// Squeezed coherent state (`φ_r = 0`) whose incident photon number is
    /// `n_total`, with `n_r = sinh²r` of it coming from the squeezing and the
    /// seed amplitude chosen to supply the rest.
    pub fn with_incident_photons(n_total: f64, n_r: f64, phi: f64) -> Result<Self> {
        if !(n_r.is_finite() && n_r >= 0.0) {
            return Err(TpaError::param(format!(
                "squeezed photon number must be >= 0, got {n_r}"
            )));
        }
        if !(n_total.is_finite() && n_total >= n_r) {
            return Err(TpaError::param(format!(
                "incident photon number {n_total} is below the squeezed contribution {n_r}"
            )));
        }
        let r = n_r.sqrt().asinh();
        let gain = (2.0 * r).cosh() + (2.0 * phi).cos() * (2.0 * r).sinh();
        let alpha_sq = if n_total > n_r {
            (n_total - n_r) / gain
        } else {
            0.0
        };
        Self::new(r, 0.0, alpha_sq.sqrt(), phi)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi_r(&self) -> f64 {
        self.phi_r
    }

    pub fn alpha_abs(&self) -> f64 {
        self.alpha_abs
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.alpha_abs, self.phi)
    }

    pub fn zeta(&self) -> C64 {
        C64::from_polar(self.r, self.phi_r)
    }

    pub fn is_vacuum(&self) -> bool {
        self.r == 0.0 && self.alpha_abs == 0.0
    }

    /// `n_r = sinh²r`.
    pub fn squeezed_photons(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    pub(crate) fn mu(&self) -> f64 {
        self.r.cosh()
    }

    pub(crate) fn nu(&self) -> C64 {
        C64::from_polar(self.r.sinh(), self.phi_r)
    }

    /// `⟨a⟩ = cosh(r) α + sinh(r) e^{iφ_r} α*`.
    pub fn field_mean(&self) -> C64 {
        let a = self.alpha();
        a * self.mu() + self.nu() * a.conj()
    }

    /// Mean photon number before any loss.
    pub fn incident_photons(&self) -> f64 {
        self.field_mean().norm_sqr() + self.squeezed_photons()
    }
}

/// How the Fock cutoff may change while a state is being built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffGrowth {
    /// Use `n_max` as given and fail if the tail is too heavy.
    Fixed,
    /// Start from a heuristic size (at least `n_max`) and double up to `cap`.
    Adaptive { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCutoff {
    n_max: usize,
    tail_tol: f64,
    growth: CutoffGrowth,
}

impl FockCutoff {
    pub fn fixed(n_max: usize, tail_tol: f64) -> Result<Self> {
        check_tol(tail_tol)?;
        Ok(Self {
            n_max,
            tail_tol,
            growth: CutoffGrowth::Fixed,
        })
    }

    pub fn adaptive(tail_tol: f64) -> Result<Self> {
        check_tol(tail_tol)?;
        Ok(Self {
            n_max: 0,
            tail_tol,
            growth: CutoffGrowth::Adaptive {
                cap: DEFAULT_CUTOFF_CAP,
            },
        })
    }

    /// Caps adaptive growth. Has no effect on a fixed cutoff.
    pub fn with_cap(mut self, cap: usize) -> Self {
        if let CutoffGrowth::Adaptive { .. } = self.growth {
            self.growth = CutoffGrowth::Adaptive { cap };
        }
        self
    }

    /// Lower bound on the adaptive starting size.
    pub fn with_min(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn growth(&self) -> CutoffGrowth {
        self.growth
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self {
            n_max: 0,
            tail_tol: DEFAULT_TAIL_TOL,
            growth: CutoffGrowth::Adaptive {
                cap: DEFAULT_CUTOFF_CAP,
            },
        }
    }
}

fn check_tol(tail_tol: f64) -> Result<()> {
    if tail_tol.is_finite() && tail_tol > 0.0 && tail_tol < 1.0 {
        Ok(())
    } else {
        Err(TpaError::param(format!(
            "tail tolerance must lie in (0, 1), got {tail_tol}"
        )))
    }
}

/// Matrix-free view of an operator on the truncated Fock space.
pub trait FockOperator {
    fn dim(&self) -> usize;

    fn element(&self, row: usize, col: usize) -> C64;

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.element(n, n).re).collect()
    }

    fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// `tr(O a^k)`.
    fn lowering_expectation(&self, k: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for n in k..self.dim() {
            let w: f64 = ((n - k + 1)..=n).map(|j| j as f64).product::<f64>().sqrt();
            acc += self.element(n, n - k) * w;
        }
        acc
    }
}

/// Pure state amplitudes `c_n = ⟨n|ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amp: Vec<C64>,
    tail: f64,
}

impl StateVector {
    /// Wraps amplitudes; the tail is estimated as the missing norm.
    pub fn from_amplitudes(amp: Vec<C64>) -> Result<Self> {
        if amp.is_empty() {
            return Err(TpaError::param("state vector needs at least one amplitude"));
        }
        let norm: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
        if !norm.is_finite() || norm > 1.0 + 1e-9 {
            return Err(TpaError::Numerical(format!(
                "state norm {norm} exceeds one"
            )));
        }
        Ok(Self {
            amp,
            tail: (1.0 - norm).max(0.0),
        })
    }

    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(TpaError::param(format!(
                "Fock level {n} above cutoff {n_max}"
            )));
        }
        let mut amp = vec![C64::new(0.0, 0.0); n_max + 1];
        amp[n] = C64::new(1.0, 0.0);
        Ok(Self { amp, tail: 0.0 })
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max).expect("vacuum is always representable")
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn n_max(&self) -> usize {
        self.amp.len() - 1
    }

    /// Population not represented below the cutoff.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amp.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `|⟨self|other⟩|²`; the shorter vector is zero-padded.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }

    /// Phase-space rotation `e^{−iθ n̂}`: maps `a → e^{−iθ} a` in the Heisenberg picture.
    pub fn rotated(&self, theta: f64) -> StateVector {
        let amp = self
            .amp
            .iter()
            .enumerate()
            .map(|(n, c)| c * C64::from_polar(1.0, -theta * n as f64))
            .collect();
        StateVector {
            amp,
            tail: self.tail,
        }
    }

    /// Zero-pads or truncates to `n_max`.
    pub fn resized(&self, n_max: usize) -> StateVector {
        let mut amp = self.amp.clone();
        amp.resize(n_max + 1, C64::new(0.0, 0.0));
        let kept: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
        StateVector {
            amp,
            tail: (1.0 - kept).max(0.0),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.amp.len();
        let rho = Array2::from_shape_fn((d, d), |(m, n)| self.amp[m] * self.amp[n].conj());
        DensityMatrix { rho }
    }
}

impl FockOperator for StateVector {
    fn dim(&self) -> usize {
        self.amp.len()
    }

    fn element(&self, row: usize, col: usize) -> C64 {
        self.amp[row] * self.amp[col].conj()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.populations()
    }
}

/// Dense density matrix on levels `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Array2<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(rho: Array2<C64>, tail_tol: f64) -> Result<Self> {
        let dm = Self::from_matrix_unchecked(rho)?;
        dm.validate(tail_tol)?;
        Ok(dm)
    }

    pub(crate) fn from_matrix_unchecked(rho: Array2<C64>) -> Result<Self> {
        let (r, c) = rho.dim();
        if r != c || r == 0 {
            return Err(TpaError::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        Ok(Self { rho })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[f64]) -> Self {
        let d = p.len();
        let mut rho = Array2::zeros((d, d));
        for (n, &v) in p.iter().enumerate() {
            rho[[n, n]] = C64::new(v, 0.0);
        }
        Self { rho }
    }

    pub fn validate(&self, tail_tol: f64) -> Result<()> {
        if !self.is_hermitian(1e-12) {
            return Err(TpaError::Numerical(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-12 || tr < 1.0 - tail_tol {
            return Err(TpaError::Numerical(format!(
                "density matrix trace {tr} outside [1 - {tail_tol:e}, 1]"
            )));
        }
        if !self.is_positive_semidefinite(1e-10) {
            return Err(TpaError::Numerical(
                "density matrix has eigenvalues below -1e-10".into(),
            ));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.rho
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.rho
    }

    pub fn n_max(&self) -> usize {
        self.rho.nrows() - 1
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diag().iter().map(|c| c.re).collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.rho.nrows();
        (0..d).all(|m| (m..d).all(|n| (self.rho[[m, n]] - self.rho[[n, m]].conj()).norm() <= tol))
    }

    /// Cholesky factorisation of `ρ + tol·1`; succeeds iff every eigenvalue is ≥ −tol
    /// (up to rounding).
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let d = self.rho.nrows();
        let mut l = Array2::<C64>::zeros((d, d));
        for j in 0..d {
            let mut diag = self.rho[[j, j]].re + tol;
            for k in 0..j {
                diag -= l[[j, k]].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[[j, j]] = C64::new(ljj, 0.0);
            for i in (j + 1)..d {
                let mut s = self.rho[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = s / ljj;
            }
        }
        true
    }
}

impl FockOperator for DensityMatrix {
    fn dim(&self) -> usize {
        self.rho.nrows()
    }

    fn element(&self, row: usize, col: usize) -> C64 {
        self.rho[[row, col]]
    }
}

impl FockOperator for Array2<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn element(&self, row: usize, col: usize) -> C64 {
        self[[row, col]]
    }
}

/// Annihilation and creation matrices on levels `0..=n_max`.
pub fn ladder_matrices(cutoff: &FockCutoff) -> Result<(Array2<C64>, Array2<C64>)> {
    let n_max = cutoff.n_max();
    if n_max == 0 {
        return Err(TpaError::param("ladder operators need n_max >= 1"));
    }
    let d = n_max + 1;
    let mut a = Array2::<C64>::zeros((d, d));
    for n in 1..d {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.t().mapv(|c| c.conj());
    Ok((a, a_dag))
}

/// Builds `S(ζ)D(α)|0⟩`.
///
/// Amplitudes come from the annihilation condition `(μa − νa† − α)|ψ⟩ = 0`,
/// `μ = cosh r`, `ν = e^{iφ_r} sinh r`, seeded with the closed-form vacuum
/// overlap, so they do not depend on the cutoff; the cutoff only decides how
/// many are kept.
pub fn make_probe_state(spec: &ProbeSpec, cutoff: &FockCutoff) -> Result<StateVector> {
    let tol = cutoff.tail_tol();
    match cutoff.growth() {
        CutoffGrowth::Fixed => {
            let state = probe_state_at(spec, cutoff.n_max())?;
            if state.tail > tol {
                return Err(TpaError::Truncation {
                    n_max: cutoff.n_max(),
                    tail: state.tail,
                    tol,
                });
            }
            Ok(state)
        }
        CutoffGrowth::Adaptive { cap } => {
            let mut n_max = initial_cutoff(spec).max(cutoff.n_max()).min(cap);
            loop {
                let state = probe_state_at(spec, n_max)?;
                if state.tail <= tol {
                    return Ok(state);
                }
                if n_max >= cap {
                    return Err(TpaError::Truncation {
                        n_max,
                        tail: state.tail,
                        tol,
                    });
                }
                n_max = (2 * n_max).min(cap);
            }
        }
    }
}

/// Starting size for adaptive cutoffs: `max(4⟨n̂⟩ + 50, 64)`.
pub fn initial_cutoff(spec: &ProbeSpec) -> usize {
    let guess = 4.0 * spec.incident_photons() + 50.0;
    if guess.is_finite() {
        (guess.ceil() as usize).max(64)
    } else {
        usize::MAX
    }
}

fn probe_state_at(spec: &ProbeSpec, n_max: usize) -> Result<StateVector> {
    let amp = probe_amplitudes(spec, n_max);
    let norm: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
    if !norm.is_finite() || norm > 1.0 + 1e-9 {
        return Err(TpaError::Numerical(format!(
            "probe amplitudes lost normalisation (norm {norm})"
        )));
    }
    Ok(StateVector {
        amp,
        tail: (1.0 - norm).max(0.0),
    })
}

const RESCALE: f64 = 1e200;

fn probe_amplitudes(spec: &ProbeSpec, n_max: usize) -> Vec<C64> {
    let mu = spec.mu();
    let nu = spec.nu();
    let alpha = spec.alpha();
    let kappa = C64::from_polar(spec.r.tanh(), spec.phi_r);

    // ⟨0|S(ζ)D(α)|0⟩ = μ^{-1/2} exp(−|α|²/2 − κ*α²/2)
    let expo = -0.5 * alpha.norm_sqr() - 0.5 * kappa.conj() * alpha * alpha;
    let mut log_scale = expo.re - 0.5 * mu.ln();
    let seed = C64::from_polar(1.0, expo.im);

    let mut scaled = Vec::with_capacity(n_max + 1);
    let mut logs = Vec::with_capacity(n_max + 1);
    scaled.push(seed);
    logs.push(log_scale);
    if n_max >= 1 {
        scaled.push(alpha * seed / mu);
        logs.push(log_scale);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let mut prev = scaled[n - 1];
        let cur = scaled[n];
        if logs[n - 1] != logs[n] {
            prev *= (logs[n - 1] - logs[n]).exp();
        }
        let mut next = (alpha * cur + nu * nf.sqrt() * prev) / (mu * (nf + 1.0).sqrt());
        let big = next.norm().max(cur.norm());
        if big > RESCALE {
            next /= RESCALE;
            scaled[n] = cur / RESCALE;
            log_scale += RESCALE.ln();
            logs[n] = log_scale;
        } else if big > 0.0 && big < 1.0 / RESCALE && log_scale > -RESCALE.ln() {
            next *= RESCALE;
            scaled[n] = cur * RESCALE;
            log_scale -= RESCALE.ln();
            logs[n] = log_scale;
        }
        scaled.push(next);
        logs.push(log_scale);
    }
    scaled
        .into_iter()
        .zip(logs)
        .map(|(c, l)| {
            if c == C64::new(0.0, 0.0) {
                c
            } else {
                c * l.exp()
            }
        })
        .collect()
}

/// Applies `exp(G)` for a banded generator via scaled Taylor steps.
///
/// `norm_bound` must bound `‖G‖₁`; each step uses `h·‖G‖₁ ≤ 2`.
fn expm_multiply<F>(v: &[C64], norm_bound: f64, apply: F) -> Vec<C64>
where
    F: Fn(&[C64], &mut [C64]),
{
    let steps = (norm_bound / 2.0).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut x = v.to_vec();
    let mut term = vec![C64::new(0.0, 0.0); v.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(&x);
        let mut sum = x.clone();
        for k in 1..=80 {
            apply(&term, &mut next);
            let f = h / k as f64;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * f;
            }
            let mut tn = 0.0;
            let mut sn = 0.0;
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
                tn += t.norm();
                sn += s.norm();
            }
            if k > 4 && tn <= 1e-18 * sn {
                break;
            }
        }
        x = sum;
    }
    x
}

/// `exp((ζ/2)a†² − (ζ*/2)a²)|ψ⟩` with the generator truncated at the state's cutoff.
pub fn apply_squeeze(state: &StateVector, zeta: C64) -> StateVector {
    let d = state.amp.len();
    let half = zeta * 0.5;
    let half_c = zeta.conj() * 0.5;
    let amp = expm_multiply(&state.amp, zeta.norm() * d as f64, |v, out| {
        for n in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            if n >= 2 {
                acc += half * ((n * (n - 1)) as f64).sqrt() * v[n - 2];
            }
            if n + 2 < d {
                acc -= half_c * (((n + 1) * (n + 2)) as f64).sqrt() * v[n + 2];
            }
            out[n] = acc;
        }
    });
    let kept: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
    StateVector {
        amp,
        tail: (1.0 - kept).max(state.tail),
    }
}

/// `exp(αa† − α*a)|ψ⟩` with the generator truncated at the state's cutoff.
pub fn apply_displacement(state: &StateVector, alpha: C64) -> StateVector {
    let d = state.amp.len();
    let amp = expm_multiply(
        &state.amp,
        2.0 * alpha.norm() * (d as f64).sqrt(),
        |v, out| {
            for n in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                if n >= 1 {
                    acc += alpha * (n as f64).sqrt() * v[n - 1];
                }
                if n + 1 < d {
                    acc -= alpha.conj() * ((n + 1) as f64).sqrt() * v[n + 1];
                }
                out[n] = acc;
            }
        },
    );
    let kept: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
    StateVector {
        amp,
        tail: (1.0 - kept).max(state.tail),
    }
}

/// Linear expectation values `tr(O·X)` for `X ∈ {1, n̂, n̂², a, a²}`.
///
/// Being linear in `O`, these apply equally to states and to state
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldMoments {
    pub trace: f64,
    pub n1: f64,
    pub n2: f64,
    pub a1: C64,
    pub a2: C64,
}

impl FieldMoments {
    pub fn of<O: FockOperator + ?Sized>(op: &O) -> Self {
        let diag = op.diagonal();
        let (mut trace, mut n1, mut n2) = (0.0, 0.0, 0.0);
        for (n, &p) in diag.iter().enumerate() {
            let nf = n as f64;
            trace += p;
            n1 += nf * p;
            n2 += nf * nf * p;
        }
        Self {
            trace,
            n1,
            n2,
            a1: op.lowering_expectation(1),
            a2: op.lowering_expectation(2),
        }
    }

    pub fn mean_q(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.a1.re
    }

    pub fn mean_p(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.a1.im
    }

    /// `tr(O q²)`.
    pub fn second_q(&self) -> f64 {
        0.5 * (2.0 * self.a2.re + 2.0 * self.n1 + self.trace)
    }

    /// `tr(O p²)`.
    pub fn second_p(&self) -> f64 {
        0.5 * (-2.0 * self.a2.re + 2.0 * self.n1 + self.trace)
    }
}

/// Photon-number and quadrature means and variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_n: f64,
    pub var_n: f64,
    pub mean_q: f64,
    pub var_q: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

impl From<FieldMoments> for Moments {
    fn from(m: FieldMoments) -> Self {
        let mean_q = m.mean_q();
        let mean_p = m.mean_p();
        Moments {
            mean_n: m.n1,
            var_n: m.n2 - m.n1 * m.n1,
            mean_q,
            var_q: m.second_q() - mean_q * mean_q,
            mean_p,
            var_p: m.second_p() - mean_p * mean_p,
        }
    }
}

pub fn moments<O: FockOperator + ?Sized>(state: &O) -> Moments {
    FieldMoments::of(state).into()
}
