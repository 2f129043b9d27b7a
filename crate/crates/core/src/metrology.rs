//! Error-propagation sensitivities and classical Fisher information for
//! absorbance estimation, with closed-form counterparts for Gaussian probes.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{loss_moments, perturb_state, LossSpec, PerturbedState};
use crate::distributions::{
    pmf_with_derivative_from, quad_pdf_from_state, Pmf, QuadGridSpec, QuadPdf, Quadrature,
};
use crate::error::{Result, TpaError};
use crate::fock::{initial_cutoff, FockCutoff, ProbeSpec};

/// Probability floor below which a bin is treated as empty.
pub const P_FLOOR: f64 = 1e-14;
/// Derivative floor separating empty bins from ill-conditioned ones.
pub const D_FLOOR: f64 = 1e-14;
/// Slopes smaller than this fraction of their natural scale count as zero.
pub const DIVERGENCE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PhotonNumber,
    QuadQ,
    QuadP,
}

impl Observable {
    pub const ALL: [Observable; 3] = [
        Observable::PhotonNumber,
        Observable::QuadQ,
        Observable::QuadP,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Observable::PhotonNumber => "photon_number",
            Observable::QuadQ => "quad_q",
            Observable::QuadP => "quad_p",
        }
    }

    pub fn quadrature(&self) -> Option<Quadrature> {
        match self {
            Observable::PhotonNumber => None,
            Observable::QuadQ => Some(Quadrature::Q),
            Observable::QuadP => Some(Quadrature::P),
        }
    }

    /// Exponent `k` of the slope scale `(⟨n̂⟩ + 1)^k`.
    fn slope_scale_exponent(&self) -> i32 {
        match self {
            Observable::PhotonNumber => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Observable {
    type Err = TpaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "photon_number" | "n" => Ok(Observable::PhotonNumber),
            "quad_q" | "q" => Ok(Observable::QuadQ),
            "quad_p" | "p" => Ok(Observable::QuadP),
            other => Err(TpaError::param(format!("unknown observable '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Numeric,
    Analytic,
}

/// `Δε²`, or divergence when the signal slope vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensitivity {
    Finite(f64),
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityResult {
    pub sensitivity: Sensitivity,
    pub observable: Observable,
    pub source: Source,
    /// Variance of the observable after loss.
    pub variance: f64,
    /// `∂⟨O⟩/∂ε` after loss.
    pub slope: f64,
}

impl SensitivityResult {
    fn classify(
        observable: Observable,
        source: Source,
        variance: f64,
        slope: f64,
        incident: f64,
    ) -> Self {
        let scale = (incident + 1.0)
            .powi(observable.slope_scale_exponent())
            .sqrt();
        let sensitivity = if slope.abs() > DIVERGENCE_REL * scale && variance > 0.0 {
            let v = variance / (slope * slope);
            if v.is_finite() && v > 0.0 {
                Sensitivity::Finite(v)
            } else {
                Sensitivity::Diverges
            }
        } else {
            Sensitivity::Diverges
        };
        Self {
            sensitivity,
            observable,
            source,
            variance,
            slope,
        }
    }

    pub fn delta_eps_sq(&self) -> Option<f64> {
        match self.sensitivity {
            Sensitivity::Finite(v) => Some(v),
            Sensitivity::Diverges => None,
        }
    }

    /// `1/Δε²`, zero when divergent.
    pub fn information(&self) -> f64 {
        self.delta_eps_sq().map_or(0.0, |v| 1.0 / v)
    }

    pub fn diverges(&self) -> bool {
        matches!(self.sensitivity, Sensitivity::Diverges)
    }
}

/// Error-propagation sensitivity from the state and its derivative after loss.
pub fn sensitivity_numeric(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: Observable,
    cutoff: &FockCutoff,
) -> Result<SensitivityResult> {
    Ok(sensitivity_from_state(
        &perturb_state(spec, cutoff)?,
        loss,
        observable,
    ))
}

pub fn sensitivity_from_state(
    ps: &PerturbedState,
    loss: &LossSpec,
    observable: Observable,
) -> SensitivityResult {
    let (m0, dm) = ps.field_moments();
    let incident = m0.n1 / m0.trace;
    let m = loss_moments(&m0, loss);
    let d = loss_moments(&dm, loss);
    let tr = m.trace;
    let (variance, slope) = match observable {
        Observable::PhotonNumber => (m.n2 / tr - (m.n1 / tr).powi(2), d.n1),
        Observable::QuadQ => (m.second_q() / tr - (m.mean_q() / tr).powi(2), d.mean_q()),
        Observable::QuadP => (m.second_p() / tr - (m.mean_p() / tr).powi(2), d.mean_p()),
    };
    SensitivityResult::classify(observable, Source::Numeric, variance, slope, incident)
}

/// First and second moments of `S(ζ)D(α)|0⟩`: mean field `β`, `N = ⟨δa†δa⟩`,
/// `M = ⟨δa²⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GaussianMoments {
    beta: C64,
    n: f64,
    m: C64,
}

impl GaussianMoments {
    fn of(spec: &ProbeSpec) -> Self {
        let r = spec.r();
        Self {
            beta: spec.field_mean(),
            n: r.sinh().powi(2),
            m: C64::from_polar(r.sinh() * r.cosh(), spec.phi_r()),
        }
    }

    fn after_loss(&self, eta: f64) -> Self {
        Self {
            beta: self.beta * eta.sqrt(),
            n: self.n * eta,
            m: self.m * eta,
        }
    }

    /// `⟨a†²a²⟩`.
    fn pair_number(&self) -> f64 {
        let b2 = self.beta.norm_sqr();
        b2 * b2
            + 4.0 * b2 * self.n
            + 2.0 * (self.beta.conj().powu(2) * self.m).re
            + 2.0 * self.n * self.n
            + self.m.norm_sqr()
    }

    fn number_variance(&self) -> f64 {
        let b2 = self.beta.norm_sqr();
        self.n
            + self.n * self.n
            + self.m.norm_sqr()
            + b2 * (1.0 + 2.0 * self.n)
            + 2.0 * (self.beta.conj().powu(2) * self.m).re
    }

    /// `∂⟨a⟩/∂ε = −½⟨a†a²⟩`.
    fn field_slope(&self) -> C64 {
        -0.5 * (self.beta * (self.beta.norm_sqr() + 2.0 * self.n) + self.m * self.beta.conj())
    }
}

/// Closed-form sensitivity for Gaussian probes `S(ζ)D(α)|0⟩` under loss.
///
/// Moments follow from Wick factorisation of the Gaussian state; loss scales
/// `β → √η β` and the second-order moments by `η`.
pub fn sensitivity_analytic(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: Observable,
) -> SensitivityResult {
    let eta = loss.eta();
    let g = GaussianMoments::of(spec);
    let gd = g.after_loss(eta);
    let (variance, slope) = match observable {
        Observable::PhotonNumber => (gd.number_variance(), -eta * g.pair_number()),
        Observable::QuadQ => (
            0.5 + gd.n + gd.m.re,
            (2.0 * eta).sqrt() * g.field_slope().re,
        ),
        Observable::QuadP => (
            0.5 + gd.n - gd.m.re,
            (2.0 * eta).sqrt() * g.field_slope().im,
        ),
    };
    SensitivityResult::classify(
        observable,
        Source::Analytic,
        variance,
        slope,
        spec.incident_photons(),
    )
}

/// Squeezed-vacuum photon-counting sensitivity
/// `(1/(η n_r))·(1 + η(2n_r + 1))/(1 + 3n_r)²`.
pub fn sv_photon_sensitivity(n_r: f64, eta: f64) -> f64 {
    (1.0 + eta * (2.0 * n_r + 1.0)) / (eta * n_r * (1.0 + 3.0 * n_r).powi(2))
}

/// Loss-independent large-`n_r` limit `2/(9 n_r²)`.
pub fn sv_photon_sensitivity_limit(n_r: f64) -> f64 {
    2.0 / (9.0 * n_r * n_r)
}

/// Coherent photon-counting sensitivity `1/(η n³)`.
pub fn coherent_photon_sensitivity(n: f64, eta: f64) -> f64 {
    1.0 / (eta * n.powi(3))
}

/// Photon-number mean, absorbance slope and variance after loss for
/// `S(r)D(α)|0⟩` with real squeezing, written as polynomials in `n_r`, `|α|²`.
pub fn photon_number_polynomials(n_r: f64, alpha_abs: f64, phi: f64, eta: f64) -> (f64, f64, f64) {
    let s = (n_r * (1.0 + n_r)).sqrt();
    let a2 = alpha_abs * alpha_abs;
    let (c2, c4) = ((2.0 * phi).cos(), (4.0 * phi).cos());
    let mean = eta * (n_r + a2 * (1.0 + 2.0 * n_r + 2.0 * c2 * s));
    let slope = -eta
        * ((n_r + 3.0 * n_r * n_r)
            + 2.0 * a2 * (2.0 * n_r * (2.0 + 3.0 * n_r) + c2 * s * (1.0 + 6.0 * n_r))
            + a2 * a2
                * (1.0
                    + 6.0 * n_r * (1.0 + n_r)
                    + 4.0 * c2 * s * (1.0 + 2.0 * n_r)
                    + 2.0 * c4 * n_r * (1.0 + n_r)));
    let var = eta * n_r * (1.0 + eta * (1.0 + 2.0 * n_r))
        + eta
            * a2
            * (1.0
                + 2.0 * n_r
                + 2.0 * c2 * s
                + 2.0 * eta * (n_r * (3.0 + 4.0 * n_r) + c2 * s * (1.0 + 4.0 * n_r)));
    (mean, slope, var)
}

/// Classical Fisher information per unit `ε²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherResult {
    pub fi: f64,
    pub observable: Observable,
    /// Bins with `P < P_FLOOR` but a non-negligible derivative.
    pub ill_conditioned: usize,
    pub warnings: Vec<String>,
}

struct FloorSum {
    total: f64,
    ill: usize,
}

fn floored_terms<'a>(pairs: impl Iterator<Item = (f64, f64, f64)> + 'a) -> FloorSum {
    let mut out = FloorSum { total: 0.0, ill: 0 };
    for (p, dp, w) in pairs {
        let p = if (-1e-12..0.0).contains(&p) { 0.0 } else { p };
        if p < P_FLOOR {
            if dp.abs() < D_FLOOR {
                continue;
            }
            out.ill += 1;
            out.total += w * dp * dp / P_FLOOR;
        } else {
            out.total += w * dp * dp / p;
        }
    }
    out
}

fn finish(sum: FloorSum, observable: Observable) -> Result<FisherResult> {
    if !sum.total.is_finite() {
        return Err(TpaError::Numerical(
            "Fisher information is not finite".into(),
        ));
    }
    let warnings = if sum.ill > 0 {
        vec![format!(
            "{} ill-conditioned bins floored at {P_FLOOR:e}",
            sum.ill
        )]
    } else {
        Vec::new()
    };
    Ok(FisherResult {
        fi: sum.total.max(0.0),
        observable,
        ill_conditioned: sum.ill,
        warnings,
    })
}

/// `F = Σ_n (∂P_n)²/P_n` with the probability floor policy.
pub fn fisher_discrete(pmf: &Pmf, dpmf: &[f64]) -> Result<FisherResult> {
    if pmf.len() != dpmf.len() {
        return Err(TpaError::DimensionMismatch {
            expected: pmf.len(),
            found: dpmf.len(),
        });
    }
    let sum = floored_terms(
        pmf.probabilities()
            .iter()
            .zip(dpmf)
            .map(|(&p, &d)| (p, d, 1.0)),
    );
    finish(sum, Observable::PhotonNumber)
}

/// `F = ∫ (∂P)²/P dq` by the trapezoid rule with the same floor policy per point.
pub fn fisher_continuous(pdf: &QuadPdf, dpdf: &QuadPdf) -> Result<FisherResult> {
    if pdf.grid().len() != dpdf.grid().len() {
        return Err(TpaError::DimensionMismatch {
            expected: pdf.grid().len(),
            found: dpdf.grid().len(),
        });
    }
    let same = pdf
        .grid()
        .iter()
        .zip(dpdf.grid())
        .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same {
        return Err(TpaError::param(
            "density and derivative use different grids",
        ));
    }
    let w = pdf.weights();
    let sum = floored_terms(
        pdf.density()
            .iter()
            .zip(dpdf.density())
            .zip(w)
            .map(|((&p, &d), w)| (p, d, w)),
    );
    let observable = match pdf.quadrature() {
        Quadrature::Q => Observable::QuadQ,
        Quadrature::P => Observable::QuadP,
    };
    finish(sum, observable)
}

/// Fisher information of `observable` for an already perturbed state.
pub fn fisher_from_state(
    ps: &PerturbedState,
    loss: &LossSpec,
    observable: Observable,
    grid: &QuadGridSpec,
) -> Result<FisherResult> {
    match observable.quadrature() {
        None => {
            let (pmf, dpmf) = pmf_with_derivative_from(ps, loss);
            fisher_discrete(&pmf, &dpmf)
        }
        Some(which) => {
            let (pdf, dpdf) = quad_pdf_from_state(ps, loss, which, grid)?;
            fisher_continuous(&pdf, &dpdf)
        }
    }
}

pub fn fisher_numeric(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: Observable,
    cutoff: &FockCutoff,
    grid: &QuadGridSpec,
) -> Result<FisherResult> {
    fisher_from_state(&perturb_state(spec, cutoff)?, loss, observable, grid)
}

/// Photon-counting Fisher information of a coherent probe divided by that of a
/// squeezed vacuum with the same incident photon number.
pub fn fisher_ratio_coh_over_sv(nbar: f64, loss: &LossSpec, cutoff: &FockCutoff) -> Result<f64> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(TpaError::param(format!(
            "photon number must be positive, got {nbar}"
        )));
    }
    let grid = QuadGridSpec::default();
    let coh = fisher_numeric(
        &ProbeSpec::coherent_photons(nbar, 0.0)?,
        loss,
        Observable::PhotonNumber,
        cutoff,
        &grid,
    )?;
    let sv = fisher_numeric(
        &ProbeSpec::squeezed_vacuum_photons(nbar)?,
        loss,
        Observable::PhotonNumber,
        cutoff,
        &grid,
    )?;
    Ok(coh.fi / sv.fi)
}

/// Everything computed for one probe/measurement pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub spec: ProbeSpec,
    pub observable: Observable,
    pub eta: f64,
    pub incident_photons: f64,
    pub fisher: FisherResult,
    pub numeric: SensitivityResult,
    pub analytic: SensitivityResult,
    pub cutoff_used: usize,
    pub warnings: Vec<String>,
}

pub fn evaluate(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: Observable,
    cutoff: &FockCutoff,
    grid: &QuadGridSpec,
) -> Result<Evaluation> {
    let ps = perturb_state(spec, cutoff)?;
    let fisher = fisher_from_state(&ps, loss, observable, grid)?;
    let numeric = sensitivity_from_state(&ps, loss, observable);
    let analytic = sensitivity_analytic(spec, loss, observable);
    let cutoff_used = ps.n_max();
    let mut warnings = fisher.warnings.clone();
    if cutoff.growth() != crate::fock::CutoffGrowth::Fixed
        && cutoff_used > initial_cutoff(spec).max(cutoff.n_max())
    {
        warnings.push(format!("Fock cutoff grown to {cutoff_used}"));
    }
    Ok(Evaluation {
        spec: *spec,
        observable,
        eta: loss.eta(),
        incident_photons: spec.incident_photons(),
        fisher,
        numeric,
        analytic,
        cutoff_used,
        warnings,
    })
}

/// One point of a squeezing or phase scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    /// Scanned coordinate (`n_r` or `φ`).
    pub x: f64,
    pub evaluation: Evaluation,
}

/// Photon-counting Fisher information of amplitude-squeezed probes (`φ = π/2`)
/// at fixed incident photon number, for `n_r` on `points` equally spaced
/// values from 0 to `nbar`.
pub fn squeeze_scan(
    nbar: f64,
    loss: &LossSpec,
    points: usize,
    cutoff: &FockCutoff,
) -> Result<Vec<ScanPoint>> {
    if points < 2 {
        return Err(TpaError::param("a scan needs at least two points"));
    }
    let xs: Vec<f64> = (0..points)
        .map(|i| nbar * i as f64 / (points - 1) as f64)
        .collect();
    scan(
        &xs,
        |n_r| ProbeSpec::with_incident_photons(nbar, n_r, FRAC_PI_2),
        loss,
        Observable::PhotonNumber,
        cutoff,
    )
}

/// Sensitivity and Fisher information versus seed phase at fixed incident
/// photon number and squeezed photon number.
pub fn phase_scan(
    nbar: f64,
    n_r: f64,
    loss: &LossSpec,
    observable: Observable,
    phis: &[f64],
    cutoff: &FockCutoff,
) -> Result<Vec<ScanPoint>> {
    scan(
        phis,
        |phi| ProbeSpec::with_incident_photons(nbar, n_r, phi),
        loss,
        observable,
        cutoff,
    )
}

fn scan<F>(
    xs: &[f64],
    make: F,
    loss: &LossSpec,
    observable: Observable,
    cutoff: &FockCutoff,
) -> Result<Vec<ScanPoint>>
where
    F: Fn(f64) -> Result<ProbeSpec> + Sync,
{
    use rayon::prelude::*;
    let grid = QuadGridSpec::default();
    xs.par_iter()
        .map(|&x| {
            let spec = make(x)?;
            Ok(ScanPoint {
                x,
                evaluation: evaluate(&spec, loss, observable, cutoff, &grid)?,
            })
        })
        .collect()
}

/// Indices of strict interior local maxima and minima of a sequence.
pub fn local_extrema(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if b > a && b > c {
            maxima.push(i);
        } else if b < a && b < c {
            minima.push(i);
        }
    }
    (maxima, minima)
}

/// Least-squares fit of `log F = log A + k log n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
}

pub fn fit_power_law(ns: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(TpaError::param(
            "power-law fit needs at least two matched points",
        ));
    }
    if ns.iter().chain(values).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(TpaError::param("power-law fit needs positive data"));
    }
    let xs: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        exponent,
        prefactor: (my - exponent * mx).exp(),
    })
}

/// Geometric-mean prefactor `A` of `F ≈ A nᵏ` with the exponent held at `k`.
pub fn prefactor_at_exponent(ns: &[f64], values: &[f64], k: f64) -> f64 {
    let logs: f64 = ns
        .iter()
        .zip(values)
        .map(|(n, v)| v.ln() - k * n.ln())
        .sum();
    (logs / ns.len() as f64).exp()
}

/// Regime in which a large-photon-number sensitivity formula is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Exact for all parameters.
    Exact,
    /// `n_r ≫ 1`.
    StrongSqueezing,
    /// Strong squeezing with a weak seed, `|α| ≪ 1`.
    WeakSeed,
    /// Strong squeezing with a seed dominating the squeezing, `|α| ≫ e^r`.
    StrongSeed,
}

/// One closed-form limit of `Δε²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub observable: Observable,
    pub state: &'static str,
    pub regime: Regime,
    /// Closed-form value of `Δε²`.
    pub value: f64,
    /// Probe with the requested incident photon number that the row describes.
    pub probe: ProbeSpec,
    /// Whether `probe` sits inside the regime the formula assumes.
    pub applicable: bool,
}

/// Photon numbers at least this many times larger count as "≫".
pub const REGIME_FACTOR: f64 = 10.0;

/// Closed-form sensitivity limits for squeezed-vacuum, coherent and squeezed
/// coherent probes at squeezing `r`, incident photon number `n`, transmission
/// `eta`, and coherent phase `phi` for the coherent-state quadrature rows.
pub fn limit_table(r: f64, n: f64, eta: f64, phi: f64) -> Result<Vec<LimitRow>> {
    LossSpec::new(eta)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(TpaError::param(format!(
            "photon number must be positive, got {n}"
        )));
    }
    let n_r = r.sinh().powi(2);
    let phase_sq = ProbeSpec::with_incident_photons(n, n_r, 0.0)?;
    let amp_sq = ProbeSpec::with_incident_photons(n, n_r, FRAC_PI_2)?;
    let coherent = ProbeSpec::coherent_photons(n, phi)?;
    let strong = n_r >= REGIME_FACTOR;
    let weak_seed = |p: &ProbeSpec| strong && p.alpha_abs().powi(2) * REGIME_FACTOR <= 1.0;
    let strong_seed =
        |p: &ProbeSpec| strong && p.alpha_abs().powi(2) >= REGIME_FACTOR * (2.0 * r).exp();
    let loss_factor = (1.0 - eta) / eta;
    let n3 = n.powi(3);
    let row = |observable, state, regime, value, probe, applicable| LimitRow {
        observable,
        state,
        regime,
        value,
        probe,
        applicable,
    };
    use Observable::*;
    Ok(vec![
        row(
            PhotonNumber,
            "squeezed_vacuum",
            Regime::StrongSqueezing,
            2.0 / (9.0 * n * n),
            ProbeSpec::squeezed_vacuum_photons(n)?,
            n >= REGIME_FACTOR,
        ),
        row(
            PhotonNumber,
            "coherent",
            Regime::Exact,
            1.0 / (eta * n3),
            coherent,
            true,
        ),
        row(
            PhotonNumber,
            "phase_squeezed",
            Regime::StrongSqueezing,
            (2.0 * r).exp() / n3,
            phase_sq,
            strong,
        ),
        row(
            PhotonNumber,
            "amplitude_squeezed",
            Regime::StrongSqueezing,
            (-4.0 * r).exp() / n3,
            amp_sq,
            strong,
        ),
        row(
            QuadQ,
            "coherent",
            Regime::Exact,
            1.0 / (eta * n3 * phi.cos().powi(2)),
            coherent,
            true,
        ),
        row(
            QuadQ,
            "phase_squeezed",
            Regime::WeakSeed,
            (-2.0 * r).exp() * 32.0 / (25.0 * n),
            phase_sq,
            weak_seed(&phase_sq),
        ),
        row(
            QuadQ,
            "phase_squeezed",
            Regime::StrongSeed,
            (2.0 * r).exp() / n3,
            phase_sq,
            strong_seed(&phase_sq),
        ),
        row(
            QuadP,
            "coherent",
            Regime::Exact,
            1.0 / (eta * n3 * phi.sin().powi(2)),
            coherent,
            true,
        ),
        row(
            QuadP,
            "amplitude_squeezed",
            Regime::WeakSeed,
            loss_factor * (-6.0 * r).exp() * 32.0 / (9.0 * n),
            amp_sq,
            weak_seed(&amp_sq),
        ),
        row(
            QuadP,
            "amplitude_squeezed",
            Regime::StrongSeed,
            loss_factor * (-2.0 * r).exp() / n3,
            amp_sq,
            strong_seed(&amp_sq),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cut() -> FockCutoff {
        FockCutoff::adaptive(1e-12).unwrap()
    }

    #[test]
    fn coherent_photon_counting_sensitivity() {
        let spec = ProbeSpec::coherent_photons(4.0, 0.0).unwrap();
        let loss = LossSpec::new(0.5).unwrap();
        let s = sensitivity_numeric(&spec, &loss, Observable::PhotonNumber, &cut()).unwrap();
        assert_relative_eq!(s.delta_eps_sq().unwrap(), 0.031_25, max_relative = 1e-9);
    }

    #[test]
    fn squeezed_vacuum_sensitivities() {
        let spec = ProbeSpec::squeezed_vacuum_photons(1.0).unwrap();
        let s = sensitivity_numeric(
            &spec,
            &LossSpec::lossless(),
            Observable::PhotonNumber,
            &cut(),
        )
        .unwrap();
        assert_relative_eq!(s.delta_eps_sq().unwrap(), 0.25, max_relative = 1e-9);
        assert_relative_eq!(sv_photon_sensitivity(1.0, 1.0), 0.25);
        for obs in [Observable::QuadQ, Observable::QuadP] {
            assert!(
                sensitivity_numeric(&spec, &LossSpec::lossless(), obs, &cut())
                    .unwrap()
                    .diverges()
            );
            assert!(sensitivity_analytic(&spec, &LossSpec::lossless(), obs).diverges());
        }
    }

    #[test]
    fn coherent_quadrature_analytic_forms() {
        let (n, eta, phi) = (9.0f64, 0.3, 0.6f64);
        let spec = ProbeSpec::coherent_photons(n, phi).unwrap();
        let loss = LossSpec::new(eta).unwrap();
        let q = sensitivity_analytic(&spec, &loss, Observable::QuadQ)
            .delta_eps_sq()
            .unwrap();
        let p = sensitivity_analytic(&spec, &loss, Observable::QuadP)
            .delta_eps_sq()
            .unwrap();
        assert_relative_eq!(
            q,
            1.0 / (eta * n.powi(3) * phi.cos().powi(2)),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p,
            1.0 / (eta * n.powi(3) * phi.sin().powi(2)),
            max_relative = 1e-12
        );
        let on_axis = ProbeSpec::coherent_photons(n, 0.0).unwrap();
        assert!(sensitivity_analytic(&on_axis, &loss, Observable::QuadP).diverges());
        let off_axis = ProbeSpec::coherent_photons(n, FRAC_PI_2).unwrap();
        assert!(sensitivity_analytic(&off_axis, &loss, Observable::QuadQ).diverges());
        assert!(
            sensitivity_numeric(&off_axis, &loss, Observable::QuadQ, &cut())
                .unwrap()
                .diverges()
        );
    }

    #[test]
    fn polynomial_forms_match_gaussian_moments() {
        for &(n_r, a, phi, eta) in &[
            (0.7, 1.3, 0.4, 0.6),
            (2.0, 2.0, 1.1, 1.0),
            (0.1, 0.5, 2.0, 0.2),
        ] {
            let spec = ProbeSpec::new(f64::sqrt(n_r).asinh(), 0.0, a, phi).unwrap();
            let loss = LossSpec::new(eta).unwrap();
            let s = sensitivity_analytic(&spec, &loss, Observable::PhotonNumber);
            let (mean, slope, var) = photon_number_polynomials(n_r, a, phi, eta);
            assert_relative_eq!(mean, eta * spec.incident_photons(), max_relative = 1e-12);
            assert_relative_eq!(slope, s.slope, max_relative = 1e-12);
            assert_relative_eq!(var, s.variance, max_relative = 1e-12);
        }
    }

    #[test]
    fn analytic_matches_numeric_on_grid() {
        for &r in &[0.0, 0.5, 1.0, 1.5] {
            for &a in &[0.0, 1.0, 3.0] {
                for &phi in &[0.0, std::f64::consts::FRAC_PI_4, FRAC_PI_2] {
                    let spec = ProbeSpec::new(r, 0.0, a, phi).unwrap();
                    let ps = perturb_state(&spec, &cut()).unwrap();
                    for &eta in &[0.1, 0.5, 0.9, 1.0] {
                        let loss = LossSpec::new(eta).unwrap();
                        for obs in Observable::ALL {
                            let num = sensitivity_from_state(&ps, &loss, obs);
                            let ana = sensitivity_analytic(&spec, &loss, obs);
                            match (num.delta_eps_sq(), ana.delta_eps_sq()) {
                                (Some(x), Some(y)) => {
                                    assert!((x - y).abs() <= 1e-6 * y, "{spec:?} {eta} {obs}")
                                }
                                (None, None) => {}
                                other => {
                                    panic!("divergence mismatch {other:?} for {spec:?} {eta} {obs}")
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fisher_floor_policy() {
        let pmf = Pmf::from_vec_unchecked(vec![0.5, 0.5, 0.0, 0.0]);
        let f = fisher_discrete(&pmf, &[0.1, -0.1, 0.0, 1e-15]).unwrap();
        assert_relative_eq!(f.fi, 0.04, epsilon = 1e-15);
        assert!(f.warnings.is_empty());
        let f = fisher_discrete(&pmf, &[0.1, -0.1, 1e-10, 0.0]).unwrap();
        assert_eq!(f.ill_conditioned, 1);
        assert_relative_eq!(f.fi, 0.04 + 1e-20 / P_FLOOR, max_relative = 1e-12);
        assert!(fisher_discrete(&pmf, &[0.0; 3]).is_err());
    }

    #[test]
    fn vacuum_and_coherent_fisher() {
        let grid = QuadGridSpec::default();
        let lossless = LossSpec::lossless();
        for obs in Observable::ALL {
            let f = fisher_numeric(&ProbeSpec::vacuum(), &lossless, obs, &cut(), &grid).unwrap();
            assert_eq!(f.fi, 0.0);
        }
        let coh = ProbeSpec::coherent_photons(10.0, 0.0).unwrap();
        let f = fisher_numeric(&coh, &lossless, Observable::PhotonNumber, &cut(), &grid).unwrap();
        assert!((f.fi / 1050.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn coherent_fisher_loss_dependence() {
        // Detected photon counting of a coherent probe gives F(η) = η n³ + η² n²/2.
        let coh = ProbeSpec::coherent_photons(10.0, 0.0).unwrap();
        let grid = QuadGridSpec::default();
        let f1 = fisher_numeric(
            &coh,
            &LossSpec::lossless(),
            Observable::PhotonNumber,
            &cut(),
            &grid,
        )
        .unwrap()
        .fi;
        for eta in [0.1, 0.3, 0.7, 0.9] {
            let f = fisher_numeric(
                &coh,
                &LossSpec::new(eta).unwrap(),
                Observable::PhotonNumber,
                &cut(),
                &grid,
            )
            .unwrap()
            .fi;
            assert_relative_eq!(f, eta * 1000.0 + eta * eta * 50.0, max_relative = 1e-9);
        }
        let f = fisher_numeric(
            &coh,
            &LossSpec::new(0.9).unwrap(),
            Observable::PhotonNumber,
            &cut(),
            &grid,
        )
        .unwrap()
        .fi;
        assert!((f / f1 / 0.9 - 1.0).abs() < 0.01);
    }

    #[test]
    fn table_values() {
        let rows = limit_table(1.0, 30.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(rows[0].value, 2.0 / 8100.0, max_relative = 1e-15);
        assert_relative_eq!(
            rows[1].value,
            7.407_407_407_407_407e-5,
            max_relative = 1e-12
        );
        let rows = limit_table(1.0, 100.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(rows[9].value, (-2.0f64).exp() / 1e6, max_relative = 1e-12);
        assert_eq!(rows.len(), 10);
        assert!(!rows[2].applicable);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let ns = [2.0, 4.0, 8.0];
        let vs: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(2.5)).collect();
        let fit = fit_power_law(&ns, &vs).unwrap();
        assert_relative_eq!(fit.exponent, 2.5, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 3.0, max_relative = 1e-12);
        assert_relative_eq!(
            prefactor_at_exponent(&ns, &vs, 2.5),
            3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn extrema_detection() {
        let (mx, mn) = local_extrema(&[1.0, 3.0, 2.0, 1.0, 4.0]);
        assert_eq!(mx, vec![1]);
        assert_eq!(mn, vec![3]);
    }
}
