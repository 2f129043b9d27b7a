//! Two-photon absorption generator, its first-order action on probe states,
//! and the pure-loss channel.
//!
//! The generator is taken per unit absorbance:
//! `L ρ = ¼(2a²ρa†² − a†²a²ρ − ρa†²a²)`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::distributions::Pmf;
use crate::error::{Result, TpaError};
use crate::fock::{
    make_probe_state, DensityMatrix, FieldMoments, FockCutoff, FockOperator, ProbeSpec, StateVector,
};

/// Single-photon loss with transmission probability `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    eta: f64,
}

impl LossSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&eta) {
            Ok(Self { eta })
        } else {
            Err(TpaError::param(format!(
                "transmission eta must lie in [0, 1], got {eta}"
            )))
        }
    }

    pub fn lossless() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_identity(&self) -> bool {
        self.eta == 1.0
    }
}

/// `L ρ` for any operator on the truncated space (states or state derivatives).
pub fn tpa_generator_op(rho: &Array2<C64>) -> Array2<C64> {
    let d = rho.nrows();
    Array2::from_shape_fn((d, d), |(m, n)| {
        let decay = 0.25 * ((m * m.saturating_sub(1)) + (n * n.saturating_sub(1))) as f64;
        let mut v = -rho[[m, n]] * decay;
        if m + 2 < d && n + 2 < d {
            let w = (((m + 1) * (m + 2)) as f64 * ((n + 1) * (n + 2)) as f64).sqrt();
            v += rho[[m + 2, n + 2]] * (0.5 * w);
        }
        v
    })
}

/// `L ρ` for a density matrix.
pub fn tpa_generator(rho: &DensityMatrix) -> Array2<C64> {
    tpa_generator_op(rho.matrix())
}

/// Diagonal of `L ρ` for diagonal `ρ`:
/// `∂P_n = ½[(n+2)(n+1)P_{n+2} − n(n−1)P_n]`.
pub fn population_derivative(p: &[f64]) -> Vec<f64> {
    let d = p.len();
    (0..d)
        .map(|n| {
            let nf = n as f64;
            let gain = if n + 2 < d {
                (nf + 2.0) * (nf + 1.0) * p[n + 2]
            } else {
                0.0
            };
            0.5 * (gain - nf * (nf - 1.0).max(0.0) * p[n])
        })
        .collect()
}

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Pure-loss channel on an arbitrary operator via the Kraus family
/// `K_k = √((1−η)^k/k!) η^{n̂/2} a^k`, summed over every `k` the cutoff allows.
///
/// `O(N³)`; intended for modest cutoffs.
pub fn loss_map(rho: &Array2<C64>, loss: &LossSpec) -> Array2<C64> {
    let eta = loss.eta();
    let d = rho.nrows();
    if eta == 1.0 {
        return rho.clone();
    }
    let mut out = Array2::<C64>::zeros((d, d));
    if eta == 0.0 {
        out[[0, 0]] = (0..d).map(|k| rho[[k, k]]).sum();
        return out;
    }
    let lf = ln_factorials(d);
    let (le, lr) = (eta.ln(), (1.0 - eta).ln());
    let ln_binom = |n: usize, k: usize| lf[n] - lf[k] - lf[n - k];
    for m in 0..d {
        for n in 0..d {
            let kmax = d - 1 - m.max(n);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..=kmax {
                let lw = 0.5 * (ln_binom(m + k, k) + ln_binom(n + k, k))
                    + 0.5 * (m + n) as f64 * le
                    + k as f64 * lr;
                acc += rho[[m + k, n + k]] * lw.exp();
            }
            out[[m, n]] = acc;
        }
    }
    out
}

pub fn loss_channel(rho: &DensityMatrix, loss: &LossSpec) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(loss_map(rho.matrix(), loss))
        .expect("square input stays square")
}

/// Applies binomial thinning `P_n = Σ_{m≥n} C(m,n) η^n (1−η)^{m−n} P⁰_m` to
/// several vectors of equal length at once.
pub fn binomial_thinning(inputs: &[&[f64]], eta: f64) -> Vec<Vec<f64>> {
    let d = inputs.first().map_or(0, |v| v.len());
    if eta == 1.0 {
        return inputs.iter().map(|v| v.to_vec()).collect();
    }
    let mut out = vec![vec![0.0; d]; inputs.len()];
    if eta == 0.0 {
        for (o, v) in out.iter_mut().zip(inputs) {
            if d > 0 {
                o[0] = v.iter().sum();
            }
        }
        return out;
    }
    let lf = ln_factorials(d);
    let (le, lr) = (eta.ln(), (1.0 - eta).ln());
    let odds = eta / (1.0 - eta);
    let mut row = vec![0.0; d];
    for m in 0..d {
        if inputs.iter().all(|v| v[m] == 0.0) {
            continue;
        }
        // Evaluate the binomial row from its mode outwards by ratios.
        let mode = (((m + 1) as f64 * eta).floor() as usize).min(m);
        let lb = lf[m] - lf[mode] - lf[m - mode] + mode as f64 * le + (m - mode) as f64 * lr;
        row[mode] = lb.exp();
        for k in mode..m {
            row[k + 1] = row[k] * (m - k) as f64 / (k + 1) as f64 * odds;
        }
        for k in (0..mode).rev() {
            row[k] = row[k + 1] * (k + 1) as f64 / ((m - k) as f64 * odds);
        }
        for (o, v) in out.iter_mut().zip(inputs) {
            let pm = v[m];
            if pm != 0.0 {
                for k in 0..=m {
                    o[k] += row[k] * pm;
                }
            }
        }
    }
    out
}

pub fn binomial_loss_pmf(pmf: &Pmf, loss: &LossSpec) -> Pmf {
    let mut v = binomial_thinning(&[pmf.probabilities()], loss.eta());
    Pmf::from_vec_unchecked(v.pop().unwrap_or_default())
}

/// Field moments after loss: `a → √η a`, `n̂` thinned binomially.
pub fn loss_moments(m: &FieldMoments, loss: &LossSpec) -> FieldMoments {
    let eta = loss.eta();
    FieldMoments {
        trace: m.trace,
        n1: eta * m.n1,
        n2: eta * eta * m.n2 + eta * (1.0 - eta) * m.n1,
        a1: m.a1 * eta.sqrt(),
        a2: m.a2 * eta,
    }
}

/// `ρ(0)` together with `∂ρ/∂ε` at zero absorbance.
///
/// Pure probes keep the low-rank form
/// `∂ρ = ½|a²ψ⟩⟨a²ψ| − ¼(|χ⟩⟨ψ| + |ψ⟩⟨χ|)`, `χ = a†²a²ψ`, so large cutoffs never
/// materialise dense matrices unless asked.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedState {
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pure(StateVector),
    Dense {
        rho0: DensityMatrix,
        drho: Array2<C64>,
    },
}

struct Outer<'a> {
    left: &'a [C64],
    right: &'a [C64],
}

impl FockOperator for Outer<'_> {
    fn dim(&self) -> usize {
        self.left.len()
    }

    fn element(&self, row: usize, col: usize) -> C64 {
        self.left[row] * self.right[col].conj()
    }
}

/// `a²ψ` and `a†²a²ψ`.
pub(crate) fn tpa_vectors(psi: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let d = psi.len();
    let u = (0..d)
        .map(|n| {
            if n + 2 < d {
                psi[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt()
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let chi = psi
        .iter()
        .enumerate()
        .map(|(n, c)| c * (n * n.saturating_sub(1)) as f64)
        .collect();
    (u, chi)
}

fn scale_moments(m: FieldMoments, s: f64) -> FieldMoments {
    FieldMoments {
        trace: m.trace * s,
        n1: m.n1 * s,
        n2: m.n2 * s,
        a1: m.a1 * s,
        a2: m.a2 * s,
    }
}

fn add_moments(x: FieldMoments, y: FieldMoments) -> FieldMoments {
    FieldMoments {
        trace: x.trace + y.trace,
        n1: x.n1 + y.n1,
        n2: x.n2 + y.n2,
        a1: x.a1 + y.a1,
        a2: x.a2 + y.a2,
    }
}

impl PerturbedState {
    pub fn from_pure(psi: StateVector) -> Self {
        Self {
            repr: Repr::Pure(psi),
        }
    }

    pub fn from_density(rho0: DensityMatrix) -> Self {
        let drho = tpa_generator(&rho0);
        Self {
            repr: Repr::Dense { rho0, drho },
        }
    }

    /// Pairs a state with a caller-supplied derivative.
    pub fn from_parts(rho0: DensityMatrix, drho: Array2<C64>) -> Result<Self> {
        if drho.dim() != rho0.matrix().dim() {
            return Err(TpaError::DimensionMismatch {
                expected: rho0.matrix().nrows(),
                found: drho.nrows(),
            });
        }
        Ok(Self {
            repr: Repr::Dense { rho0, drho },
        })
    }

    pub fn pure_state(&self) -> Option<&StateVector> {
        match &self.repr {
            Repr::Pure(psi) => Some(psi),
            Repr::Dense { .. } => None,
        }
    }

    pub fn n_max(&self) -> usize {
        match &self.repr {
            Repr::Pure(psi) => psi.n_max(),
            Repr::Dense { rho0, .. } => rho0.n_max(),
        }
    }

    pub fn rho0(&self) -> DensityMatrix {
        match &self.repr {
            Repr::Pure(psi) => psi.to_density(),
            Repr::Dense { rho0, .. } => rho0.clone(),
        }
    }

    pub fn drho(&self) -> Array2<C64> {
        match &self.repr {
            Repr::Pure(psi) => {
                let c = psi.amplitudes();
                let (u, chi) = tpa_vectors(c);
                let d = c.len();
                Array2::from_shape_fn((d, d), |(m, n)| {
                    u[m] * u[n].conj() * 0.5 - (chi[m] * c[n].conj() + c[m] * chi[n].conj()) * 0.25
                })
            }
            Repr::Dense { drho, .. } => drho.clone(),
        }
    }

    /// Populations of `ρ(0)` and their derivatives.
    pub fn populations(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.repr {
            Repr::Pure(psi) => {
                let p = psi.populations();
                let dp = population_derivative(&p);
                (p, dp)
            }
            Repr::Dense { rho0, drho } => (rho0.populations(), drho.diagonal()),
        }
    }

    /// Linear field moments of `ρ(0)` and of `∂ρ/∂ε`.
    pub fn field_moments(&self) -> (FieldMoments, FieldMoments) {
        match &self.repr {
            Repr::Pure(psi) => {
                let c = psi.amplitudes();
                let (u, chi) = tpa_vectors(c);
                let m0 = FieldMoments::of(psi);
                let gain = FieldMoments::of(&Outer {
                    left: &u,
                    right: &u,
                });
                let cross = FieldMoments::of(&Outer {
                    left: &chi,
                    right: c,
                });
                let cross_t = FieldMoments::of(&Outer {
                    left: c,
                    right: &chi,
                });
                let dm = add_moments(
                    scale_moments(gain, 0.5),
                    scale_moments(add_moments(cross, cross_t), -0.25),
                );
                (m0, dm)
            }
            Repr::Dense { rho0, drho } => (FieldMoments::of(rho0), FieldMoments::of(drho)),
        }
    }

    /// Applies loss to both members (dense).
    pub fn with_loss(&self, loss: &LossSpec) -> PerturbedState {
        let rho0 = loss_channel(&self.rho0(), loss);
        let drho = loss_map(&self.drho(), loss);
        PerturbedState {
            repr: Repr::Dense { rho0, drho },
        }
    }

    /// Checks that `∂ρ/∂ε` is traceless and Hermitian to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let drho = self.drho();
        let tr: C64 = drho.diag().sum();
        if tr.norm() > tol {
            return Err(TpaError::Numerical(format!(
                "state derivative has trace {:.3e}",
                tr.norm()
            )));
        }
        let d = drho.nrows();
        for m in 0..d {
            for n in m..d {
                if (drho[[m, n]] - drho[[n, m]].conj()).norm() > tol {
                    return Err(TpaError::Numerical(
                        "state derivative is not Hermitian".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Builds the probe and its first-order absorption derivative.
pub fn perturb_state(spec: &ProbeSpec, cutoff: &FockCutoff) -> Result<PerturbedState> {
    Ok(PerturbedState::from_pure(make_probe_state(spec, cutoff)?))
}

/// Integrates `dρ/dε = L ρ` to finite `eps` with classical RK4 steps.
pub fn propagate_tpa<F>(rho: &Array2<C64>, eps: f64, steps: usize, generator: F) -> Array2<C64>
where
    F: Fn(&Array2<C64>) -> Array2<C64>,
{
    let h = eps / steps.max(1) as f64;
    let mut x = rho.clone();
    for _ in 0..steps.max(1) {
        let k1 = generator(&x);
        let k2 = generator(&(&x + &(&k1 * C64::new(h / 2.0, 0.0))));
        let k3 = generator(&(&x + &(&k2 * C64::new(h / 2.0, 0.0))));
        let k4 = generator(&(&x + &(&k3 * C64::new(h, 0.0))));
        x = x
            + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h / 6.0, 0.0);
    }
    x
}
