//! Two-photon absorption estimation with squeezed and coherent probes under
//! single-photon loss.
//!
//! The pipeline is: build the probe `S(ζ)D(α)|0⟩` ([`fock`]), take the exact
//! first-order change of the state under two-photon absorption and apply
//! loss ([`channels`]), form outcome distributions and their derivatives
//! ([`distributions`]), then turn those into sensitivities and Fisher
//! information ([`metrology`]). [`validate`] runs the numerical property
//! checks as a report.

pub mod channels;
pub mod distributions;
pub mod error;
pub mod fock;
pub mod metrology;
pub mod validate;

pub use num_complex::Complex64 as C64;

pub use channels::{
    binomial_loss_pmf, loss_channel, perturb_state, population_derivative, tpa_generator, LossSpec,
    PerturbedState,
};
pub use distributions::{
    coherent_pmf, pmf_with_derivative, quad_pdf_with_derivative, sv_pmf_closed_form, Pmf,
    QuadGridSpec, QuadPdf, Quadrature,
};
pub use error::{Result, TpaError};
pub use fock::{
    ladder_matrices, make_probe_state, moments, DensityMatrix, FockCutoff, Moments, ProbeSpec,
    StateVector,
};
pub use metrology::{
    fisher_continuous, fisher_discrete, fisher_ratio_coh_over_sv, limit_table,
    sensitivity_analytic, sensitivity_numeric, FisherResult, Observable, Sensitivity,
    SensitivityResult,
};
