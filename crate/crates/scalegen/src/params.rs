//! Published model parameter presets: per model and scale size, the bias
//! strength and HAR normalization constants used for the headline runs,
//! together with the acceptance rates reported for them.

use crate::generator::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRow {
    pub model: Model,
    pub n: usize,
    pub i_min: f64,
    pub trans_n: u32,
    pub w: f64,
    pub hmin: f64,
    pub hmax: f64,
    pub beta: f64,
    /// Reported acceptance fraction for this row.
    pub q: f64,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    model: Model,
    n: usize,
    i_min: f64,
    trans_n: u32,
    w: f64,
    hmin: f64,
    hmax: f64,
    beta: f64,
    q: f64,
) -> ParamRow {
    ParamRow {
        model,
        n,
        i_min,
        trans_n,
        w,
        hmin,
        hmax,
        beta,
        q,
    }
}

pub const PARAM_TABLE: &[ParamRow] = &[
    row(Model::Ran, 4, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Ran, 5, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Ran, 6, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Ran, 7, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Ran, 8, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Ran, 9, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 1.0),
    row(Model::Min, 4, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.79),
    row(Model::Min, 5, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.59),
    row(Model::Min, 6, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.37),
    row(Model::Min, 7, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.20),
    row(Model::Min, 8, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.084),
    row(Model::Min, 9, 80.0, 0, 0.0, 0.0, 0.0, 0.0, 0.025),
    row(Model::Har, 4, 80.0, 0, 20.0, 14.0, 43.98, 3.0, 5.6e-2),
    row(Model::Har, 5, 80.0, 0, 20.0, 15.0, 41.67, 7.0, 2.3e-3),
    row(Model::Har, 6, 80.0, 0, 20.0, 16.0, 39.47, 13.0, 2.9e-5),
    row(Model::Har, 7, 80.0, 0, 20.0, 17.0, 37.57, 9.5, 1.7e-4),
    row(Model::Har, 8, 80.0, 0, 20.0, 18.0, 35.58, 9.0, 6.4e-5),
    row(Model::Har, 9, 80.0, 0, 20.0, 18.0, 31.84, 14.0, 2.6e-6),
    row(Model::Trans, 4, 80.0, 2, 0.0, 0.0, 0.0, 200.0, 7.8e-2),
    row(Model::Trans, 5, 80.0, 2, 0.0, 0.0, 0.0, 284.8, 1.3e-2),
    row(Model::Trans, 6, 80.0, 2, 0.0, 0.0, 0.0, 1666.7, 3.9e-5),
    row(Model::Trans, 7, 80.0, 2, 0.0, 0.0, 0.0, 471.4, 2.0e-4),
    row(Model::Trans, 8, 80.0, 2, 0.0, 0.0, 0.0, 412.5, 6.2e-5),
    row(Model::Trans, 9, 80.0, 2, 0.0, 0.0, 0.0, 500.0, 6.0e-6),
    row(Model::Fif, 4, 80.0, 0, 20.0, 0.0, 0.0, 2000.0, 3.2e-3),
    row(Model::Fif, 5, 80.0, 0, 20.0, 0.0, 0.0, 2000.0, 1.2e-3),
    row(Model::Fif, 6, 80.0, 0, 20.0, 0.0, 0.0, 4000.0, 3.9e-6),
    row(Model::Fif, 7, 80.0, 0, 20.0, 0.0, 0.0, 4000.0, 9.4e-7),
    row(Model::Fif, 8, 80.0, 0, 20.0, 0.0, 0.0, 4000.0, 9.7e-8),
    row(Model::Fif, 9, 80.0, 0, 20.0, 0.0, 0.0, 4000.0, 9.1e-9),
];

pub fn paper_params(model: Model, n: usize) -> Option<&'static ParamRow> {
    PARAM_TABLE.iter().find(|r| r.model == model && r.n == n)
}
