//! Shared fixtures for unit tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{crat_frac, crat_int, rat, CRat};
use crate::model::{GapParams, SpectralModel};

/// A small mixed-spectrum model over modes -3..3:
/// alpha_j = 1 - j^2 (so 0 is unstable, +-1 centre, the rest stable).
pub fn tiny_model() -> Arc<SpectralModel> {
    burgers_model((1, 1), 3)
}

/// Eigenvalues `r - j^2` over modes -n..n with the standard gap
/// (alpha = 0, beta = 3, gamma = 1, mu_tilde = 1/20) used by the worked
/// example at r = 1.
pub fn burgers_model(r: (i64, i64), n: i32) -> Arc<SpectralModel> {
    burgers_model_gapped(
        r,
        n,
        GapParams {
            alpha: rat(0, 1),
            beta: Some(rat(3, 1)),
            gamma: Some(rat(1, 1)),
            mu_tilde: rat(1, 20),
        },
    )
}

pub fn burgers_model_gapped(r: (i64, i64), n: i32, gap: GapParams) -> Arc<SpectralModel> {
    let modes: Vec<i32> = (-n..=n).collect();
    let alpha: BTreeMap<i32, CRat> = modes
        .iter()
        .map(|&j| (j, crat_frac(r.0, r.1) - crat_int(j as i64 * j as i64)))
        .collect();
    SpectralModel::new(modes, alpha, gap, None).unwrap()
}

/// The quadratic convolution nonlinearity `(t/2) sum_k k (j-k) x_{j-k} x_k`,
/// assembled by hand (independently of the config-driven generator).
pub fn burgers_f(model: &Arc<SpectralModel>) -> crate::algebra::ModalSeries {
    use crate::algebra::{ModalSeries, MultiIndex, TimePoly};
    let mut f = ModalSeries::zero(model.clone(), 2);
    for &j in model.modes() {
        for &k in model.modes() {
            let m = j as i64 - k as i64;
            let Ok(m) = i32::try_from(m) else { continue };
            if !model.contains_mode(m) || k > m {
                continue;
            }
            let (q, prod) = if k == m {
                (MultiIndex::single(k, 2), rat(k as i64 * k as i64, 2))
            } else {
                (
                    MultiIndex::from_pairs([(k, 1), (m, 1)]),
                    rat(k as i64 * m as i64, 1),
                )
            };
            let coeff = TimePoly::from_coeffs(vec![
                crate::algebra::crat_zero(),
                crate::algebra::crat_real(prod),
            ]);
            f.add_term(j, q, coeff).unwrap();
        }
    }
    f
}
