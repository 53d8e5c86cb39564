//! Numerical lab: trajectory integration, conjugacy and residual-order
//! checks, trust-domain probes, decay bounds, and invariant-subset sampling.
//!
//! Everything here consumes immutable series produced by the engine;
//! independent trajectories and probe batches are safe to run concurrently.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::algebra::{mono_eval, to_c64, C64, ModalSeries, StateVector};
use crate::engine::NormalFormResult;
use crate::error::{Error, Result};
use crate::model::{ModeClass, SpectralModel};

/// A modal series compiled for dense double-precision evaluation.
struct CompiledField {
    alpha: Vec<C64>,
    include_linear: bool,
    terms: Vec<CompiledTerm>,
}

struct CompiledTerm {
    target: usize,
    factors: Vec<(usize, u32)>,
    coeffs: Vec<C64>, // t-polynomial, ascending powers
}

impl CompiledField {
    fn new(model: &SpectralModel, series: &ModalSeries, include_linear: bool) -> Self {
        let alpha = model
            .modes()
            .iter()
            .map(|&j| to_c64(model.eigenvalue(j).expect("mode in model")))
            .collect();
        let terms = series
            .terms()
            .map(|(j, q, c)| CompiledTerm {
                target: model.mode_index(j).expect("target in model"),
                factors: q
                    .entries()
                    .iter()
                    .map(|&(m, e)| (model.mode_index(m).expect("support in model"), e))
                    .collect(),
                coeffs: c.coeffs().iter().map(to_c64).collect(),
            })
            .collect();
        CompiledField {
            alpha,
            include_linear,
            terms,
        }
    }

    fn eval_into(&self, t: f64, state: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if self.include_linear {
                self.alpha[i] * state[i]
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        for term in &self.terms {
            let mut tc = Complex::new(0.0, 0.0);
            for c in term.coeffs.iter().rev() {
                tc = tc * t + c;
            }
            let mut val = tc;
            for &(idx, e) in &term.factors {
                val *= state[idx].powu(e);
            }
            out[term.target] += val;
        }
    }
}

/// Integrator settings and system identity attached to a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryMeta {
    pub dt: f64,
    pub system: String,
}

/// Samples of one integrated path, time stamps strictly monotone
/// (increasing forward, decreasing backward).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub modes: Vec<i32>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_vector(&self, i: usize) -> StateVector {
        StateVector::from_entries(
            self.modes
                .iter()
                .copied()
                .zip(self.states[i].iter().copied()),
        )
    }

    /// Delimited text: `t re im re im ...` per line, modes in model order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# trajectory ({}) modes: {}\n",
            self.meta.system,
            self.modes
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        for (t, row) in self.times.iter().zip(&self.states) {
            s.push_str(&format!("{t:.12e}"));
            for v in row {
                s.push_str(&format!(" {:.12e} {:.12e}", v.re, v.im));
            }
            s.push('\n');
        }
        s
    }
}

fn dense_state(model: &SpectralModel, v: &StateVector) -> Vec<C64> {
    model
        .modes()
        .iter()
        .map(|&j| v.entry_or_zero(j))
        .collect()
}

/// Classical fixed-step RK4 for `X' = diag(alpha) X + S(t, X)`.
/// Backward integration (`t1 < t0`) is supported; `dt > 0` is the step size.
pub fn integrate(
    model: &Arc<SpectralModel>,
    series: &ModalSeries,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    assert!(dt > 0.0, "step size must be positive");
    let field = CompiledField::new(model, series, true);
    let n = model.modes().len();
    let span = t1 - t0;
    let steps = if span == 0.0 {
        0
    } else {
        ((span.abs() / dt).round() as usize).max(1)
    };
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };

    let mut y = dense_state(model, x0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(y.clone());

    let mut k1 = vec![Complex::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    for step in 0..steps {
        let t = t0 + h * step as f64;
        field.eval_into(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h / 2.0);
        }
        field.eval_into(t + h / 2.0, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (h / 2.0);
        }
        field.eval_into(t + h / 2.0, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        field.eval_into(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let t_next = t0 + h * (step + 1) as f64;
        if !y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { t: t_next });
        }
        times.push(t_next);
        states.push(y.clone());
    }

    Ok(Trajectory {
        modes: model.modes().to_vec(),
        times,
        states,
        meta: TrajectoryMeta {
            dt,
            system: "modal field".into(),
        },
    })
}

/// Integrate the normal form, transport through `xi`, and measure the worst
/// defect of the original equation along the path:
/// `max_t || dx/dt - A x - f(t,x) - R(t,X) ||` with centered differences
/// for `dx/dt`. Shrinks like `dt^2` when the symbolic identity holds.
pub fn check_conjugacy(
    result: &NormalFormResult,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<f64> {
    conjugacy_defect(result, x0, t0, t1, dt, true)
}

/// Same measurement with the residual term deliberately omitted; the gap
/// between the two quantifies how much `R` matters along the path.
pub fn conjugacy_defect_without_residual(
    result: &NormalFormResult,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<f64> {
    conjugacy_defect(result, x0, t0, t1, dt, false)
}

fn conjugacy_defect(
    result: &NormalFormResult,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    dt: f64,
    include_residual: bool,
) -> Result<f64> {
    let model = &result.model;
    let traj = integrate(model, result.normal_form(), x0, t0, t1, dt)?;
    let n = model.modes().len();
    let xi = CompiledField::new(model, result.xi(), false);
    let f_field = CompiledField::new(model, &result.nonlinearity, true);
    let res_field = CompiledField::new(model, result.residual(), false);

    let mut xs: Vec<Vec<C64>> = Vec::with_capacity(traj.len());
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (t, state) in traj.times.iter().zip(&traj.states) {
        xi.eval_into(*t, state, &mut buf);
        xs.push(buf.clone());
    }

    let mut worst: f64 = 0.0;
    let mut rhs = vec![Complex::new(0.0, 0.0); n];
    let mut res = vec![Complex::new(0.0, 0.0); n];
    for i in 1..traj.len().saturating_sub(1) {
        let t = traj.times[i];
        let denom = traj.times[i + 1] - traj.times[i - 1];
        f_field.eval_into(t, &xs[i], &mut rhs);
        if include_residual {
            res_field.eval_into(t, &traj.states[i], &mut res);
        } else {
            res.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        }
        let mut defect = 0.0f64;
        for m in 0..n {
            let xdot = (xs[i + 1][m] - xs[i - 1][m]) / denom;
            defect += (xdot - rhs[m] - res[m]).norm_sqr();
        }
        worst = worst.max(defect.sqrt());
    }
    Ok(worst)
}

/// Fitted log-log slope of `||R(t, eps * direction)||` against `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalingFit {
    Slope(f64),
    /// Every evaluation was exactly zero; reported as an infinite slope.
    Degenerate,
}

impl ScalingFit {
    pub fn slope_or_inf(&self) -> f64 {
        match self {
            ScalingFit::Slope(s) => *s,
            ScalingFit::Degenerate => f64::INFINITY,
        }
    }
}

/// Least-squares slope of `log ||R(t, eps d)||` vs `log eps` over the grid.
pub fn residual_scaling(
    residual: &ModalSeries,
    direction: &StateVector,
    t: f64,
    eps_grid: &[f64],
) -> Result<ScalingFit> {
    let mut points = Vec::new();
    for &eps in eps_grid {
        let v = direction.scale(eps);
        let y = residual.eval(t, &v)?.norm();
        if y > 0.0 {
            points.push((eps.ln(), y.ln()));
        }
    }
    if points.len() < 2 {
        return Ok(ScalingFit::Degenerate);
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    Ok(ScalingFit::Slope((n * sxy - sx * sy) / (n * sxx - sx * sx)))
}

/// Pointwise probe of the trust domain: the symmetric-insertion matrix norm
/// of the nonlinearity against the threshold `mu_tilde`.
#[derive(Clone, Debug)]
pub struct DomainProbe {
    pub t: f64,
    pub v: StateVector,
    pub tilde_norm: f64,
    pub inside: bool,
}

/// The matrix of the symmetric tensor insertion: for each stored term
/// `(j, q, c)` and each support mode `k`, column `k` of row `j` receives
/// `c(t) (q_k / |q|) v^(q - e_k)`, so that `M(t,v) v = F(t,v)` identically.
pub fn tilde_matrix(
    model: &SpectralModel,
    series: &ModalSeries,
    t: f64,
    v: &StateVector,
) -> Result<DMatrix<C64>> {
    let n = model.modes().len();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (j, q, c) in series.terms() {
        let row = model.mode_index(j).ok_or(Error::MissingMode(j))?;
        let cval = c.eval(t);
        let deg = q.degree() as f64;
        for &(k, e) in q.entries() {
            let col = model.mode_index(k).ok_or(Error::MissingMode(k))?;
            let sub = q.minus_one(k).expect("mode in support");
            let weight = e as f64 / deg;
            m[(row, col)] += cval * weight * mono_eval(&sub, v)?;
        }
    }
    Ok(m)
}

/// Evaluate the insertion-matrix norm (l2 operator norm) at `(t, v)` and
/// compare with `mu_tilde`.
pub fn tilde_probe(
    model: &SpectralModel,
    series: &ModalSeries,
    t: f64,
    v: &StateVector,
) -> Result<DomainProbe> {
    let m = tilde_matrix(model, series, t, v)?;
    let tilde_norm = if m.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
        0.0
    } else {
        m.singular_values()[0]
    };
    Ok(DomainProbe {
        t,
        v: v.clone(),
        tilde_norm,
        inside: tilde_norm < model.mu_tilde_f64(),
    })
}

/// One verified decay/growth inequality.
#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    /// Worst `||X_a(t)|| / bound(t)` over the trajectory (for zero initial
    /// components, the worst absolute leakage instead).
    pub worst: f64,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub bounds: Vec<BoundCheck>,
    pub samples: usize,
}

impl DecayReport {
    pub fn all_passed(&self) -> bool {
        self.bounds.iter().all(|b| !b.applicable || b.passed)
    }
}

const DECAY_TOL: f64 = 1.0 + 1e-6;
const ZERO_LEAK: f64 = 1e-13;

/// Verify the exponential trichotomy bounds along one normal-form trajectory:
/// stable components decay at rate `beta - mu_tilde` forward, unstable
/// components decay at rate `gamma - mu_tilde` backward, and centre
/// components grow at most like `exp((alpha + mu_tilde)|t|)` when the stable
/// or unstable part starts at zero. The trajectory must stay inside the
/// trust domain; leaving it aborts with the exit time.
pub fn decay_check(
    result: &NormalFormResult,
    x0: &StateVector,
    horizon: f64,
    dt: f64,
) -> Result<DecayReport> {
    let model = &result.model;
    let traj = integrate(model, result.normal_form(), x0, 0.0, horizon, dt)?;
    for i in 0..traj.len() {
        let probe = tilde_probe(
            model,
            result.normal_form(),
            traj.times[i],
            &traj.state_vector(i),
        )?;
        if !probe.inside {
            return Err(Error::InsideViolation {
                t: traj.times[i],
                norm: probe.tilde_norm,
            });
        }
    }

    let gap = model.gap();
    let rate = crate::algebra::rat_to_f64;
    let mu = rate(&gap.mu_tilde);
    let forward = horizon >= 0.0;

    let class_norms = |i: usize| {
        let v = traj.state_vector(i);
        (
            v.class_norm(model, ModeClass::Centre),
            v.class_norm(model, ModeClass::Stable),
            v.class_norm(model, ModeClass::Unstable),
        )
    };
    let (c0, s0, u0) = class_norms(0);

    let mut bounds = Vec::new();

    // stable bound, forward trajectories only
    {
        let applicable =
            forward && !model.modes_of(ModeClass::Stable).is_empty() && gap.beta.is_some();
        let mut passed = true;
        let mut worst: f64 = 0.0;
        if applicable {
            let k = rate(gap.beta.as_ref().unwrap()) - mu;
            for i in 0..traj.len() {
                let (_, s, _) = class_norms(i);
                if s0 == 0.0 {
                    worst = worst.max(s);
                    passed &= s <= ZERO_LEAK;
                } else {
                    let bound = s0 * (-k * traj.times[i]).exp();
                    worst = worst.max(s / bound);
                    passed &= s <= bound * DECAY_TOL;
                }
            }
        }
        bounds.push(BoundCheck {
            name: "stable: ||X_s(t)|| <= ||X_s(0)|| exp(-(beta - mu_tilde) t)".into(),
            applicable,
            passed,
            worst,
        });
    }

    // unstable bound, backward trajectories only
    {
        let applicable =
            !forward && !model.modes_of(ModeClass::Unstable).is_empty() && gap.gamma.is_some();
        let mut passed = true;
        let mut worst: f64 = 0.0;
        if applicable {
            let k = rate(gap.gamma.as_ref().unwrap()) - mu;
            for i in 0..traj.len() {
                let (_, _, u) = class_norms(i);
                if u0 == 0.0 {
                    worst = worst.max(u);
                    passed &= u <= ZERO_LEAK;
                } else {
                    let bound = u0 * (k * traj.times[i]).exp();
                    worst = worst.max(u / bound);
                    passed &= u <= bound * DECAY_TOL;
                }
            }
        }
        bounds.push(BoundCheck {
            name: "unstable: ||X_u(t)|| <= ||X_u(0)|| exp((gamma - mu_tilde) t)".into(),
            applicable,
            passed,
            worst,
        });
    }

    // centre bound, needs a vanishing stable or unstable initial part
    {
        let applicable =
            (s0 == 0.0 || u0 == 0.0) && !model.modes_of(ModeClass::Centre).is_empty();
        let mut passed = true;
        let mut worst: f64 = 0.0;
        if applicable {
            let k = rate(&gap.alpha) + mu;
            for i in 0..traj.len() {
                let (c, _, _) = class_norms(i);
                if c0 == 0.0 {
                    worst = worst.max(c);
                    passed &= c <= ZERO_LEAK;
                } else {
                    let bound = c0 * (k * traj.times[i].abs()).exp();
                    worst = worst.max(c / bound);
                    passed &= c <= bound * DECAY_TOL;
                }
            }
        }
        bounds.push(BoundCheck {
            name: "centre: ||X_c(t)|| <= ||X_c(0)|| exp((alpha + mu_tilde) |t|)".into(),
            applicable,
            passed,
            worst,
        });
    }

    Ok(DecayReport {
        bounds,
        samples: traj.len(),
    })
}

/// Which invariant subset to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetKind {
    Centre,
    Stable,
    Unstable,
    CentreStable,
    CentreUnstable,
}

impl SubsetKind {
    pub fn parse(s: &str) -> Option<SubsetKind> {
        Some(match s {
            "c" => SubsetKind::Centre,
            "s" => SubsetKind::Stable,
            "u" => SubsetKind::Unstable,
            "cs" => SubsetKind::CentreStable,
            "cu" => SubsetKind::CentreUnstable,
            _ => return None,
        })
    }

    fn classes(self) -> &'static [ModeClass] {
        match self {
            SubsetKind::Centre => &[ModeClass::Centre],
            SubsetKind::Stable => &[ModeClass::Stable],
            SubsetKind::Unstable => &[ModeClass::Unstable],
            SubsetKind::CentreStable => &[ModeClass::Centre, ModeClass::Stable],
            SubsetKind::CentreUnstable => &[ModeClass::Centre, ModeClass::Unstable],
        }
    }
}

/// A sampled point of an invariant subset: the preimage `v` in the linear
/// subspace and its image `xi(t, v)` in original coordinates.
#[derive(Clone, Debug)]
pub struct ManifoldPoint {
    pub t: f64,
    pub preimage: StateVector,
    pub point: StateVector,
}

/// Draw points of the approximate invariant subset for one trichotomy class:
/// `v` in the chosen subspace with `||v|| <= radius`, filtered to the trust
/// domain, mapped through the transform.
pub fn invariant_subset_sample(
    result: &NormalFormResult,
    which: SubsetKind,
    samples: usize,
    radius: f64,
    t_range: (f64, f64),
    seed: u64,
) -> Result<Vec<ManifoldPoint>> {
    assert!(radius >= 0.0);
    let model = &result.model;
    let support: Vec<i32> = which
        .classes()
        .iter()
        .flat_map(|&c| model.modes_of(c))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    let max_attempts = samples.saturating_mul(100).max(100);

    while out.len() < samples && attempts < max_attempts {
        attempts += 1;
        let t = if t_range.1 > t_range.0 {
            rng.gen_range(t_range.0..t_range.1)
        } else {
            t_range.0
        };
        let mut v = StateVector::zeros(model);
        if !support.is_empty() && radius > 0.0 {
            let mut dir: Vec<C64> = (0..support.len())
                .map(|_| {
                    Complex::new(
                        rng.sample(rand::distributions::Standard),
                        rng.sample(rand::distributions::Standard),
                    )
                })
                .map(|z: C64| z - Complex::new(0.5, 0.5))
                .collect();
            let norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let r = radius * rng.gen::<f64>();
            dir.iter_mut().for_each(|z| *z *= r / norm);
            for (m, z) in support.iter().zip(dir) {
                v.set(*m, z);
            }
        }
        let probe = tilde_probe(model, result.normal_form(), t, &v)?;
        if !probe.inside {
            continue;
        }
        let point = result.xi().eval(t, &v)?;
        // carry explicit zeros for all modes so exports are rectangular
        let mut full = StateVector::zeros(model);
        for (m, z) in point.iter() {
            full.set(m, z);
        }
        out.push(ManifoldPoint {
            t,
            preimage: v,
            point: full,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{MultiIndex, TimePoly};
    use crate::engine::run;
    use crate::model::GapParams;
    use crate::testsupport::{burgers_f, burgers_model};
    use std::collections::BTreeMap;

    fn single_mode_model(re: i64, im: i64) -> Arc<SpectralModel> {
        let alpha: BTreeMap<i32, crate::algebra::CRat> = [(
            1,
            crate::algebra::crat(crate::algebra::rat(re, 1), crate::algebra::rat(im, 1)),
        )]
        .into_iter()
        .collect();
        SpectralModel::new(
            vec![1],
            alpha,
            GapParams {
                alpha: crate::algebra::rat(0, 1),
                beta: Some(crate::algebra::rat(1, 1)),
                gamma: Some(crate::algebra::rat(1, 1)),
                mu_tilde: crate::algebra::rat(1, 20),
            },
            None,
        )
        .unwrap()
    }

    #[test]
    fn linear_decay_matches_exact_solution() {
        let model = single_mode_model(-1, 0);
        let zero = ModalSeries::zero(model.clone(), 2);
        let x0 = StateVector::from_entries([(1, Complex::new(1.0, 0.0))]);
        let traj = integrate(&model, &zero, &x0, 0.0, 1.0, 1e-3).unwrap();
        let last = traj.states.last().unwrap()[0];
        assert!((last - Complex::new((-1.0f64).exp(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn rotation_conserves_norm() {
        let model = single_mode_model(0, 1);
        let zero = ModalSeries::zero(model.clone(), 2);
        let x0 = StateVector::from_entries([(1, Complex::new(1.0, 0.0))]);
        let traj = integrate(&model, &zero, &x0, 0.0, 1.0, 1e-3).unwrap();
        for s in &traj.states {
            assert!((s[0].norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_integration_runs() {
        let model = single_mode_model(-1, 0);
        let zero = ModalSeries::zero(model.clone(), 2);
        let x0 = StateVector::from_entries([(1, Complex::new(1.0, 0.0))]);
        let traj = integrate(&model, &zero, &x0, 0.0, -1.0, 1e-3).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] < w[0]));
        let last = traj.states.last().unwrap()[0];
        assert!((last - Complex::new(1.0f64.exp(), 0.0)).norm() < 1e-8);
    }

    #[test]
    fn blowup_is_reported() {
        // x' = x + x^2 from x0 = 3 blows up in finite time
        let model = single_mode_model(1, 0);
        let mut quad = ModalSeries::zero(model.clone(), 2);
        quad.add_term(1, MultiIndex::single(1, 2), TimePoly::one())
            .unwrap();
        let x0 = StateVector::from_entries([(1, Complex::new(3.0, 0.0))]);
        let err = integrate(&model, &quad, &x0, 0.0, 5.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn centre_supported_states_stay_centre_supported() {
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 4).unwrap();
        let mut x0 = StateVector::zeros(&model);
        x0.set(1, Complex::new(7e-4, 0.0));
        x0.set(-1, Complex::new(7e-4, 0.0));
        let traj = integrate(&model, result.normal_form(), &x0, 0.0, 1.0, 1e-3).unwrap();
        for i in 0..traj.len() {
            let v = traj.state_vector(i);
            for (m, z) in v.iter() {
                if m.abs() != 1 {
                    assert!(z.norm() <= 1e-13, "mode {m} leaked to {}", z.norm());
                }
            }
        }
    }

    #[test]
    fn conjugacy_defect_linear_case() {
        // f = 0: the identity is exact, only finite differencing remains
        let model = single_mode_model(-1, 0);
        let f = ModalSeries::zero(model.clone(), 2);
        let result = run(&f, 3).unwrap();
        let x0 = StateVector::from_entries([(1, Complex::new(1e-2, 0.0))]);
        let defect = check_conjugacy(&result, &x0, 0.0, 1.0, 1e-3).unwrap();
        assert!(defect <= 1e-8, "defect {defect}");
    }

    #[test]
    fn conjugacy_defect_shrinks_quadratically_and_residual_matters() {
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 3).unwrap();
        let mut x0 = StateVector::zeros(&model);
        for &m in model.modes() {
            x0.set(m, Complex::new(5e-2, 0.0));
        }
        let d1 = check_conjugacy(&result, &x0, 0.0, 1.0, 2e-3).unwrap();
        let d2 = check_conjugacy(&result, &x0, 0.0, 1.0, 1e-3).unwrap();
        let ratio = d1 / d2;
        assert!(
            (3.2..=4.8).contains(&ratio),
            "dt halving gave ratio {ratio} ({d1} -> {d2})"
        );
        // omitting R leaves the residual itself as the dominant defect
        let d_without =
            conjugacy_defect_without_residual(&result, &x0, 0.0, 1.0, 1e-3).unwrap();
        assert!(
            d_without > 3.0 * d2,
            "residual term did not matter: {d_without} vs {d2}"
        );
    }

    #[test]
    fn scaling_slope_of_pure_monomial() {
        let model = burgers_model((1, 1), 3);
        let mut r = ModalSeries::zero(model.clone(), 3);
        r.add_term(2, MultiIndex::from_pairs([(1, 2), (-1, 1)]), TimePoly::one())
            .unwrap();
        let dir = StateVector::from_entries([
            (1, Complex::new(0.8, 0.1)),
            (-1, Complex::new(0.5, -0.3)),
        ]);
        let grid: Vec<f64> = (0..8)
            .map(|i| 1e-3 * 10f64.powf(i as f64 * 2.0 / 7.0))
            .collect();
        let fit = residual_scaling(&r, &dir, 1.0, &grid).unwrap();
        match fit {
            ScalingFit::Slope(s) => assert!((s - 3.0).abs() < 0.01, "slope {s}"),
            ScalingFit::Degenerate => panic!("unexpected degenerate fit"),
        }
        // zero residual: degenerate marker
        let z = ModalSeries::zero(model, 3);
        assert_eq!(
            residual_scaling(&z, &dir, 1.0, &grid).unwrap(),
            ScalingFit::Degenerate
        );
        assert!(residual_scaling(&z, &dir, 1.0, &grid)
            .unwrap()
            .slope_or_inf()
            .is_infinite());
    }

    #[test]
    fn tilde_matrix_single_entry_and_identity() {
        let model = burgers_model((1, 1), 3);
        let mut f = ModalSeries::zero(model.clone(), 2);
        f.add_term(1, MultiIndex::single(1, 2), TimePoly::one())
            .unwrap();
        let eps = 0.25;
        let v = {
            let mut v = StateVector::zeros(&model);
            v.set(1, Complex::new(eps, 0.0));
            v
        };
        let probe = tilde_probe(&model, &f, 0.3, &v).unwrap();
        assert!((probe.tilde_norm - eps).abs() < 1e-12);
        assert!(probe.inside == (eps < model.mu_tilde_f64()));

        // v = 0 gives the zero matrix exactly
        let z = StateVector::zeros(&model);
        let m = tilde_matrix(&model, &f, 0.3, &z).unwrap();
        assert!(m.iter().all(|c| c.re == 0.0 && c.im == 0.0));
        let probe = tilde_probe(&model, &f, 0.3, &z).unwrap();
        assert_eq!(probe.tilde_norm, 0.0);
        assert!(probe.inside);
    }

    #[test]
    fn tilde_matrix_times_v_reproduces_series() {
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut v = StateVector::zeros(&model);
            for &m in model.modes() {
                v.set(
                    m,
                    Complex::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
                );
            }
            let t = rng.gen_range(-1.0..1.0);
            let mat = tilde_matrix(&model, &f, t, &v).unwrap();
            let dense = dense_state(&model, &v);
            let fv = f.eval(t, &v).unwrap();
            for (row, &j) in model.modes().iter().enumerate() {
                let mut acc = Complex::new(0.0, 0.0);
                for col in 0..dense.len() {
                    acc += mat[(row, col)] * dense[col];
                }
                let want = fv.entry_or_zero(j);
                assert!(
                    (acc - want).norm() <= 1e-10 * (1.0 + want.norm()),
                    "row {j}: {acc} vs {want}"
                );
            }
        }
    }

    #[test]
    fn decay_bounds_hold_for_class_supported_data() {
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 4).unwrap();

        // stable-supported initial data, forward
        let mut x0 = StateVector::zeros(&model);
        x0.set(2, Complex::new(5e-4, 0.0));
        x0.set(-2, Complex::new(5e-4, 0.0));
        x0.set(3, Complex::new(5e-4, 0.0));
        let report = decay_check(&result, &x0, 2.0, 1e-3).unwrap();
        assert!(report.all_passed(), "{:?}", report.bounds);
        assert!(report.bounds[0].applicable);

        // unstable-supported initial data, backward
        let mut x0 = StateVector::zeros(&model);
        x0.set(0, Complex::new(1e-3, 0.0));
        let report = decay_check(&result, &x0, -2.0, 1e-3).unwrap();
        assert!(report.all_passed(), "{:?}", report.bounds);
        assert!(report.bounds[1].applicable);

        // zero initial data: everything holds trivially
        let report = decay_check(&result, &StateVector::zeros(&model), 1.0, 1e-2).unwrap();
        assert!(report.all_passed());
    }

    #[test]
    fn inside_violation_aborts_decay_check() {
        // at r = 1 the cubic normal form acts on the centre modes, so large
        // centre data pushes the tilde norm past mu_tilde = 1/20 as t grows
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 4).unwrap();
        let mut x0 = StateVector::zeros(&model);
        x0.set(1, Complex::new(1.0, 0.0));
        x0.set(-1, Complex::new(1.0, 0.0));
        let err = decay_check(&result, &x0, 1.0, 1e-2).unwrap_err();
        assert!(matches!(err, Error::InsideViolation { .. }));
    }

    #[test]
    fn manifold_sampling_contracts() {
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 3).unwrap();

        let pts =
            invariant_subset_sample(&result, SubsetKind::Centre, 50, 0.01, (0.0, 1.0), 7).unwrap();
        assert_eq!(pts.len(), 50);
        for p in &pts {
            // preimage lives in the centre subspace
            for (m, z) in p.preimage.iter() {
                if m.abs() != 1 {
                    assert_eq!(z, Complex::new(0.0, 0.0));
                }
            }
            assert!(p.preimage.norm() <= 0.01 + 1e-12);
            // image agrees with the transform evaluated at the preimage
            let want = result.xi().eval(p.t, &p.preimage).unwrap();
            for (m, z) in want.iter() {
                assert!((p.point.entry_or_zero(m) - z).norm() < 1e-14);
            }
        }

        // radius zero: only the origin, and xi(t, 0) = 0
        let pts =
            invariant_subset_sample(&result, SubsetKind::Stable, 5, 0.0, (0.0, 1.0), 3).unwrap();
        assert_eq!(pts.len(), 5);
        for p in &pts {
            assert_eq!(p.point.norm(), 0.0);
        }

        // determinism: same seed, same points
        let a = invariant_subset_sample(&result, SubsetKind::Centre, 10, 0.01, (0.0, 1.0), 42)
            .unwrap();
        let b = invariant_subset_sample(&result, SubsetKind::Centre, 10, 0.01, (0.0, 1.0), 42)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.t, y.t);
            assert_eq!(x.point, y.point);
        }
    }

    #[test]
    fn centre_manifold_points_match_closed_form() {
        // at r = n^2 = 1 the quadratic transform on centre data is
        // x_2 = (1/6)(t - 1/3) X_1^2, x_0 = (t+1) X_1 X_{-1}, mirrored in -2
        let model = burgers_model((1, 1), 3);
        let f = burgers_f(&model);
        let result = run(&f, 3).unwrap();
        let pts =
            invariant_subset_sample(&result, SubsetKind::Centre, 20, 0.01, (0.0, 1.0), 9).unwrap();
        for p in &pts {
            let x1 = p.preimage.entry_or_zero(1);
            let xm1 = p.preimage.entry_or_zero(-1);
            let t = p.t;
            let want2 = (t - 1.0 / 3.0) / 6.0 * x1 * x1;
            let want0 = (t + 1.0) * x1 * xm1;
            assert!((p.point.entry_or_zero(2) - want2).norm() < 1e-15);
            assert!((p.point.entry_or_zero(0) - want0).norm() < 1e-15);
            assert!((p.point.entry_or_zero(1) - x1).norm() < 1e-15);
        }
    }
}
