//! Closed-loop simulation of the game plus one seeker per player.
//!
//! The integrated state vector is laid out flat as
//! `[x_1..x_n, u_hat_1..u_hat_N, a_1..a_N, n_1..n_N]` and advanced with the
//! classic fourth-order fixed-step scheme. Payoffs are evaluated inside every
//! stage, so the seekers always see the instantaneous payoff of the current
//! stage state.

use serde::{Deserialize, Serialize};

use crate::controller::{
    action, scheme, validate_frequencies, SeekerDerivs, SeekerParams, SeekerScheme, SeekerState,
};
use crate::error::{ensure_finite, Error, Result};
use crate::game::GameModel;

/// What to do when the integration step is too coarse for the fastest
/// probing signal (`step > (2 pi / max w) / 20`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepPolicy {
    /// Refuse to run.
    #[default]
    Error,
    /// Run anyway and record a warning on the trajectory.
    Warn,
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Total simulated time; the run takes `round(horizon / step)` steps.
    pub horizon: f64,
    /// Fixed integration step.
    pub step: f64,
    /// Record every `sample_stride`-th step (plus the initial state).
    pub sample_stride: usize,
    /// Early-termination threshold on `||x||_inf`.
    pub divergence_bound: f64,
    /// Seeker scheme registry name (`"wsso"` or `"classical"`).
    pub mode: String,
    /// Initial plant state; zeros when unset.
    pub x0: Option<Vec<f64>>,
    /// Step-size sanity check policy.
    pub step_check: StepPolicy,
    /// Run even if the probing frequencies violate the non-resonance
    /// conditions; the override is recorded on the trajectory.
    pub allow_frequency_violations: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            step: 1e-3,
            sample_stride: 1,
            divergence_bound: 1e6,
            mode: "wsso".into(),
            x0: None,
            step_check: StepPolicy::Error,
            allow_frequency_violations: false,
        }
    }
}

/// Why a run stopped before the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub time: f64,
    pub reason: String,
}

/// Recorded closed-loop run. All per-sample vectors have equal length and
/// uniformly spaced times; samples stop before any early-termination event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Plant states `x` per sample.
    pub states: Vec<Vec<f64>>,
    /// Applied actions `u = u_hat + a sin(w t + phi)` per sample.
    pub actions: Vec<Vec<f64>>,
    /// Action estimates `u_hat` per sample.
    pub estimates: Vec<Vec<f64>>,
    /// Probing amplitudes `a` per sample.
    pub amplitudes: Vec<Vec<f64>>,
    /// Washout filter states `n` per sample.
    pub filters: Vec<Vec<f64>>,
    /// Payoff vectors `J` per sample.
    pub payoffs: Vec<Vec<f64>>,
    /// Set when the run stopped before the horizon (divergence, an action
    /// leaving its admissible interval, or a numerical-domain failure).
    pub terminated_early: Option<Termination>,
    /// True when frequency violations were explicitly allowed through.
    pub frequency_override: bool,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn n_players(&self) -> usize {
        self.actions.first().map_or(0, Vec::len)
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }
}

/// One fourth-order fixed step of `y' = deriv(t, y)` from `(t, state)` with
/// step `h`. Every stage output is checked finite.
pub fn rk4_step<F>(deriv: F, state: &[f64], t: f64, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "integration step must be positive and finite, got {h}"
        )));
    }
    let dim = state.len();
    let check_dim = |k: &Vec<f64>| -> Result<()> {
        if k.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "derivative output",
                expected: dim,
                got: k.len(),
            });
        }
        Ok(())
    };
    let k1 = deriv(t, state)?;
    check_dim(&k1)?;
    ensure_finite("integration stage 1", &k1)?;
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        y[i] = state[i] + 0.5 * h * k1[i];
    }
    let k2 = deriv(t + 0.5 * h, &y)?;
    check_dim(&k2)?;
    ensure_finite("integration stage 2", &k2)?;
    for i in 0..dim {
        y[i] = state[i] + 0.5 * h * k2[i];
    }
    let k3 = deriv(t + 0.5 * h, &y)?;
    check_dim(&k3)?;
    ensure_finite("integration stage 3", &k3)?;
    for i in 0..dim {
        y[i] = state[i] + h * k3[i];
    }
    let k4 = deriv(t + h, &y)?;
    check_dim(&k4)?;
    ensure_finite("integration stage 4", &k4)?;
    let mut out = vec![0.0; dim];
    for i in 0..dim {
        out[i] = state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    ensure_finite("integration update", &out)?;
    Ok(out)
}

fn unpack_seekers(y: &[f64], state_dim: usize, n_players: usize) -> Vec<SeekerState> {
    (0..n_players)
        .map(|i| SeekerState {
            u_hat: y[state_dim + i],
            a: y[state_dim + n_players + i],
            n: y[state_dim + 2 * n_players + i],
        })
        .collect()
}

fn closed_loop_with(
    game: &GameModel,
    params: &[SeekerParams],
    sch: &dyn SeekerScheme,
    x: &[f64],
    seekers: &[SeekerState],
    t: f64,
) -> Result<(Vec<f64>, Vec<SeekerDerivs>)> {
    let u: Vec<f64> = seekers
        .iter()
        .zip(params)
        .map(|(s, p)| action(s, p, t))
        .collect();
    let j = game.eval_payoffs(x, &u)?;
    let dx = if game.state_dim() > 0 {
        game.eval_dynamics(x, &u)?
    } else {
        Vec::new()
    };
    let mut dseek = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        dseek.push(sch.derivatives(&seekers[i], j[i], &params[i], t)?);
    }
    Ok((dx, dseek))
}

/// Time derivative of the full closed loop under the named seeker scheme:
/// returns `(x', seeker derivatives)` at time `t`.
pub fn closed_loop_derivatives(
    game: &GameModel,
    params: &[SeekerParams],
    mode: &str,
    x: &[f64],
    seekers: &[SeekerState],
    t: f64,
) -> Result<(Vec<f64>, Vec<SeekerDerivs>)> {
    let sch = scheme(mode).ok_or_else(|| unknown_mode(mode))?;
    if seekers.len() != params.len() {
        return Err(Error::DimensionMismatch {
            context: "seeker state count",
            expected: params.len(),
            got: seekers.len(),
        });
    }
    closed_loop_with(game, params, sch, x, seekers, t)
}

fn unknown_mode(mode: &str) -> Error {
    Error::InvalidArgument(format!(
        "unknown seeker mode {mode:?}; available: {}",
        crate::controller::scheme_names().join(", ")
    ))
}

/// Runs the closed loop and records a [`Trajectory`].
///
/// Divergence of the plant state, an action leaving its admissible interval,
/// and numerical-domain failures terminate the run early (recorded on the
/// trajectory, not an error), so parameter sweeps still yield usable data.
/// Configuration problems — unknown mode, non-positive step, frequency
/// violations without the override, a too-coarse step under
/// [`StepPolicy::Error`] — are errors.
pub fn simulate(game: &GameModel, params: &[SeekerParams], cfg: &SimConfig) -> Result<Trajectory> {
    let n_players = game.n_players();
    let state_dim = game.state_dim();
    if params.len() != n_players {
        return Err(Error::DimensionMismatch {
            context: "seeker parameter count",
            expected: n_players,
            got: params.len(),
        });
    }
    for p in params {
        p.validate()?;
    }
    let sch = scheme(&cfg.mode).ok_or_else(|| unknown_mode(&cfg.mode))?;
    if !(cfg.step > 0.0) || !cfg.step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sim.step must be positive and finite, got {}",
            cfg.step
        )));
    }
    if !(cfg.horizon > cfg.step) || !cfg.horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sim.horizon must be finite and larger than sim.step, got horizon = {}, step = {}",
            cfg.horizon, cfg.step
        )));
    }
    if cfg.sample_stride == 0 {
        return Err(Error::InvalidArgument(
            "sim.sample_stride must be at least 1".into(),
        ));
    }
    if !(cfg.divergence_bound > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sim.divergence_bound must be positive, got {}",
            cfg.divergence_bound
        )));
    }
    let x0 = match &cfg.x0 {
        Some(x) => {
            if x.len() != state_dim {
                return Err(Error::DimensionMismatch {
                    context: "initial plant state",
                    expected: state_dim,
                    got: x.len(),
                });
            }
            x.clone()
        }
        None => vec![0.0; state_dim],
    };

    let mut warnings = Vec::new();
    let freqs: Vec<_> = params.iter().map(|p| p.omega).collect();
    let freq_report = validate_frequencies(&freqs)?;
    let frequency_override = if freq_report.ok {
        false
    } else if cfg.allow_frequency_violations {
        warnings.push(format!(
            "probing-frequency conditions violated (override active): {}",
            freq_report.summary()
        ));
        true
    } else {
        return Err(Error::FrequencyViolation(freq_report.summary()));
    };

    let max_omega = params
        .iter()
        .map(|p| p.omega_value())
        .fold(0.0f64, f64::max);
    let step_limit = (2.0 * std::f64::consts::PI / max_omega) / 20.0;
    if cfg.step > step_limit {
        let msg = format!(
            "sim.step = {} exceeds the fastest probing period / 20 = {:.6}; the probing signal \
             is under-resolved",
            cfg.step, step_limit
        );
        match cfg.step_check {
            StepPolicy::Error => return Err(Error::InvalidArgument(msg)),
            StepPolicy::Warn => warnings.push(msg),
        }
    }

    // Initial seeker states; the washout filter defaults to the initial
    // payoff so the seekers start with zero payoff error.
    let u0: Vec<f64> = params
        .iter()
        .map(|p| p.u_hat0 + p.a0 * p.perturbation(0.0))
        .collect();
    let j0 = game.eval_payoffs(&x0, &u0)?;
    let dim = state_dim + 3 * n_players;
    let mut y = vec![0.0; dim];
    y[..state_dim].copy_from_slice(&x0);
    for i in 0..n_players {
        y[state_dim + i] = params[i].u_hat0;
        y[state_dim + n_players + i] = params[i].a0;
        y[state_dim + 2 * n_players + i] = params[i].n0.unwrap_or(j0[i]);
    }

    let h = cfg.step;
    let n_steps = (cfg.horizon / h).round().max(1.0) as u64;
    let n_samples_hint = (n_steps / cfg.sample_stride as u64 + 2) as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_samples_hint),
        states: Vec::with_capacity(n_samples_hint),
        actions: Vec::with_capacity(n_samples_hint),
        estimates: Vec::with_capacity(n_samples_hint),
        amplitudes: Vec::with_capacity(n_samples_hint),
        filters: Vec::with_capacity(n_samples_hint),
        payoffs: Vec::with_capacity(n_samples_hint),
        terminated_early: None,
        frequency_override,
        warnings,
    };

    let deriv = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let x = &y[..state_dim];
        let seekers = unpack_seekers(y, state_dim, n_players);
        let (dx, dseek) = closed_loop_with(game, params, sch, x, &seekers, t)?;
        let mut dy = vec![0.0; dim];
        dy[..state_dim].copy_from_slice(&dx);
        for i in 0..n_players {
            dy[state_dim + i] = dseek[i].du_hat;
            dy[state_dim + n_players + i] = dseek[i].da;
            dy[state_dim + 2 * n_players + i] = dseek[i].dn;
        }
        Ok(dy)
    };

    let record = |t: f64, y: &[f64], traj: &mut Trajectory| -> Result<()> {
        let x = &y[..state_dim];
        let seekers = unpack_seekers(y, state_dim, n_players);
        let u: Vec<f64> = seekers
            .iter()
            .zip(params)
            .map(|(s, p)| action(s, p, t))
            .collect();
        let j = game.eval_payoffs(x, &u)?;
        traj.times.push(t);
        traj.states.push(x.to_vec());
        traj.actions.push(u);
        traj.estimates.push(seekers.iter().map(|s| s.u_hat).collect());
        traj.amplitudes.push(seekers.iter().map(|s| s.a).collect());
        traj.filters.push(seekers.iter().map(|s| s.n).collect());
        traj.payoffs.push(j);
        Ok(())
    };

    record(0.0, &y, &mut traj)?;

    for k in 1..=n_steps {
        let t_prev = (k - 1) as f64 * h;
        let t = k as f64 * h;
        match rk4_step(&deriv, &y, t_prev, h) {
            Ok(next) => y = next,
            Err(Error::NumericalDomain(msg)) => {
                traj.terminated_early = Some(Termination {
                    time: t,
                    reason: format!("numerical domain failure: {msg}"),
                });
                break;
            }
            Err(e) => return Err(e),
        }

        let x = &y[..state_dim];
        let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if x_norm > cfg.divergence_bound {
            traj.terminated_early = Some(Termination {
                time: t,
                reason: format!(
                    "plant state diverged: ||x||_inf = {:.6e} > divergence bound {:.1e}",
                    x_norm, cfg.divergence_bound
                ),
            });
            break;
        }
        let seekers = unpack_seekers(&y, state_dim, n_players);
        let u: Vec<f64> = seekers
            .iter()
            .zip(params)
            .map(|(s, p)| action(s, p, t))
            .collect();
        if let Some((i, v)) = game.bounds_violation(&u) {
            let b = game.action_bounds().expect("violation implies bounds")[i];
            traj.terminated_early = Some(Termination {
                time: t,
                reason: format!(
                    "action u{} = {:.6e} left its admissible interval {}",
                    i + 1,
                    v,
                    b
                ),
            });
            break;
        }

        if k % cfg.sample_stride as u64 == 0 {
            record(t, &y, &mut traj)?;
        }
    }

    Ok(traj)
}
