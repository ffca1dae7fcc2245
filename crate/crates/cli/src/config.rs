//! The run-configuration file format.
//!
//! Configs are flat, section-oriented text (`[game]`, `[player.1]`, `[sim]`,
//! `[outputs]`, `[metrics]`) parsed as TOML. Parsing is total: unknown fields
//! are errors, every validation failure names the offending field, and the
//! validated config serializes back to a canonical echo that reproduces the
//! run byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nashseek::controller::{freq_serde, Freq, SeekerParams};
use nashseek::game::{builtin_example, ActionBounds, GameModel, Polynomial, Term};
use nashseek::sim::{SimConfig, StepPolicy};

/// A configuration error with the offending field spelled out.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Which game the run plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    /// The built-in two-player example with known equilibria.
    BuiltinExample,
    /// A game given by polynomial dynamics and payoffs over `[x; u]`.
    Polynomial,
}

/// One monomial `coeff * prod_v vars[v]^exps[v]` of a config polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub exps: Vec<u32>,
    pub coeff: f64,
}

/// A polynomial as a list of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySection {
    pub terms: Vec<TermSection>,
}

/// `[game]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub kind: GameKind,
    /// Plant state dimension (polynomial games only; may be 0 for a static
    /// game).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_dim: Option<usize>,
    /// Per-player lower action bounds; `-inf` entries mean unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_lo: Option<Vec<f64>>,
    /// Per-player upper action bounds; `inf` entries mean unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_hi: Option<Vec<f64>>,
    /// One polynomial per plant state component, over `[x_1..x_n, u_1..u_N]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<Vec<PolySection>>,
    /// One payoff polynomial per player, over the same variables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<PolySection>>,
}

/// `[player.N]` section: one seeker's gains and initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSection {
    pub k: f64,
    pub b: f64,
    pub omega_l: f64,
    pub omega_h: f64,
    /// Probing frequency as an exact rational string (`"2"`, `"5/2"`).
    #[serde(with = "freq_serde")]
    pub omega: Freq,
    #[serde(default)]
    pub phi: f64,
    pub u_hat0: f64,
    #[serde(default = "default_a0")]
    pub a0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
}

fn default_a0() -> f64 {
    0.2
}

/// `[sim]` section; every field has the library default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub horizon: f64,
    pub step: f64,
    pub sample_stride: usize,
    pub divergence_bound: f64,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub step_check: StepPolicy,
    pub allow_frequency_violations: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            horizon: d.horizon,
            step: d.step,
            sample_stride: d.sample_stride,
            divergence_bound: d.divergence_bound,
            mode: d.mode,
            x0: d.x0,
            step_check: d.step_check,
            allow_frequency_violations: d.allow_frequency_violations,
        }
    }
}

/// `[outputs]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    /// Directory all files go into (created if missing).
    pub dir: String,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            csv: true,
            json: true,
        }
    }
}

/// Optional `[metrics]` section: the reference point runs are scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    /// Reference action profile (the equilibrium candidate).
    pub u_star: Vec<f64>,
    /// Reference payoffs; computed from `u_star` through the plant when
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_star: Option<Vec<f64>>,
    /// Settling band half-width in action units.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.02
}

/// The whole config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub game: GameSection,
    /// Keyed `"1".."N"`; all players must be present.
    pub player: BTreeMap<String, PlayerSection>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
}

/// Everything a command needs, extracted from a validated [`FileConfig`].
#[derive(Debug)]
pub struct ResolvedConfig {
    pub game: GameModel,
    pub params: Vec<SeekerParams>,
    pub sim: SimConfig,
    pub outputs: OutputsSection,
    pub metrics: Option<MetricsSection>,
    /// Canonical text that reparses to the same validated config.
    pub echo: String,
}

/// Parses a config file's text. Syntax and unknown-field errors come back
/// with the offending line/field in the message.
pub fn parse_config(text: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Player keys must be exactly `"1".."N"`. Returns the sections in order.
fn players_in_order(
    player: &BTreeMap<String, PlayerSection>,
) -> Result<Vec<&PlayerSection>, ConfigError> {
    if player.is_empty() {
        return err("at least one [player.N] section is required");
    }
    let n = player.len();
    let mut ordered = Vec::with_capacity(n);
    for i in 1..=n {
        let key = i.to_string();
        match player.get(&key) {
            Some(p) => ordered.push(p),
            None => {
                let found: Vec<&str> = player.keys().map(String::as_str).collect();
                return err(format!(
                    "player sections must be numbered contiguously from 1: \
                     missing [player.{i}] among [{}]",
                    found.join(", ")
                ));
            }
        }
    }
    Ok(ordered)
}

fn build_polynomials(
    which: &str,
    sections: &[PolySection],
    n_vars: usize,
) -> Result<Vec<Polynomial>, ConfigError> {
    let mut out = Vec::with_capacity(sections.len());
    for (idx, sec) in sections.iter().enumerate() {
        let mut terms = Vec::with_capacity(sec.terms.len());
        for (t_idx, term) in sec.terms.iter().enumerate() {
            if term.exps.len() != n_vars {
                return err(format!(
                    "game.{which}[{idx}].terms[{t_idx}].exps must have {n_vars} entries \
                     (state then actions), got {}",
                    term.exps.len()
                ));
            }
            if !term.coeff.is_finite() {
                return err(format!(
                    "game.{which}[{idx}].terms[{t_idx}].coeff must be finite, got {}",
                    term.coeff
                ));
            }
            terms.push(Term {
                exps: term.exps.clone(),
                coeff: term.coeff,
            });
        }
        let poly = Polynomial::new(n_vars, terms)
            .map_err(|e| ConfigError(format!("game.{which}[{idx}]: {e}")))?;
        out.push(poly);
    }
    Ok(out)
}

fn build_game(game: &GameSection, n_players: usize) -> Result<GameModel, ConfigError> {
    match game.kind {
        GameKind::BuiltinExample => {
            for (field, set) in [
                ("state_dim", game.state_dim.is_some()),
                ("bounds_lo", game.bounds_lo.is_some()),
                ("bounds_hi", game.bounds_hi.is_some()),
                ("dynamics", game.dynamics.is_some()),
                ("payoffs", game.payoffs.is_some()),
            ] {
                if set {
                    return err(format!(
                        "game.{field} is fixed by the builtin game; remove it"
                    ));
                }
            }
            if n_players != 2 {
                return err(format!(
                    "the builtin game has exactly 2 players; found {n_players} [player.N] sections"
                ));
            }
            Ok(builtin_example())
        }
        GameKind::Polynomial => {
            let state_dim = match game.state_dim {
                Some(d) => d,
                None => return err("game.state_dim is required for polynomial games"),
            };
            let n_vars = state_dim + n_players;
            static NO_DYNAMICS: &[PolySection] = &[];
            let dynamics: &[PolySection] = match &game.dynamics {
                Some(d) => d,
                // A static game has no plant; an absent list means empty.
                None if state_dim == 0 => NO_DYNAMICS,
                None => return err("game.dynamics is required for polynomial games"),
            };
            if dynamics.len() != state_dim {
                return err(format!(
                    "game.dynamics must have one polynomial per state component: \
                     expected {state_dim}, got {}",
                    dynamics.len()
                ));
            }
            let payoffs = match &game.payoffs {
                Some(p) => p,
                None => return err("game.payoffs is required for polynomial games"),
            };
            if payoffs.len() != n_players {
                return err(format!(
                    "game.payoffs must have one polynomial per player: \
                     expected {n_players}, got {}",
                    payoffs.len()
                ));
            }
            let dyn_polys = build_polynomials("dynamics", dynamics, n_vars)?;
            let pay_polys = build_polynomials("payoffs", payoffs, n_vars)?;

            let any_bounds = game.bounds_lo.is_some() || game.bounds_hi.is_some();
            let mut bounds = vec![ActionBounds::unbounded(); n_players];
            if let Some(lo) = &game.bounds_lo {
                if lo.len() != n_players {
                    return err(format!(
                        "game.bounds_lo must have one entry per player: \
                         expected {n_players}, got {}",
                        lo.len()
                    ));
                }
                for (i, &v) in lo.iter().enumerate() {
                    bounds[i].lo = v;
                }
            }
            if let Some(hi) = &game.bounds_hi {
                if hi.len() != n_players {
                    return err(format!(
                        "game.bounds_hi must have one entry per player: \
                         expected {n_players}, got {}",
                        hi.len()
                    ));
                }
                for (i, &v) in hi.iter().enumerate() {
                    bounds[i].hi = v;
                }
            }
            for (i, b) in bounds.iter().enumerate() {
                if b.lo.is_nan() || b.hi.is_nan() || b.lo > b.hi {
                    return err(format!(
                        "game.bounds for player {} must satisfy lo <= hi, got [{}, {}]",
                        i + 1,
                        b.lo,
                        b.hi
                    ));
                }
            }
            GameModel::from_polynomials(
                state_dim,
                dyn_polys,
                pay_polys,
                any_bounds.then_some(bounds),
            )
            .map_err(|e| ConfigError(format!("game: {e}")))
        }
    }
}

fn build_sim(sim: &SimSection, state_dim: usize) -> Result<SimConfig, ConfigError> {
    if !(sim.horizon > 0.0) || !sim.horizon.is_finite() {
        return err(format!(
            "sim.horizon must be positive and finite, got {}",
            sim.horizon
        ));
    }
    if !(sim.step > 0.0) || !sim.step.is_finite() {
        return err(format!("sim.step must be positive and finite, got {}", sim.step));
    }
    if sim.sample_stride == 0 {
        return err("sim.sample_stride must be at least 1");
    }
    if !(sim.divergence_bound > 0.0) {
        return err(format!(
            "sim.divergence_bound must be positive, got {}",
            sim.divergence_bound
        ));
    }
    if nashseek::controller::scheme(&sim.mode).is_none() {
        return err(format!(
            "sim.mode must be one of: {}; got \"{}\"",
            nashseek::controller::scheme_names().join(", "),
            sim.mode
        ));
    }
    if let Some(x0) = &sim.x0 {
        if x0.len() != state_dim {
            return err(format!(
                "sim.x0 must have {state_dim} entries to match the plant state, got {}",
                x0.len()
            ));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return err("sim.x0 entries must be finite");
        }
    }
    Ok(SimConfig {
        horizon: sim.horizon,
        step: sim.step,
        sample_stride: sim.sample_stride,
        divergence_bound: sim.divergence_bound,
        mode: sim.mode.clone(),
        x0: sim.x0.clone(),
        step_check: sim.step_check,
        allow_frequency_violations: sim.allow_frequency_violations,
    })
}

/// Serializes a config back to canonical section-oriented text.
pub fn canonical_echo(cfg: &FileConfig) -> Result<String, ConfigError> {
    let body = toml::to_string(cfg)
        .map_err(|e| ConfigError(format!("cannot serialize config echo: {e}")))?;
    let mut text = String::new();
    let _ = writeln!(text, "# canonical configuration echo");
    text.push_str(&body);
    Ok(text)
}

/// Validates a parsed config and resolves it into runnable pieces. Every
/// failure message names the field at fault.
pub fn resolve(cfg: &FileConfig) -> Result<ResolvedConfig, ConfigError> {
    let ordered = players_in_order(&cfg.player)?;
    let n_players = ordered.len();
    let game = build_game(&cfg.game, n_players)?;

    let mut params = Vec::with_capacity(n_players);
    for (i, sec) in ordered.iter().enumerate() {
        let p = SeekerParams {
            k: sec.k,
            b: sec.b,
            omega_l: sec.omega_l,
            omega_h: sec.omega_h,
            omega: sec.omega,
            phi: sec.phi,
            u_hat0: sec.u_hat0,
            a0: sec.a0,
            n0: sec.n0,
        };
        p.validate()
            .map_err(|e| ConfigError(format!("player.{}: {e}", i + 1)))?;
        params.push(p);
    }

    let sim = build_sim(&cfg.sim, game.state_dim())?;

    if cfg.outputs.dir.is_empty() {
        return err("outputs.dir must be a non-empty path");
    }

    if let Some(m) = &cfg.metrics {
        if m.u_star.len() != n_players {
            return err(format!(
                "metrics.u_star must have one entry per player: expected {n_players}, got {}",
                m.u_star.len()
            ));
        }
        if m.u_star.iter().any(|v| !v.is_finite()) {
            return err("metrics.u_star entries must be finite");
        }
        if let Some(j) = &m.j_star {
            if j.len() != n_players {
                return err(format!(
                    "metrics.j_star must have one entry per player: expected {n_players}, got {}",
                    j.len()
                ));
            }
            if j.iter().any(|v| !v.is_finite()) {
                return err("metrics.j_star entries must be finite");
            }
        }
        if !(m.epsilon > 0.0) || !m.epsilon.is_finite() {
            return err(format!(
                "metrics.epsilon must be positive and finite, got {}",
                m.epsilon
            ));
        }
    }

    let echo = canonical_echo(cfg)?;
    Ok(ResolvedConfig {
        game,
        params,
        sim,
        outputs: cfg.outputs.clone(),
        metrics: cfg.metrics.clone(),
        echo,
    })
}
