//! Game models: state dynamics `x' = f(x, u)`, per-player payoffs
//! `J_i = j_i(x, u)`, action-space bounds, and the quasi-steady-state map
//! `l(u)` (the plant equilibrium reached under frozen actions), solved
//! numerically by forward integration.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Vector field / vector payoff callback: `(x, u) -> Vec<f64>`.
pub type VecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// One monomial `coeff * prod_k v_k^exps[k]` over the combined variable
/// vector `v = [x_1..x_n, u_1..u_N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coeff: f64,
}

/// Sparse multivariate polynomial over `[x; u]`.
///
/// Evaluation accumulates terms in declaration order with one
/// multiply-accumulate per term, so results are deterministic and negating
/// every coefficient negates the value exactly (to the last bit, up to the
/// sign of zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    n_vars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn new(n_vars: usize, terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.exps.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    context: "polynomial term exponent vector",
                    expected: n_vars,
                    got: t.exps.len(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "polynomial term {i} has non-finite coefficient {}",
                    t.coeff
                )));
            }
        }
        Ok(Self { n_vars, terms })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Evaluates at the combined variable vector `vars = [x; u]`.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.n_vars);
        let mut sum = 0.0;
        for t in &self.terms {
            let mut m = 1.0;
            for (&e, &v) in t.exps.iter().zip(vars) {
                if e > 0 {
                    m *= v.powi(e as i32);
                }
            }
            sum += t.coeff * m;
        }
        sum
    }

    /// Evaluates with the variable vector split as `[x; u]`, avoiding the
    /// concatenation allocation on hot paths.
    pub fn eval_split(&self, x: &[f64], u: &[f64]) -> f64 {
        debug_assert_eq!(x.len() + u.len(), self.n_vars);
        let nx = x.len();
        let mut sum = 0.0;
        for t in &self.terms {
            let mut m = 1.0;
            for (k, &e) in t.exps.iter().enumerate() {
                if e > 0 {
                    let v = if k < nx { x[k] } else { u[k - nx] };
                    m *= v.powi(e as i32);
                }
            }
            sum += t.coeff * m;
        }
        sum
    }

    /// Same polynomial with every coefficient negated.
    pub fn negated(&self) -> Self {
        Self {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    exps: t.exps.clone(),
                    coeff: -t.coeff,
                })
                .collect(),
        }
    }
}

/// Closed admissible interval for one player's action. Use infinities for
/// unbounded sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ActionBounds {
    pub fn unbounded() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

impl fmt::Display for ActionBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// An N-player differential game: dynamics, payoffs, and optional per-player
/// action bounds. `state_dim` may be zero, in which case the game is static
/// and payoffs depend on actions alone.
#[derive(Clone)]
pub struct GameModel {
    state_dim: usize,
    n_players: usize,
    dynamics: VecFn,
    payoffs: VecFn,
    bounds: Option<Vec<ActionBounds>>,
}

impl fmt::Debug for GameModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameModel")
            .field("state_dim", &self.state_dim)
            .field("n_players", &self.n_players)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl GameModel {
    pub fn new(
        state_dim: usize,
        n_players: usize,
        dynamics: VecFn,
        payoffs: VecFn,
        bounds: Option<Vec<ActionBounds>>,
    ) -> Result<Self> {
        if n_players == 0 {
            return Err(Error::InvalidArgument(
                "a game needs at least one player".into(),
            ));
        }
        if let Some(b) = &bounds {
            if b.len() != n_players {
                return Err(Error::DimensionMismatch {
                    context: "action bounds",
                    expected: n_players,
                    got: b.len(),
                });
            }
            for (i, bi) in b.iter().enumerate() {
                if !(bi.lo < bi.hi) {
                    return Err(Error::InvalidArgument(format!(
                        "player {} bounds are empty: {}",
                        i + 1,
                        bi
                    )));
                }
            }
        }
        Ok(Self {
            state_dim,
            n_players,
            dynamics,
            payoffs,
            bounds,
        })
    }

    /// Builds a polynomial game. The number of players is inferred from the
    /// payoff count; every polynomial must be over `state_dim + n_players`
    /// variables ordered `[x_1..x_n, u_1..u_N]`.
    pub fn from_polynomials(
        state_dim: usize,
        dynamics: Vec<Polynomial>,
        payoffs: Vec<Polynomial>,
        bounds: Option<Vec<ActionBounds>>,
    ) -> Result<Self> {
        let n_players = payoffs.len();
        if n_players == 0 {
            return Err(Error::InvalidArgument(
                "a game needs at least one payoff polynomial".into(),
            ));
        }
        if dynamics.len() != state_dim {
            return Err(Error::DimensionMismatch {
                context: "dynamics polynomial count",
                expected: state_dim,
                got: dynamics.len(),
            });
        }
        let n_vars = state_dim + n_players;
        for p in dynamics.iter().chain(payoffs.iter()) {
            if p.n_vars() != n_vars {
                return Err(Error::DimensionMismatch {
                    context: "polynomial variable count",
                    expected: n_vars,
                    got: p.n_vars(),
                });
            }
        }
        let dyn_polys = dynamics;
        let pay_polys = payoffs;
        let dynamics: VecFn =
            Arc::new(move |x, u| dyn_polys.iter().map(|p| p.eval_split(x, u)).collect());
        let payoffs: VecFn =
            Arc::new(move |x, u| pay_polys.iter().map(|p| p.eval_split(x, u)).collect());
        Self::new(state_dim, n_players, dynamics, payoffs, bounds)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn action_bounds(&self) -> Option<&[ActionBounds]> {
        self.bounds.as_deref()
    }

    fn check_dims(&self, context: &'static str, x: &[f64], u: &[f64]) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.state_dim,
                got: x.len(),
            });
        }
        if u.len() != self.n_players {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.n_players,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Evaluates `f(x, u)`; errors on dimension mismatch or non-finite output.
    pub fn eval_dynamics(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims("dynamics state/action", x, u)?;
        let dx = (self.dynamics)(x, u);
        if dx.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                context: "dynamics output",
                expected: self.state_dim,
                got: dx.len(),
            });
        }
        ensure_finite("dynamics evaluation", &dx)?;
        Ok(dx)
    }

    /// Evaluates the payoff vector `j(x, u)`; errors on dimension mismatch or
    /// non-finite output.
    pub fn eval_payoffs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims("payoff state/action", x, u)?;
        let j = (self.payoffs)(x, u);
        if j.len() != self.n_players {
            return Err(Error::DimensionMismatch {
                context: "payoff output",
                expected: self.n_players,
                got: j.len(),
            });
        }
        ensure_finite("payoff evaluation", &j)?;
        Ok(j)
    }

    /// Returns the first player whose action violates the bounds, as
    /// `(zero-based index, offending value)`.
    pub fn bounds_violation(&self, u: &[f64]) -> Option<(usize, f64)> {
        let bounds = self.bounds.as_ref()?;
        u.iter()
            .zip(bounds)
            .position(|(&v, b)| !b.contains(v))
            .map(|i| (i, u[i]))
    }
}

/// Dynamics and payoff polynomials of the built-in two-player example game
/// over `[x1, x2, u1, u2]`, exposed for tests that need to transform them.
pub fn builtin_example_polynomials() -> (Vec<Polynomial>, Vec<Polynomial>) {
    let term = |exps: [u32; 4], coeff: f64| Term {
        exps: exps.to_vec(),
        coeff,
    };
    let dynamics = vec![
        // x1' = -4 x1 + x1 x2 + u1
        Polynomial::new(
            4,
            vec![
                term([1, 0, 0, 0], -4.0),
                term([1, 1, 0, 0], 1.0),
                term([0, 0, 1, 0], 1.0),
            ],
        )
        .unwrap(),
        // x2' = -4 x2 + u2
        Polynomial::new(4, vec![term([0, 1, 0, 0], -4.0), term([0, 0, 0, 1], 1.0)]).unwrap(),
    ];
    let payoffs = vec![
        // J1 = -16 x1^2 + 8 x1^2 x2 - x1^2 x2^2 - 6 x1 x2^2 + (773/32) x1 x2 - (5/8) x1
        Polynomial::new(
            4,
            vec![
                term([2, 0, 0, 0], -16.0),
                term([2, 1, 0, 0], 8.0),
                term([2, 2, 0, 0], -1.0),
                term([1, 2, 0, 0], -6.0),
                term([1, 1, 0, 0], 773.0 / 32.0),
                term([1, 0, 0, 0], -5.0 / 8.0),
            ],
        )
        .unwrap(),
        // J2 = -64 x2^3 + 48 x1 x2 - 12 x1 x2^2
        Polynomial::new(
            4,
            vec![
                term([0, 3, 0, 0], -64.0),
                term([1, 1, 0, 0], 48.0),
                term([1, 2, 0, 0], -12.0),
            ],
        )
        .unwrap(),
    ];
    (dynamics, payoffs)
}

/// The built-in two-player polynomial game used throughout the tests and
/// docs. Its quasi-steady-state map is `l(u) = (4 u1 / (16 - u2), u2 / 4)`,
/// the admissible set is `u1 >= 0`, `0 <= u2 <= 16`, and it has a stable Nash
/// equilibrium at `(25/64, 5/8)` plus an unstable one at `(1/64, 1/8)`.
pub fn builtin_example() -> GameModel {
    let (dynamics, payoffs) = builtin_example_polynomials();
    let bounds = vec![
        ActionBounds {
            lo: 0.0,
            hi: f64::INFINITY,
        },
        ActionBounds { lo: 0.0, hi: 16.0 },
    ];
    GameModel::from_polynomials(2, dynamics, payoffs, Some(bounds))
        .expect("built-in example game is well-formed")
}

/// Options for the quasi-steady-state solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Convergence threshold on `||f(x, u)||_2`.
    pub tol: f64,
    /// Maximum integration time before giving up.
    pub budget: f64,
    /// Internal integration step.
    pub step: f64,
    /// Abort threshold on `||x||_inf`.
    pub divergence_bound: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            budget: 1e3,
            step: 1e-2,
            divergence_bound: 1e6,
        }
    }
}

/// Result of a quasi-steady-state solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMapResult {
    /// Best state iterate found (the converged equilibrium when `converged`).
    pub x_eq: Vec<f64>,
    /// `||f(x_eq, u)||_2` at that iterate.
    pub residual_norm: f64,
    /// Integration time at which the iterate was taken.
    pub time: f64,
    pub converged: bool,
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves the quasi-steady-state map `l(u)` by integrating `x' = f(x, u)`
/// forward from the origin under frozen actions until the dynamics residual
/// drops below `opts.tol`. See [`equilibrium_map_from`] for details.
pub fn equilibrium_map(
    game: &GameModel,
    u: &[f64],
    opts: &SolveOptions,
) -> Result<EquilibriumMapResult> {
    let x0 = vec![0.0; game.state_dim()];
    equilibrium_map_from(game, u, &x0, opts)
}

/// Like [`equilibrium_map`] but starts the integration from `x0` (useful for
/// warm starts when sweeping nearby action vectors).
///
/// The residual is checked before each step, so a converged input returns
/// immediately and the map is idempotent. If the budget runs out the best
/// (lowest-residual) iterate seen is returned with `converged = false`; a
/// state excursion beyond `opts.divergence_bound` is an error.
pub fn equilibrium_map_from(
    game: &GameModel,
    u: &[f64],
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<EquilibriumMapResult> {
    if u.len() != game.n_players() {
        return Err(Error::DimensionMismatch {
            context: "equilibrium map actions",
            expected: game.n_players(),
            got: u.len(),
        });
    }
    if x0.len() != game.state_dim() {
        return Err(Error::DimensionMismatch {
            context: "equilibrium map initial state",
            expected: game.state_dim(),
            got: x0.len(),
        });
    }
    if !(opts.tol > 0.0) || !(opts.budget > 0.0) || !(opts.step > 0.0) {
        return Err(Error::InvalidArgument(
            "equilibrium solve tol, budget, and step must be positive".into(),
        ));
    }
    if game.state_dim() == 0 {
        return Ok(EquilibriumMapResult {
            x_eq: Vec::new(),
            residual_norm: 0.0,
            time: 0.0,
            converged: true,
        });
    }

    let h = opts.step;
    let mut x = x0.to_vec();
    let mut best_x = x.clone();
    let mut best_res = f64::INFINITY;
    let mut best_t = 0.0;
    let mut k: u64 = 0;
    loop {
        let t = k as f64 * h;
        let fx = game.eval_dynamics(&x, u)?;
        let res = l2_norm(&fx);
        if res <= opts.tol {
            return Ok(EquilibriumMapResult {
                x_eq: x,
                residual_norm: res,
                time: t,
                converged: true,
            });
        }
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
            best_t = t;
        }
        if t >= opts.budget {
            return Ok(EquilibriumMapResult {
                x_eq: best_x,
                residual_norm: best_res,
                time: best_t,
                converged: false,
            });
        }
        if sup_norm(&x) > opts.divergence_bound {
            return Err(Error::Divergence(format!(
                "plant state reached ||x||_inf = {:.3e} > {:.1e} at t = {:.3} while solving the \
                 equilibrium map at u = {:?}",
                sup_norm(&x),
                opts.divergence_bound,
                t,
                u
            )));
        }

        // Classic fourth-order step with frozen u (k1 already computed).
        let n = x.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = x[i] + 0.5 * h * fx[i];
        }
        let k2 = game.eval_dynamics(&y, u)?;
        for i in 0..n {
            y[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = game.eval_dynamics(&y, u)?;
        for i in 0..n {
            y[i] = x[i] + h * k3[i];
        }
        let k4 = game.eval_dynamics(&y, u)?;
        for i in 0..n {
            x[i] += h / 6.0 * (fx[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        k += 1;
    }
}

/// Payoffs on the quasi-steady-state manifold: `j(l(u), u)`.
///
/// Errors with a plant-solve diagnostic if the equilibrium map does not
/// converge within its budget.
pub fn reduced_payoff(game: &GameModel, u: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    let sol = equilibrium_map(game, u, opts)?;
    if !sol.converged {
        return Err(Error::PlantSolve(format!(
            "equilibrium map did not converge at u = {:?}: residual {:.3e} > tol {:.1e} after \
             budget {} time units",
            u, sol.residual_norm, opts.tol, opts.budget
        )));
    }
    game.eval_payoffs(&sol.x_eq, u)
}
