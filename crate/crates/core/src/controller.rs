//! Per-player extremum-seeking controllers.
//!
//! Each player runs a sinusoidally perturbed gradient seeker with a washout
//! filter `n_i` tracking its payoff and (in the vanishing-amplitude scheme) a
//! first-order amplitude law that drives the probing amplitude to zero as the
//! filtered payoff error vanishes:
//!
//! ```text
//! u_i      = u_hat_i + a_i sin(w_i t + phi_i)
//! u_hat_i' = k_i (J_i - n_i) sin(w_i t + phi_i)
//! a_i'     = -wl_i a_i + b_i wl_i (J_i - n_i)     (vanishing-amplitude only)
//! n_i'     = -wh_i n_i + wh_i J_i
//! ```
//!
//! The classical fixed-amplitude baseline keeps `a_i' = 0` so the probing
//! amplitude stays at its initial value forever.
//!
//! Probing frequencies are exact rationals so the non-resonance conditions
//! the averaging analysis needs can be checked exactly; see
//! [`validate_frequencies`].

use std::fmt;

use num_rational::{Ratio, Rational64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact probing frequency in rad per time unit.
pub type Freq = Rational64;

/// Parses `"p"` or `"p/q"` into a positive rational frequency.
pub fn parse_freq(s: &str) -> Result<Freq> {
    let bad = |msg: &str| {
        Error::InvalidArgument(format!(
            "invalid frequency {s:?}: {msg}; frequencies are exact rationals written as an \
             integer or \"p/q\""
        ))
    };
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = num.parse().map_err(|_| bad("numerator is not an integer"))?;
    let q: i64 = den
        .parse()
        .map_err(|_| bad("denominator is not an integer"))?;
    if q == 0 {
        return Err(bad("denominator is zero"));
    }
    let f = Ratio::new(p, q);
    if f <= Ratio::from_integer(0) {
        return Err(bad("frequency must be positive"));
    }
    Ok(f)
}

/// Canonical `"p/q"` (or `"p"` for integers) rendering of a frequency.
pub fn freq_to_string(f: &Freq) -> String {
    if *f.denom() == 1 {
        f.numer().to_string()
    } else {
        format!("{}/{}", f.numer(), f.denom())
    }
}

/// Serde adapter for [`Freq`]: serialized as the canonical string, accepted
/// as a string or an integer. Floats are rejected because the non-resonance
/// checks need exact values.
pub mod freq_serde {
    use super::*;
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(f: &Freq, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&freq_to_string(f))
    }

    struct FreqVisitor;

    impl Visitor<'_> for FreqVisitor {
        type Value = Freq;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a positive rational frequency as an integer or a \"p/q\" string")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Freq, E> {
            parse_freq(v).map_err(|e| E::custom(e.to_string()))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Freq, E> {
            if v <= 0 {
                return Err(E::custom("frequency must be positive"));
            }
            Ok(Ratio::from_integer(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Freq, E> {
            i64::try_from(v)
                .map_err(|_| E::custom("frequency out of range"))
                .and_then(|v| self.visit_i64(v))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Freq, E> {
            Err(E::custom(format!(
                "frequency {v} given as a float; write it as an exact rational (integer or \
                 \"p/q\" string) so resonance checks are exact"
            )))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Freq, D::Error> {
        de.deserialize_any(FreqVisitor)
    }
}

/// Gains, probing signal, and initial conditions for one player's seeker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekerParams {
    /// Integrator gain `k_i`.
    pub k: f64,
    /// Amplitude-law gain `b_i`.
    pub b: f64,
    /// Amplitude-law filter frequency `wl_i`.
    pub omega_l: f64,
    /// Payoff washout filter frequency `wh_i`.
    pub omega_h: f64,
    /// Probing frequency `w_i` (exact rational).
    #[serde(with = "freq_serde")]
    pub omega: Freq,
    /// Probing phase `phi_i`.
    pub phi: f64,
    /// Initial action estimate.
    pub u_hat0: f64,
    /// Initial probing amplitude.
    pub a0: f64,
    /// Initial washout filter state; defaults to the initial payoff when
    /// unset, which zeroes the initial payoff error.
    pub n0: Option<f64>,
}

impl SeekerParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("b", self.b),
            ("omega_l", self.omega_l),
            ("omega_h", self.omega_h),
            ("phi", self.phi),
            ("u_hat0", self.u_hat0),
            ("a0", self.a0),
            ("n0", self.n0.unwrap_or(0.0)),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "seeker parameter {name} must be finite, got {v}"
                )));
            }
        }
        if !(self.omega_l > 0.0) || !(self.omega_h > 0.0) {
            return Err(Error::InvalidArgument(
                "seeker filter frequencies omega_l and omega_h must be positive".into(),
            ));
        }
        if self.k == 0.0 {
            return Err(Error::InvalidArgument(
                "seeker gain k must be nonzero (its sign selects maximization or minimization)"
                    .into(),
            ));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "initial probing amplitude a0 must be positive, got {}",
                self.a0
            )));
        }
        Ok(())
    }

    /// Probing frequency as a float, for signal evaluation.
    pub fn omega_value(&self) -> f64 {
        *self.omega.numer() as f64 / *self.omega.denom() as f64
    }

    /// The probing signal `sin(w t + phi)` at time `t`.
    pub fn perturbation(&self, t: f64) -> f64 {
        (self.omega_value() * t + self.phi).sin()
    }
}

/// One player's controller state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeekerState {
    /// Action estimate `u_hat_i`.
    pub u_hat: f64,
    /// Probing amplitude `a_i`.
    pub a: f64,
    /// Washout filter state `n_i`.
    pub n: f64,
}

/// Time derivative of [`SeekerState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeekerDerivs {
    pub du_hat: f64,
    pub da: f64,
    pub dn: f64,
}

/// The action a player applies at time `t`: `u_hat + a sin(w t + phi)`.
pub fn action(state: &SeekerState, params: &SeekerParams, t: f64) -> f64 {
    state.u_hat + state.a * params.perturbation(t)
}

fn check_seeker_inputs(state: &SeekerState, j: f64) -> Result<()> {
    if !state.u_hat.is_finite() || !state.a.is_finite() || !state.n.is_finite() {
        return Err(Error::NumericalDomain(format!(
            "seeker state is non-finite: u_hat = {}, a = {}, n = {}",
            state.u_hat, state.a, state.n
        )));
    }
    if !j.is_finite() {
        return Err(Error::NumericalDomain(format!(
            "seeker payoff input is non-finite: {j}"
        )));
    }
    Ok(())
}

/// Vanishing-amplitude seeker law. The payoff error `J - n` drives both the
/// action estimate and the amplitude, so the probing amplitude decays once
/// the payoff stops improving.
pub fn seeker_derivatives(
    state: &SeekerState,
    j: f64,
    params: &SeekerParams,
    t: f64,
) -> Result<SeekerDerivs> {
    check_seeker_inputs(state, j)?;
    let e = j - state.n;
    let s = params.perturbation(t);
    Ok(SeekerDerivs {
        du_hat: params.k * e * s,
        da: -params.omega_l * state.a + params.b * params.omega_l * e,
        dn: -params.omega_h * state.n + params.omega_h * j,
    })
}

/// Classical fixed-amplitude seeker law: identical to [`seeker_derivatives`]
/// except the amplitude is constant (`a' = 0`).
pub fn classical_es_derivatives(
    state: &SeekerState,
    j: f64,
    params: &SeekerParams,
    t: f64,
) -> Result<SeekerDerivs> {
    check_seeker_inputs(state, j)?;
    let e = j - state.n;
    let s = params.perturbation(t);
    Ok(SeekerDerivs {
        du_hat: params.k * e * s,
        da: 0.0,
        dn: -params.omega_h * state.n + params.omega_h * j,
    })
}

/// A seeker update law, selectable by name at runtime.
pub trait SeekerScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn derivatives(
        &self,
        state: &SeekerState,
        j: f64,
        params: &SeekerParams,
        t: f64,
    ) -> Result<SeekerDerivs>;
}

struct VanishingAmplitude;

impl SeekerScheme for VanishingAmplitude {
    fn name(&self) -> &'static str {
        "wsso"
    }

    fn derivatives(
        &self,
        state: &SeekerState,
        j: f64,
        params: &SeekerParams,
        t: f64,
    ) -> Result<SeekerDerivs> {
        seeker_derivatives(state, j, params, t)
    }
}

struct FixedAmplitude;

impl SeekerScheme for FixedAmplitude {
    fn name(&self) -> &'static str {
        "classical"
    }

    fn derivatives(
        &self,
        state: &SeekerState,
        j: f64,
        params: &SeekerParams,
        t: f64,
    ) -> Result<SeekerDerivs> {
        classical_es_derivatives(state, j, params, t)
    }
}

/// Looks up a seeker scheme by registry name.
pub fn scheme(name: &str) -> Option<&'static dyn SeekerScheme> {
    match name {
        "wsso" => Some(&VanishingAmplitude),
        "classical" => Some(&FixedAmplitude),
        _ => None,
    }
}

/// Names of all registered schemes.
pub fn scheme_names() -> &'static [&'static str] {
    &["wsso", "classical"]
}

/// One resonance among the probing frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyViolationRecord {
    /// The failing condition, e.g. `"w_i = 2 w_j"`.
    pub condition: String,
    /// One-based players involved, in the condition's index order.
    pub players: Vec<usize>,
    /// Their frequencies as canonical rational strings.
    pub values: Vec<String>,
}

/// Outcome of the exact non-resonance checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub frequencies: Vec<String>,
    pub violations: Vec<FrequencyViolationRecord>,
    /// Whether every pairwise frequency ratio is a rational number. Guaranteed
    /// `true` here because frequencies are taken as exact rationals; the field
    /// is kept so reports state the hypothesis they were checked under.
    pub all_ratios_rational: bool,
    /// `true` iff there are no violations and all ratios are rational.
    pub ok: bool,
}

impl FrequencyReport {
    /// Compact single-line summary of the violations.
    pub fn summary(&self) -> String {
        if self.ok {
            return "all probing-frequency conditions hold".into();
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| {
                format!(
                    "{} for players {:?} with frequencies ({})",
                    v.condition,
                    v.players,
                    v.values.join(", ")
                )
            })
            .collect();
        parts.join("; ")
    }
}

type Rat = Ratio<i128>;

fn widen(f: &Freq) -> Rat {
    Ratio::new(*f.numer() as i128, *f.denom() as i128)
}

/// Checks the exact non-resonance conditions the averaging analysis requires
/// of the probing frequencies:
///
/// * for every ordered pair `i != j`: `w_i != w_j`, `w_i != 2 w_j`,
///   `w_i != 3 w_j`;
/// * for every triple of distinct players: `w_i != w_j + w_k`,
///   `2 w_i != w_j + w_k`, `w_i != 2 w_j + w_k`.
///
/// All arithmetic is exact rational arithmetic; every violation found is
/// recorded (the checks do not stop at the first hit).
pub fn validate_frequencies(freqs: &[Freq]) -> Result<FrequencyReport> {
    if freqs.is_empty() {
        return Err(Error::InvalidArgument(
            "frequency list must be non-empty".into(),
        ));
    }
    for f in freqs {
        if *f <= Ratio::from_integer(0) {
            return Err(Error::InvalidArgument(format!(
                "probing frequencies must be positive, got {}",
                freq_to_string(f)
            )));
        }
    }
    let w: Vec<Rat> = freqs.iter().map(widen).collect();
    let n = w.len();
    let two = Rat::from_integer(2);
    let three = Rat::from_integer(3);
    let mut violations = Vec::new();
    let mut push = |condition: &str, players: Vec<usize>| {
        let values = players
            .iter()
            .map(|&p| freq_to_string(&freqs[p - 1]))
            .collect();
        violations.push(FrequencyViolationRecord {
            condition: condition.to_string(),
            players,
            values,
        });
    };

    // Pair conditions over ordered pairs; the symmetric equality is recorded
    // once per unordered pair.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if i < j && w[i] == w[j] {
                push("w_i = w_j", vec![i + 1, j + 1]);
            }
            if w[i] == two * w[j] {
                push("w_i = 2 w_j", vec![i + 1, j + 1]);
            }
            if w[i] == three * w[j] {
                push("w_i = 3 w_j", vec![i + 1, j + 1]);
            }
        }
    }

    // Triple conditions over pairwise-distinct players. Repeated indices
    // reduce to the pair conditions above, so only genuine triples are
    // enumerated; sums are symmetric in (j, k) and checked once with j < k.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || i == k || j == k {
                    continue;
                }
                if j < k {
                    if w[i] == w[j] + w[k] {
                        push("w_i = w_j + w_k", vec![i + 1, j + 1, k + 1]);
                    }
                    if two * w[i] == w[j] + w[k] {
                        push("2 w_i = w_j + w_k", vec![i + 1, j + 1, k + 1]);
                    }
                }
                if w[i] == two * w[j] + w[k] {
                    push("w_i = 2 w_j + w_k", vec![i + 1, j + 1, k + 1]);
                }
            }
        }
    }

    let ok = violations.is_empty();
    Ok(FrequencyReport {
        frequencies: freqs.iter().map(freq_to_string).collect(),
        violations,
        // Inputs are exact rationals, so every pairwise ratio is rational.
        all_ratios_rational: true,
        ok,
    })
}

/// Greatest common divisor of the frequencies as an exact rational:
/// `gcd(p_i / q_i) = gcd(p_i L / q_i) / L` with `L = lcm(q_i)`. Every
/// frequency is an integer multiple of the result, so `2 pi / gcd` is a
/// common period of all probing signals.
pub fn freq_gcd(freqs: &[Freq]) -> Result<Freq> {
    fn gcd_i128(a: i128, b: i128) -> i128 {
        let (mut a, mut b) = (a.abs(), b.abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    if freqs.is_empty() {
        return Err(Error::InvalidArgument(
            "frequency list must be non-empty".into(),
        ));
    }
    let w: Vec<Rat> = freqs.iter().map(widen).collect();
    let mut l: i128 = 1;
    for f in &w {
        let d = *f.denom();
        l = l / gcd_i128(l, d) * d;
    }
    let mut g: i128 = 0;
    for f in &w {
        let scaled = f.numer() * (l / f.denom());
        g = gcd_i128(g, scaled);
    }
    let out = Ratio::new(g, l);
    let (p, q) = (*out.numer(), *out.denom());
    let p64 = i64::try_from(p).map_err(|_| {
        Error::InvalidArgument("frequency gcd numerator out of range".to_string())
    })?;
    let q64 = i64::try_from(q).map_err(|_| {
        Error::InvalidArgument("frequency gcd denominator out of range".to_string())
    })?;
    Ok(Ratio::new(p64, q64))
}
