//! File emission: trajectory CSV (17 significant digits, lossless for f64),
//! JSON, and atomic writes (temp file + rename in the target directory).

use std::io::Write as _;
use std::path::Path;

use nashseek::sim::Trajectory;

use crate::config::ConfigError;

/// Formats with 17 significant digits; parsing the text back recovers the
/// exact bit pattern.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a file atomically: the content lands under a temporary name in the
/// same directory and is renamed into place, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Column header for a trajectory with `state_dim` plant states and
/// `n_players` players: `t,x1..,u1..,uhat1..,a1..,n1..,J1..`.
pub fn csv_header(state_dim: usize, n_players: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for i in 1..=state_dim {
        cols.push(format!("x{i}"));
    }
    for prefix in ["u", "uhat", "a", "n", "J"] {
        for i in 1..=n_players {
            cols.push(format!("{prefix}{i}"));
        }
    }
    cols.join(",")
}

/// Renders a recorded trajectory as CSV text (LF line endings).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let state_dim = traj.state_dim();
    let n = traj.n_players();
    let mut out = String::new();
    out.push_str(&csv_header(state_dim, n));
    out.push('\n');
    let mut fields: Vec<String> = Vec::with_capacity(1 + state_dim + 5 * n);
    for s in 0..traj.len() {
        fields.clear();
        fields.push(fmt17(traj.times[s]));
        fields.extend(traj.states[s].iter().copied().map(fmt17));
        fields.extend(traj.actions[s].iter().copied().map(fmt17));
        fields.extend(traj.estimates[s].iter().copied().map(fmt17));
        fields.extend(traj.amplitudes[s].iter().copied().map(fmt17));
        fields.extend(traj.filters[s].iter().copied().map(fmt17));
        fields.extend(traj.payoffs[s].iter().copied().map(fmt17));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV text produced by [`trajectory_csv`] back into a trajectory
/// (sample data only; run metadata lives in the JSON summary).
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, ConfigError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ConfigError("trajectory CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(ConfigError(format!(
            "trajectory CSV must start with a 't' column, got header \"{header}\""
        )));
    }
    let state_dim = cols.iter().filter(|c| c.starts_with('x')).count();
    let n = cols.iter().filter(|c| c.starts_with("uhat")).count();
    let expected = csv_header(state_dim, n);
    if header != expected {
        return Err(ConfigError(format!(
            "unexpected trajectory CSV header: got \"{header}\", want \"{expected}\""
        )));
    }

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        actions: Vec::new(),
        estimates: Vec::new(),
        amplitudes: Vec::new(),
        filters: Vec::new(),
        payoffs: Vec::new(),
        terminated_early: None,
        frequency_override: false,
        warnings: Vec::new(),
    };
    let n_cols = 1 + state_dim + 5 * n;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut vals = Vec::with_capacity(n_cols);
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| {
                ConfigError(format!(
                    "trajectory CSV line {}: bad number \"{field}\": {e}",
                    lineno + 2
                ))
            })?;
            vals.push(v);
        }
        if vals.len() != n_cols {
            return Err(ConfigError(format!(
                "trajectory CSV line {}: expected {n_cols} fields, got {}",
                lineno + 2,
                vals.len()
            )));
        }
        let mut it = vals.into_iter();
        traj.times.push(it.next().unwrap());
        traj.states.push(it.by_ref().take(state_dim).collect());
        traj.actions.push(it.by_ref().take(n).collect());
        traj.estimates.push(it.by_ref().take(n).collect());
        traj.amplitudes.push(it.by_ref().take(n).collect());
        traj.filters.push(it.by_ref().take(n).collect());
        traj.payoffs.push(it.by_ref().take(n).collect());
    }
    if traj.times.is_empty() {
        return Err(ConfigError("trajectory CSV has no data rows".into()));
    }
    Ok(traj)
}
