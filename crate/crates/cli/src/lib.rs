//! Support library for the `torusboot` binary: grid specs, seed-stream
//! derivation, output-path resolution, and the sweep engine. Lives in a lib
//! target so the parsers can be fuzzed and the engine tested directly.

pub mod sweep;

use std::path::PathBuf;
use thiserror::Error;

/// Environment variable naming the default directory for relative `--out`
/// paths.
pub const OUT_DIR_ENV: &str = "TORUSBOOT_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] torusboot::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for validation problems, 3 for numeric
    /// diagnostics (e.g. a bracketing failure), 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) => {
                if e.is_validation() {
                    2
                } else {
                    3
                }
            }
            CliError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parse a grid specification. Three forms:
///
/// - `"0.1,1,10"` — explicit comma-separated values
/// - `"lin:LO:HI:COUNT"` — COUNT values linearly spaced over [LO, HI]
/// - `"log:LO:HI:COUNT"` — COUNT values log-spaced over [LO, HI] (LO, HI > 0)
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| CliError::Validation(format!("grid spec {spec:?}: {msg}"));
    let parse_f64 = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("not a number: {s:?}")))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad("values must be finite"))
                }
            })
    };
    if let Some(rest) = spec
        .strip_prefix("lin:")
        .or_else(|| spec.strip_prefix("log:"))
    {
        let log = spec.starts_with("log:");
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected LO:HI:COUNT"));
        }
        let lo = parse_f64(parts[0])?;
        let hi = parse_f64(parts[1])?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| bad(&format!("bad count: {:?}", parts[2])))?;
        if count == 0 {
            return Err(bad("count must be ≥ 1"));
        }
        if log && (lo <= 0.0 || hi <= 0.0) {
            return Err(bad("log spacing needs positive endpoints"));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let vals = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                if log {
                    lo * (hi / lo).powf(t)
                } else {
                    lo + (hi - lo) * t
                }
            })
            .collect();
        return Ok(vals);
    }
    let vals: Vec<f64> = spec.split(',').map(parse_f64).collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(vals)
}

/// SplitMix64 finalizer, used to derive independent stream ids from
/// parameter content so a cell's stream never depends on grid layout.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for a sweep cell replica, derived from the cell's content.
pub fn cell_stream(k: u32, n: u32, lambda: f64, p: f64, replica: u64) -> u64 {
    let mut h = mix64(k as u64 ^ 0x6b);
    h = mix64(h ^ n as u64);
    h = mix64(h ^ lambda.to_bits());
    h = mix64(h ^ p.to_bits());
    mix64(h ^ replica)
}

/// Resolve `--out`: `None` means stdout; relative paths are joined onto
/// [`OUT_DIR_ENV`] when that variable is set.
pub fn resolve_out_path(out: Option<&str>) -> Option<PathBuf> {
    let out = out?;
    let path = PathBuf::from(out);
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return Some(PathBuf::from(dir).join(path));
            }
        }
    }
    Some(path)
}

/// Write `content` to the resolved path, or stdout when there is none.
pub fn emit(out: Option<&str>, content: &str) -> Result<()> {
    match resolve_out_path(out) {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}
