use std::path::Path;

use pinchopt::{SystemParams, UserLayout};

use crate::error::{CliError, Result};

/// Parses one `x y` pair per line; blank lines and `#` comments are skipped.
pub fn parse_instance(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut users = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || CliError::Parse(format!("line {}: expected `x y`, got `{}`", n + 1, raw.trim()));
        let [x, y] = fields[..] else { return Err(bad()) };
        let (x, y) = (x.parse::<f64>().map_err(|_| bad())?, y.parse::<f64>().map_err(|_| bad())?);
        if !(x.is_finite() && y.is_finite()) {
            return Err(bad());
        }
        users.push((x, y));
    }
    if users.is_empty() {
        return Err(CliError::Parse("instance has no users".into()));
    }
    Ok(users)
}

pub fn load_layout(path: &Path, params: &SystemParams) -> Result<UserLayout> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let coords = parse_instance(&text)?;
    UserLayout::from_coords(&coords, params).map_err(|e| CliError::Parse(e.to_string()))
}
