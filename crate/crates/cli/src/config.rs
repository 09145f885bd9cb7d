use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// key=value config file. Keys use the long flag names without the leading
/// dashes; command line flags override config entries.
#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected key=value, got '{line}'", path.display(), i + 1);
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_skips_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nkernel = gumbel\n\nbandwidth=fixed=2").unwrap();
        let cfg = Config::from_file(f.path()).unwrap();
        assert_eq!(cfg.get("kernel").as_deref(), Some("gumbel"));
        assert_eq!(cfg.get("bandwidth").as_deref(), Some("fixed=2"));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn rejects_bare_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "not a pair").unwrap();
        assert!(Config::from_file(f.path()).is_err());
    }
}
