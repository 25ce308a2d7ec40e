//! Run settings: built-in defaults, then a `key=value` file, then command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use fanforge::analyze::Scheme;
use fanforge::rational::parse_q;
use fanforge::svg::Style;
use fanforge::Q;

#[derive(Debug, Clone)]
pub struct Settings {
    pub depth: usize,
    pub branch: usize,
    pub eps: Q,
    pub cantor_depth: usize,
    pub scheme: String,
    pub m: usize,
    pub samples: usize,
    pub style: String,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            depth: 3,
            branch: 6,
            eps: Q::new(1.into(), 27.into()),
            cantor_depth: 3,
            scheme: "odd".into(),
            m: 1,
            samples: 200,
            style: "comb".into(),
        }
    }
}

/// Flag values; `None` keeps the value from the file or the default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub depth: Option<usize>,
    pub branch: Option<usize>,
    pub eps: Option<String>,
    pub cantor_depth: Option<usize>,
    pub scheme: Option<String>,
    pub m: Option<usize>,
    pub samples: Option<usize>,
    pub style: Option<String>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| v.parse::<usize>().with_context(|| format!("`{key}` expects a non-negative integer, got `{v}`"));
        match key {
            "depth" => self.depth = int(value)?,
            "branch" => self.branch = int(value)?,
            "eps" => self.eps = parse_q(value).with_context(|| format!("`eps` expects p/q, got `{value}`"))?,
            "cantor-depth" | "cantor_depth" => self.cantor_depth = int(value)?,
            "scheme" => self.scheme = value.to_string(),
            "m" => self.m = int(value)?,
            "samples" => self.samples = int(value)?,
            "style" => self.style = value.to_string(),
            _ => bail!("unknown setting `{key}`"),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').with_context(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
            self.set(k.trim(), v.trim()).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        let pairs: [(&str, Option<String>); 8] = [
            ("depth", o.depth.map(|v| v.to_string())),
            ("branch", o.branch.map(|v| v.to_string())),
            ("eps", o.eps.clone()),
            ("cantor-depth", o.cantor_depth.map(|v| v.to_string())),
            ("scheme", o.scheme.clone()),
            ("m", o.m.map(|v| v.to_string())),
            ("samples", o.samples.map(|v| v.to_string())),
            ("style", o.style.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                self.set(k, &v)?;
            }
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        if self.depth == 0 || self.branch == 0 {
            bail!("depth and branch must be at least 1");
        }
        if self.eps <= Q::from_integer(0.into()) {
            bail!("eps must be positive");
        }
        self.scheme()?;
        self.style()?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        match self.scheme.as_str() {
            "odd" => Ok(Scheme::Odd(self.m)),
            "even" => Ok(Scheme::Even(self.m)),
            other => bail!("scheme must be odd or even, got `{other}`"),
        }
    }

    pub fn style(&self) -> Result<Style> {
        Style::parse(&self.style).with_context(|| format!("style must be comb, fan or spatial, got `{}`", self.style))
    }
}
