//! Versioned, line-oriented store of computed critical values.
//!
//! One record per line, tab separated:
//!
//! ```text
//! v1  <shape_key>  <alpha>  <sided>  <grid_n>  <n_paths>  <seed>  <value>  <std_error>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored, as are records of
//! other versions. Saving rewrites the file through a temporary sibling and
//! a rename, so readers never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{check_alpha, critical_from_sups, sample_paths, CriticalValue, Sided};
use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};

pub const DEFAULT_CACHE_PATH: &str = "./.cs-cache/quantiles.tsv";
/// Environment variable overriding [`DEFAULT_CACHE_PATH`].
pub const CACHE_ENV: &str = "CS_CACHE";

const VERSION: &str = "v1";

/// Everything that determines a Monte Carlo critical value.
#[derive(Clone, Debug)]
pub struct CacheKey {
    pub shape_key: String,
    pub alpha: f64,
    pub sided: Sided,
    pub grid_n: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl PartialEq for CacheKey {
    fn eq(&self, other: &Self) -> bool {
        self.shape_key == other.shape_key
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.sided == other.sided
            && self.grid_n == other.grid_n
            && self.n_paths == other.n_paths
            && self.seed == other.seed
    }
}

impl Eq for CacheKey {}

#[derive(Clone, Debug, Default)]
pub struct QuantileCache {
    path: Option<PathBuf>,
    entries: Vec<CriticalValue>,
    dirty: bool,
}

fn field<'a>(it: &mut impl Iterator<Item = &'a str>, name: &str, line: usize) -> Result<&'a str> {
    it.next().ok_or_else(|| Error::Parse {
        field: name.into(),
        message: format!("line {line}: missing"),
    })
}

fn num<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        field: name.into(),
        message: format!("line {line}: `{s}` is not a valid number"),
    })
}

impl QuantileCache {
    /// An empty cache that is never written to disk.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads the cache at `path`; a missing file gives an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut cache = match fs::read_to_string(&path) {
            Ok(text) => Self::parse(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Self::default(),
            Err(e) => return Err(e.into()),
        };
        cache.path = Some(path);
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn entries(&self) -> &[CriticalValue] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut it = trimmed.split_whitespace();
            if it.next() != Some(VERSION) {
                continue;
            }
            let shape_key = field(&mut it, "shape_key", line)?.to_string();
            let alpha: f64 = num(field(&mut it, "alpha", line)?, "alpha", line)?;
            let sided: Sided = field(&mut it, "sided", line)?.parse()?;
            let grid_n = num(field(&mut it, "grid_n", line)?, "grid_n", line)?;
            let mc_paths = num(field(&mut it, "n_paths", line)?, "n_paths", line)?;
            let seed = num(field(&mut it, "seed", line)?, "seed", line)?;
            let value = num(field(&mut it, "value", line)?, "value", line)?;
            let std_error = num(field(&mut it, "std_error", line)?, "std_error", line)?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    field: "record".into(),
                    message: format!("line {line}: trailing fields"),
                });
            }
            entries.push(CriticalValue {
                alpha,
                sided,
                shape_key,
                value,
                mc_paths,
                grid_n,
                seed,
                std_error,
            });
        }
        Ok(Self {
            path: None,
            entries,
            dirty: false,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for cv in &self.entries {
            out.push_str(&format_record(cv));
            out.push('\n');
        }
        out
    }

    pub fn get(&self, key: &CacheKey) -> Option<&CriticalValue> {
        self.entries.iter().find(|cv| cv.key() == *key)
    }

    pub fn insert(&mut self, cv: CriticalValue) {
        let key = cv.key();
        match self.entries.iter_mut().find(|e| e.key() == key) {
            Some(slot) => *slot = cv,
            None => self.entries.push(cv),
        }
        self.dirty = true;
    }

    /// Returns the cached value for the given configuration or computes it.
    pub fn get_or_compute(
        &mut self,
        shape: &BoundaryShape,
        alpha: f64,
        sided: Sided,
        n_paths: usize,
        grid_n: usize,
        seed: u64,
    ) -> Result<CriticalValue> {
        let (two, one) = self.get_or_compute_many(shape, &[alpha], n_paths, grid_n, seed)?;
        Ok(match sided {
            Sided::TwoSided => two,
            Sided::OneSided => one,
        }
        .remove(0))
    }

    /// Both sides for every `alpha`; if anything is missing, all levels are
    /// recomputed from one shared set of paths.
    pub fn get_or_compute_many(
        &mut self,
        shape: &BoundaryShape,
        alphas: &[f64],
        n_paths: usize,
        grid_n: usize,
        seed: u64,
    ) -> Result<(Vec<CriticalValue>, Vec<CriticalValue>)> {
        for &a in alphas {
            check_alpha(a)?;
        }
        let key = |alpha: f64, sided: Sided| CacheKey {
            shape_key: shape.key(),
            alpha,
            sided,
            grid_n,
            n_paths,
            seed,
        };
        let lookup = |sided: Sided| -> Option<Vec<CriticalValue>> {
            alphas.iter().map(|&a| self.get(&key(a, sided)).cloned()).collect()
        };
        if let (Some(two), Some(one)) = (lookup(Sided::TwoSided), lookup(Sided::OneSided)) {
            return Ok((two, one));
        }
        let sups = sample_paths(shape, grid_n, n_paths, seed)?;
        let two = critical_from_sups(shape, &sups, alphas, Sided::TwoSided, grid_n, seed)?;
        let one = critical_from_sups(shape, &sups, alphas, Sided::OneSided, grid_n, seed)?;
        for cv in two.iter().chain(&one) {
            self.insert(cv.clone());
        }
        Ok((two, one))
    }

    /// Writes the cache back if it has a path and changed since loading.
    pub fn save(&mut self) -> Result<()> {
        let Some(path) = self.path.clone() else {
            return Ok(());
        };
        if !self.dirty {
            return Ok(());
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut tmp = path.clone().into_os_string();
        tmp.push(format!(".tmp{}", std::process::id()));
        let tmp = PathBuf::from(tmp);
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.render().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        self.dirty = false;
        Ok(())
    }
}

fn format_record(cv: &CriticalValue) -> String {
    format!(
        "{VERSION}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        cv.shape_key, cv.alpha, cv.sided, cv.grid_n, cv.mc_paths, cv.seed, cv.value, cv.std_error
    )
}
