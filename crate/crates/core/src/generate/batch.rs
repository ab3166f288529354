//! Parameter grids for mass generation.
//!
//! A grid config is a TOML document. Every generator parameter takes either
//! a single value or an array of values; the Cartesian product of all value
//! lists is expanded and each combination is generated
//! `seeds_per_combination` times with derived seeds.
//!
//! ```toml
//! base_seed = 7
//! seeds_per_combination = 3
//! map_width = [20, 40]
//! map_height = 20
//! density = [0.05, 0.2]
//! start_distribution = ["uniform", "weights:colony.pgm"]
//! obstacle_count = [0, 6]
//! ```
//!
//! Distribution values are `uniform` or `weights:<path>`; relative paths
//! resolve against the config file's directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::{generate_instance, Distribution, GenerateError, GeneratedInstance, GeneratorParams, WeightMap};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn one<T>(v: T) -> OneOrMany<T> {
    OneOrMany::One(v)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawGrid {
    base_seed: u64,
    seeds_per_combination: u32,
    map_width: OneOrMany<u32>,
    map_height: OneOrMany<u32>,
    density: OneOrMany<f64>,
    start_distribution: OneOrMany<String>,
    target_distribution: OneOrMany<String>,
    obstacle_count: OneOrMany<u32>,
    obstacle_size_mean: OneOrMany<f64>,
    obstacle_size_stddev: OneOrMany<f64>,
    cluster_count: OneOrMany<u32>,
    cluster_size_mean: OneOrMany<f64>,
    cluster_size_stddev: OneOrMany<f64>,
}

impl Default for RawGrid {
    fn default() -> Self {
        let d = GeneratorParams::default();
        RawGrid {
            base_seed: 0,
            seeds_per_combination: 1,
            map_width: one(d.map_width),
            map_height: one(d.map_height),
            density: one(d.density),
            start_distribution: one("uniform".into()),
            target_distribution: one("uniform".into()),
            obstacle_count: one(d.obstacle_count),
            obstacle_size_mean: one(d.obstacle_size_mean),
            obstacle_size_stddev: one(d.obstacle_size_stddev),
            cluster_count: one(d.cluster_count),
            cluster_size_mean: one(d.cluster_size_mean),
            cluster_size_stddev: one(d.cluster_size_stddev),
        }
    }
}

/// Parsed parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub base_seed: u64,
    pub seeds_per_combination: u32,
    pub map_width: Vec<u32>,
    pub map_height: Vec<u32>,
    pub density: Vec<f64>,
    pub start_distribution: Vec<Distribution>,
    pub target_distribution: Vec<Distribution>,
    pub obstacle_count: Vec<u32>,
    pub obstacle_size_mean: Vec<f64>,
    pub obstacle_size_stddev: Vec<f64>,
    pub cluster_count: Vec<u32>,
    pub cluster_size_mean: Vec<f64>,
    pub cluster_size_stddev: Vec<f64>,
}

fn parse_distribution(
    s: &str,
    base_dir: &Path,
    cache: &mut HashMap<PathBuf, WeightMap>,
) -> Result<Distribution, GenerateError> {
    if s == "uniform" {
        return Ok(Distribution::Uniform);
    }
    let Some(rel) = s.strip_prefix("weights:") else {
        return Err(GenerateError::Config(format!("unknown distribution `{s}`")));
    };
    let path = base_dir.join(rel);
    if let Some(m) = cache.get(&path) {
        return Ok(Distribution::Weighted(m.clone()));
    }
    let mut map = WeightMap::load(&path)?;
    map.source = Some(rel.to_string());
    cache.insert(path, map.clone());
    Ok(Distribution::Weighted(map))
}

impl GridConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, GenerateError> {
        let raw: RawGrid = toml::from_str(text).map_err(|e| GenerateError::Config(e.to_string()))?;
        if raw.seeds_per_combination == 0 {
            return Err(GenerateError::Config("seeds_per_combination must be at least 1".into()));
        }
        let mut cache = HashMap::new();
        let mut dists = |v: &OneOrMany<String>| -> Result<Vec<Distribution>, GenerateError> {
            v.values()
                .iter()
                .map(|s| parse_distribution(s, base_dir, &mut cache))
                .collect()
        };
        let config = GridConfig {
            base_seed: raw.base_seed,
            seeds_per_combination: raw.seeds_per_combination,
            map_width: raw.map_width.values(),
            map_height: raw.map_height.values(),
            density: raw.density.values(),
            start_distribution: dists(&raw.start_distribution)?,
            target_distribution: dists(&raw.target_distribution)?,
            obstacle_count: raw.obstacle_count.values(),
            obstacle_size_mean: raw.obstacle_size_mean.values(),
            obstacle_size_stddev: raw.obstacle_size_stddev.values(),
            cluster_count: raw.cluster_count.values(),
            cluster_size_mean: raw.cluster_size_mean.values(),
            cluster_size_stddev: raw.cluster_size_stddev.values(),
        };
        if config.combination_count() == 0 {
            return Err(GenerateError::Config("every parameter needs at least one value".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, GenerateError> {
        let text = std::fs::read_to_string(path)?;
        GridConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn dims(&self) -> [usize; 11] {
        [
            self.map_width.len(),
            self.map_height.len(),
            self.density.len(),
            self.start_distribution.len(),
            self.target_distribution.len(),
            self.obstacle_count.len(),
            self.obstacle_size_mean.len(),
            self.obstacle_size_stddev.len(),
            self.cluster_count.len(),
            self.cluster_size_mean.len(),
            self.cluster_size_stddev.len(),
        ]
    }

    pub fn combination_count(&self) -> usize {
        self.dims().iter().product()
    }

    /// All parameter sets: combinations in row-major order (the last key
    /// varies fastest), each repeated with `seeds_per_combination` seeds.
    pub fn expand(&self) -> Result<Vec<GeneratorParams>, GenerateError> {
        let dims = self.dims();
        let r = self.seeds_per_combination as usize;
        let mut out = Vec::with_capacity(self.combination_count() * r);
        for c in 0..self.combination_count() {
            let mut idx = [0usize; 11];
            let mut rem = c;
            for d in (0..11).rev() {
                idx[d] = rem % dims[d];
                rem /= dims[d];
            }
            for j in 0..r {
                let params = GeneratorParams {
                    map_width: self.map_width[idx[0]],
                    map_height: self.map_height[idx[1]],
                    density: self.density[idx[2]],
                    start_distribution: self.start_distribution[idx[3]].clone(),
                    target_distribution: self.target_distribution[idx[4]].clone(),
                    obstacle_count: self.obstacle_count[idx[5]],
                    obstacle_size_mean: self.obstacle_size_mean[idx[6]],
                    obstacle_size_stddev: self.obstacle_size_stddev[idx[7]],
                    cluster_count: self.cluster_count[idx[8]],
                    cluster_size_mean: self.cluster_size_mean[idx[9]],
                    cluster_size_stddev: self.cluster_size_stddev[idx[10]],
                    seed: seed::derive(self.base_seed, (c * r + j) as u64),
                };
                params.validate()?;
                out.push(params);
            }
        }
        Ok(out)
    }
}

/// Generates every parameter set in parallel; results keep input order.
pub fn generate_batch(params: &[GeneratorParams]) -> Vec<Result<GeneratedInstance, GenerateError>> {
    params.par_iter().map(generate_instance).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_count() {
        let g = GridConfig::from_toml(
            "seeds_per_combination = 3\nmap_width = [10, 12]\ndensity = [0.1, 0.2]\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(g.combination_count(), 4);
        let p = g.expand().unwrap();
        assert_eq!(p.len(), 12);
        let mut seeds: Vec<u64> = p.iter().map(|x| x.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 12);
        // Last key varies fastest.
        assert_eq!((p[0].map_width, p[0].density), (10, 0.1));
        assert_eq!((p[3].map_width, p[3].density), (10, 0.2));
        assert_eq!((p[6].map_width, p[6].density), (12, 0.1));
    }

    #[test]
    fn single_combination() {
        let g = GridConfig::from_toml("", Path::new(".")).unwrap();
        assert_eq!(g.expand().unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "unknown_key = 3",
            "density = []",
            "seeds_per_combination = 0",
            "start_distribution = \"gaussian\"",
            "density = \"high\"",
            "density = 1.5",
            "map_width = 0",
        ] {
            let r = GridConfig::from_toml(text, Path::new(".")).and_then(|g| g.expand());
            assert!(r.is_err(), "{text}");
        }
    }
}
