//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, keys are case-sensitive.
//! The same format stores pipeline settings and calibrated model files, so a
//! model fitted on one machine can be simulated on another. Floats are
//! written with Rust's shortest round-trip formatting: read(write(x)) == x.

use crate::correlation::CorrStructure;
use crate::error::{Error, Result};
use crate::nig::NigParams;
use crate::seasonality::{Harmonic, SeasonalFn};
use crate::simulate::{ModelCase, ModelSpec, PriceForm, Scheme};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Parsed key-value file with typed, named-field accessors.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(KvMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::config(key, "missing"))
    }

    pub fn get_or(&self, key: &str, default: &str) -> String {
        self.entries
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.get(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.entries.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("not an integer: `{v}`"))),
            None => Ok(default),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::config(key, format!("not an integer: `{v}`")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.get(key)?))
    }

    /// Whitespace-separated floats.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entries.get(key) {
            Some(v) => v.split_whitespace().map(|t| parse_f64(key, t)).collect(),
            None => Ok(default.to_vec()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::config(key, format!("not a number: `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("not finite: `{v}`")));
    }
    Ok(x)
}

pub fn write_kv(path: &Path, header: &str, pairs: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn kv(k: &str, v: impl std::fmt::Display) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub fn seasonal_to_kv(prefix: &str, f: &SeasonalFn) -> Vec<(String, String)> {
    let mut pairs = vec![
        kv(&format!("{prefix}.a"), f.a),
        kv(&format!("{prefix}.b"), f.b),
        kv(&format!("{prefix}.days_per_year"), f.days_per_year),
    ];
    let harmonics = f
        .harmonics
        .iter()
        .map(|h| format!("{},{},{}", h.k, h.c, h.d))
        .collect::<Vec<_>>()
        .join("; ");
    pairs.push(kv(&format!("{prefix}.harmonics"), harmonics));
    pairs
}

pub fn seasonal_from_kv(prefix: &str, m: &KvMap) -> Result<SeasonalFn> {
    let key = format!("{prefix}.harmonics");
    let mut harmonics = Vec::new();
    for triple in m.get(&key)?.split(';') {
        let triple = triple.trim();
        if triple.is_empty() {
            continue;
        }
        let parts: Vec<&str> = triple.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::config(&key, format!("expected `k,c,d`, got `{triple}`")));
        }
        harmonics.push(Harmonic {
            k: parts[0]
                .parse()
                .map_err(|_| Error::config(&key, format!("bad harmonic index `{}`", parts[0])))?,
            c: parse_f64(&key, parts[1])?,
            d: parse_f64(&key, parts[2])?,
        });
    }
    let dpy = m.u64(&format!("{prefix}.days_per_year"))?;
    Ok(SeasonalFn {
        a: m.f64(&format!("{prefix}.a"))?,
        b: m.f64(&format!("{prefix}.b"))?,
        harmonics,
        days_per_year: u32::try_from(dpy)
            .map_err(|_| Error::config(format!("{prefix}.days_per_year"), "out of range"))?,
    })
}

pub fn corr_to_kv(prefix: &str, c: &CorrStructure) -> Vec<(String, String)> {
    vec![
        kv(&format!("{prefix}.lambda_g"), c.lambda_g),
        kv(&format!("{prefix}.lambda_e"), c.lambda_e),
        kv(&format!("{prefix}.lambda_z"), c.lambda_z),
        kv(&format!("{prefix}.phi_g"), c.phi_g),
        kv(&format!("{prefix}.phi_e"), c.phi_e),
        kv(&format!("{prefix}.phi_ge"), c.phi_ge),
        kv(&format!("{prefix}.sigma_z"), c.sigma_z),
        kv(&format!("{prefix}.var_yg"), c.var_yg),
        kv(&format!("{prefix}.var_ye"), c.var_ye),
    ]
}

pub fn corr_from_kv(prefix: &str, m: &KvMap) -> Result<CorrStructure> {
    Ok(CorrStructure {
        lambda_g: m.f64(&format!("{prefix}.lambda_g"))?,
        lambda_e: m.f64(&format!("{prefix}.lambda_e"))?,
        lambda_z: m.f64(&format!("{prefix}.lambda_z"))?,
        phi_g: m.f64(&format!("{prefix}.phi_g"))?,
        phi_e: m.f64(&format!("{prefix}.phi_e"))?,
        phi_ge: m.f64(&format!("{prefix}.phi_ge"))?,
        sigma_z: m.f64_or(&format!("{prefix}.sigma_z"), 0.0)?,
        var_yg: m.f64_or(&format!("{prefix}.var_yg"), 0.0)?,
        var_ye: m.f64_or(&format!("{prefix}.var_ye"), 0.0)?,
    })
}

pub fn theta_to_kv(prefix: &str, p: &NigParams) -> Vec<(String, String)> {
    vec![
        kv(&format!("{prefix}.alpha"), p.alpha),
        kv(&format!("{prefix}.beta"), p.beta),
        kv(&format!("{prefix}.delta"), p.delta),
        kv(&format!("{prefix}.loc"), p.loc),
    ]
}

pub fn theta_from_kv(prefix: &str, m: &KvMap) -> Result<NigParams> {
    NigParams::new(
        m.f64(&format!("{prefix}.alpha"))?,
        m.f64(&format!("{prefix}.beta"))?,
        m.f64(&format!("{prefix}.delta"))?,
        m.f64(&format!("{prefix}.loc"))?,
    )
}

pub fn model_to_kv(spec: &ModelSpec) -> Vec<(String, String)> {
    let mut pairs = vec![kv("case", spec.case), kv("form", spec.form)];
    pairs.extend(seasonal_to_kv("seasonal_g", &spec.seasonal_g));
    pairs.extend(seasonal_to_kv("seasonal_e", &spec.seasonal_e));
    pairs.extend(corr_to_kv("corr", &spec.corr));
    pairs.extend(theta_to_kv("theta_g", &spec.theta_g));
    pairs.extend(theta_to_kv("theta_e", &spec.theta_e));
    pairs
}

pub fn write_model_spec(path: &Path, spec: &ModelSpec, header: &str) -> Result<()> {
    write_kv(path, header, &model_to_kv(spec))
}

pub fn read_model_spec(path: &Path) -> Result<ModelSpec> {
    let m = KvMap::load(path)?;
    let spec = ModelSpec {
        seasonal_g: seasonal_from_kv("seasonal_g", &m)?,
        seasonal_e: seasonal_from_kv("seasonal_e", &m)?,
        corr: corr_from_kv("corr", &m)?,
        theta_g: theta_from_kv("theta_g", &m)?,
        theta_e: theta_from_kv("theta_e", &m)?,
        case: m.get_or("case", "full").parse()?,
        form: m.get_or("form", "geometric").parse()?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Settings of the full calibrate → simulate → risk pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub gas_csv: PathBuf,
    pub elec_csv: PathBuf,
    pub days_per_year: u32,
    /// Harmonics offered to the seasonal fit before pruning.
    pub harmonics: usize,
    pub significance: f64,
    pub max_lag: usize,
    pub mle_order: u8,
    pub quad_nodes: usize,
    pub form: PriceForm,
    pub cases: Vec<ModelCase>,
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub heat_rate: f64,
    pub gen_cost: f64,
    pub rate: f64,
    pub horizons: Vec<f64>,
    pub alpha: f64,
    pub n_sims: usize,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let m = KvMap::load(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        // input paths are resolved relative to the config file
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let cases = m
            .get_or("cases", "full independent gaussian")
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<ModelCase>>>()?;
        let cfg = PipelineConfig {
            gas_csv: resolve(m.path("gas_csv")?),
            elec_csv: resolve(m.path("elec_csv")?),
            days_per_year: u32::try_from(m.u64("days_per_year").unwrap_or(252))
                .map_err(|_| Error::config("days_per_year", "out of range"))?,
            harmonics: m.usize_or("harmonics", 4)?,
            significance: m.f64_or("significance", 0.05)?,
            max_lag: m.usize_or("max_lag", 30)?,
            mle_order: match m.get_or("mle_order", "0").as_str() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::config("mle_order", format!("must be 0 or 1, got `{other}`"))),
            },
            quad_nodes: m.usize_or("quad_nodes", 32)?,
            form: m.get_or("form", "geometric").parse()?,
            cases,
            n_paths: m.usize_or("n_paths", 200)?,
            n_steps: m.usize_or("n_steps", 252)?,
            dt: m.f64_or("dt", 1.0 / 252.0)?,
            scheme: m.get_or("scheme", "euler").parse()?,
            seed: m.u64("seed")?,
            heat_rate: m.f64_or("heat_rate", 3.0)?,
            gen_cost: m.f64_or("gen_cost", 5.0)?,
            rate: m.f64_or("rate", 0.05)?,
            horizons: m.f64_list_or("horizons", &[0.5, 1.0, 3.0])?,
            alpha: m.f64_or("alpha", 0.95)?,
            n_sims: m.usize_or("n_sims", 10_000)?,
            output_dir: resolve(m.path("output_dir")?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.days_per_year == 0 {
            return Err(Error::config("days_per_year", "must be positive"));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::config("significance", "must be in (0, 1)"));
        }
        if self.max_lag == 0 {
            return Err(Error::config("max_lag", "must be positive"));
        }
        if self.quad_nodes < 2 {
            return Err(Error::config("quad_nodes", "need at least 2 nodes"));
        }
        if self.cases.is_empty() {
            return Err(Error::config("cases", "need at least one model case"));
        }
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::config("n_paths/n_steps", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be finite and > 0"));
        }
        if !(self.heat_rate > 0.0) {
            return Err(Error::config("heat_rate", "must be > 0"));
        }
        if !(self.rate >= 0.0) {
            return Err(Error::config("rate", "must be >= 0"));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::config("horizons", "must all be > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", "must be in (0, 1)"));
        }
        if self.n_sims == 0 {
            return Err(Error::config("n_sims", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::ModelCase;
    use tempfile::tempdir;

    fn sample_model() -> ModelSpec {
        let mut sg = SeasonalFn::flat(252);
        sg.a = 3.0517578125e-1; // dyadic: exact round trip is trivially visible
        sg.b = 1.37e-4;
        sg.harmonics = vec![
            Harmonic { k: 1, c: 0.118, d: -0.049 },
            Harmonic { k: 2, c: 0.0, d: 0.031 },
        ];
        let corr = CorrStructure {
            lambda_g: 7.2,
            lambda_e: 69.4,
            lambda_z: 2.6,
            phi_g: 0.43,
            phi_e: 0.49,
            phi_ge: 0.53,
            sigma_z: 0.625,
            var_yg: 0.14,
            var_ye: 0.13,
        };
        ModelSpec {
            seasonal_g: sg,
            seasonal_e: SeasonalFn::flat(252),
            corr,
            theta_g: NigParams::new(1.93, 0.90, 2.25e-3, -8.8e-3).unwrap(),
            theta_e: NigParams::new(3.49, 1.24, 0.08, 0.11).unwrap(),
            case: ModelCase::Full,
            form: PriceForm::Geometric,
        }
    }

    #[test]
    fn kv_parsing_handles_comments_and_errors() {
        let origin = Path::new("t.conf");
        let m = KvMap::parse("# header\n a = 1.5 # inline\n\nb.c = x y\n", origin).unwrap();
        assert_eq!(m.f64("a").unwrap(), 1.5);
        assert_eq!(m.get("b.c").unwrap(), "x y");
        assert!(m.get("missing").unwrap_err().to_string().contains("missing"));

        let err = KvMap::parse("a = 1\nbroken line\n", origin).unwrap_err().to_string();
        assert!(err.contains("t.conf:2:"), "{err}");
        let err = KvMap::parse("a = 1\na = 2\n", origin).unwrap_err().to_string();
        assert!(err.contains("duplicate key `a`"), "{err}");
        let err = KvMap::parse("a = inf\n", origin)
            .unwrap()
            .f64("a")
            .unwrap_err()
            .to_string();
        assert!(err.contains("not finite"), "{err}");
    }

    #[test]
    fn model_spec_round_trips_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.conf");
        let spec = sample_model();
        write_model_spec(&path, &spec, "fitted model").unwrap();
        let back = read_model_spec(&path).unwrap();
        assert_eq!(back.seasonal_g, spec.seasonal_g);
        assert_eq!(back.seasonal_e, spec.seasonal_e);
        assert_eq!(back.case, spec.case);
        assert_eq!(back.form, spec.form);
        // float fields restore bit-for-bit thanks to shortest-round-trip output
        assert_eq!(back.corr.sigma_z.to_bits(), spec.corr.sigma_z.to_bits());
        assert_eq!(back.theta_g.alpha.to_bits(), spec.theta_g.alpha.to_bits());
        assert_eq!(back.theta_e.loc.to_bits(), spec.theta_e.loc.to_bits());
        // and a second write is byte-identical
        let text1 = std::fs::read(&path).unwrap();
        write_model_spec(&path, &back, "fitted model").unwrap();
        assert_eq!(text1, std::fs::read(&path).unwrap());
    }

    #[test]
    fn pipeline_config_defaults_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("pipe.conf");
        std::fs::write(
            &path,
            "gas_csv = gas.csv\nelec_csv = elec.csv\nseed = 7\noutput_dir = out\n",
        )
        .unwrap();
        let cfg = PipelineConfig::from_file(&path).unwrap();
        assert_eq!(cfg.harmonics, 4);
        assert_eq!(cfg.n_sims, 10_000);
        assert_eq!(cfg.cases.len(), 3);
        assert_eq!(cfg.scheme, Scheme::Euler);
        assert_eq!(cfg.gas_csv, dir.path().join("gas.csv"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));

        std::fs::write(
            &path,
            "gas_csv = g\nelec_csv = e\nseed = 7\noutput_dir = o\nalpha = 1.5\n",
        )
        .unwrap();
        let err = PipelineConfig::from_file(&path).unwrap_err().to_string();
        assert!(err.contains("`alpha`"), "{err}");

        std::fs::write(&path, "gas_csv = g\nelec_csv = e\noutput_dir = o\n").unwrap();
        let err = PipelineConfig::from_file(&path).unwrap_err().to_string();
        assert!(err.contains("`seed`"), "{err}");
    }
}
