//! Optional TOML configuration. Command-line flags override every key.

use std::path::Path;

use kuznetsov_core::kuznetsov::GridConfig;
use kuznetsov_core::mb::MbConfig;
use kuznetsov_core::series::{Precision, SeriesPolicy};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    /// Report measured wall times instead of zero.
    pub timing: Option<bool>,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub mb: MbSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    pub rel_tol: Option<f64>,
    pub max_terms: Option<usize>,
    pub series_domain_bound: Option<f64>,
    pub precision: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbSection {
    pub eta: Option<f64>,
    pub tail_slope: Option<f64>,
    pub decay_nats: Option<f64>,
    pub height_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub panel_len: Option<f64>,
    pub order: Option<usize>,
    pub check_order: Option<usize>,
    pub mask: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn series_policy(&self) -> Result<SeriesPolicy, String> {
        let mut p = SeriesPolicy::default();
        let s = &self.series;
        if let Some(v) = s.rel_tol {
            p.rel_tol = v;
        }
        if let Some(v) = s.max_terms {
            p.max_terms = v;
        }
        if let Some(v) = s.series_domain_bound {
            p.series_domain_bound = v;
        }
        if let Some(v) = &s.precision {
            p.precision = parse_precision(v)?;
        }
        Ok(p)
    }

    pub fn mb_config(&self) -> MbConfig {
        let mut c = MbConfig::default();
        let s = &self.mb;
        if let Some(v) = s.eta {
            c.eta = v;
        }
        if let Some(v) = s.tail_slope {
            c.tail_slope = v;
        }
        if let Some(v) = s.decay_nats {
            c.decay_nats = v;
        }
        if let Some(v) = s.height_scale {
            c.height_scale = v;
        }
        c
    }

    pub fn grid_config(&self) -> GridConfig {
        let mut g = GridConfig::default();
        let s = &self.grid;
        if let Some(v) = s.panel_len {
            g.panel_len = v;
        }
        if let Some(v) = s.order {
            g.order = v;
        }
        if let Some(v) = s.check_order {
            g.check_order = v;
        }
        if let Some(v) = s.mask {
            g.mask = v;
        }
        g
    }
}

pub fn parse_precision(s: &str) -> Result<Precision, String> {
    match s {
        "auto" => Ok(Precision::Auto),
        "double" => Ok(Precision::Double),
        "dd" | "double-double" => Ok(Precision::DoubleDouble),
        other => Err(format!("precision must be auto, double or dd, not {other:?}")),
    }
}
