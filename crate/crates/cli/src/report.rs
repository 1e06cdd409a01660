//! Versioned JSON run reports.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use su2tomo::forward::{measurement_stack, polarimetric_infidelity};
use su2tomo::su2::{map_fidelity, pixel_fidelity};
use su2tomo::{MeasurementStack64, ProcessMap64};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport<C: Serialize> {
    pub report_version: u32,
    pub command: &'static str,
    pub tool_version: &'static str,
    /// Every flag the command ran with, defaults included.
    pub config: C,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

impl<C: Serialize> RunReport<C> {
    pub fn new(command: &'static str, config: C) -> Self {
        Self {
            report_version: REPORT_VERSION,
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            maps: Vec::new(),
            summary: None,
        }
    }

    pub fn with_maps(mut self, maps: Vec<MapMetrics>) -> Self {
        self.summary = Summary::of(&maps);
        self.maps = maps;
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("writing report {}", path.display()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MapMetrics {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel_fidelity: Option<f64>,
    /// Between the input stack and the stack re-simulated from the estimate.
    pub polarimetric_infidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl MapMetrics {
    pub fn score(
        index: usize,
        stack: &MeasurementStack64,
        estimate: &ProcessMap64,
        truth: Option<&ProcessMap64>,
    ) -> Result<Self> {
        let resim = measurement_stack(estimate);
        let (map_f, pixel_f) = match truth {
            Some(t) => (
                Some(map_fidelity(t, estimate)?),
                Some(pixel_fidelity(t, estimate)?),
            ),
            None => (None, None),
        };
        Ok(Self {
            index,
            map_fidelity: map_f,
            pixel_fidelity: pixel_f,
            polarimetric_infidelity: polarimetric_infidelity(stack, &resim)?,
            wall_time_ms: None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub maps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_map_infidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_pixel_infidelity: Option<f64>,
    pub mean_polarimetric_infidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_wall_time_ms: Option<f64>,
}

impl Summary {
    fn of(maps: &[MapMetrics]) -> Option<Self> {
        if maps.is_empty() {
            return None;
        }
        let count = maps.len() as f64;
        let mean_of = |f: fn(&MapMetrics) -> Option<f64>| -> Option<f64> {
            maps.iter().map(f).sum::<Option<f64>>().map(|s| s / count)
        };
        Some(Self {
            maps: maps.len(),
            mean_map_infidelity: mean_of(|m| m.map_fidelity.map(|f| 1.0 - f)),
            mean_pixel_infidelity: mean_of(|m| m.pixel_fidelity.map(|f| 1.0 - f)),
            mean_polarimetric_infidelity: mean_of(|m| Some(m.polarimetric_infidelity))
                .unwrap_or_default(),
            total_wall_time_ms: maps.iter().map(|m| m.wall_time_ms).sum(),
        })
    }
}
