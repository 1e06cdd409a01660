//! JSON process descriptions accepted by `simulate`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use su2tomo::generate::{
    plate_process, random_process, GeneratorConfig, GeneratorKind, PlateSpec, Window,
    DEFAULT_XI_MAX, MAX_OMEGA,
};
use su2tomo::{AxisAngle, ProcessMap64};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// Plates in optical order; `window` is the half extent of the imaged square.
    Plates {
        n: usize,
        plates: Vec<PlateSpec>,
        window: Option<f64>,
    },
    /// A random band-limited process drawn from `seed`.
    Fourier {
        n: usize,
        seed: u64,
        xi_max: f64,
        max_omega: usize,
    },
    Identity {
        n: usize,
    },
}

impl ProcessSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading process spec {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in process spec {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SpecFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow::anyhow!(
                "line {}, column {}, field `{path}`: {inner}",
                inner.line(),
                inner.column()
            )
        })?;
        let spec = file.resolve()?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n() < 2 {
            bail!(
                "field `n`: need at least 2 pixels per side, got {}",
                self.n()
            );
        }
        if let Self::Plates { plates, window, .. } = self {
            if plates.is_empty() {
                bail!("field `plates`: at least one plate is required");
            }
            for (k, p) in plates.iter().enumerate() {
                p.validate()
                    .with_context(|| format!("field `plates[{k}]`"))?;
            }
            if let Some(w) = window {
                Window::new(*w).context("field `window`")?;
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::Plates { n, .. } | Self::Fourier { n, .. } | Self::Identity { n } => n,
        }
    }

    pub fn generator_kind(&self) -> Option<GeneratorKind> {
        match self {
            Self::Plates { .. } => Some(GeneratorKind::Plate),
            Self::Fourier { .. } => Some(GeneratorKind::Fourier),
            Self::Identity { .. } => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Self::Fourier { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn process(&self) -> Result<ProcessMap64> {
        Ok(match self {
            Self::Plates { n, plates, window } => {
                let window = match window {
                    Some(h) => Window::new(*h)?,
                    None => Window::default_for(plates),
                };
                plate_process(plates, *n, window)?
            }
            Self::Fourier {
                n,
                seed,
                xi_max,
                max_omega,
            } => random_process(&GeneratorConfig {
                n_pixels: *n,
                xi_max: *xi_max,
                max_omega: *max_omega,
                seed: *seed,
            })?,
            Self::Identity { n } => ProcessMap64::uniform(*n, AxisAngle::identity()),
        })
    }
}

/// On-disk shape of a spec. Parsed untagged so that errors keep their line and field path;
/// [`SpecFile::resolve`] then checks which fields each `kind` needs.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    kind: SpecKind,
    n: usize,
    plates: Option<Vec<PlateFile>>,
    window: Option<f64>,
    seed: Option<u64>,
    xi_max: Option<f64>,
    max_omega: Option<usize>,
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
enum SpecKind {
    Plates,
    Fourier,
    Identity,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlateFile {
    kind: PlateKind,
    delta: f64,
    lambda: Option<f64>,
    q: Option<f64>,
    alpha0: Option<f64>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum PlateKind {
    Uniform,
    GPlateX,
    GPlateY,
    QPlate,
}

fn required<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| anyhow::anyhow!("field `{field}`: missing for this kind"))
}

fn forbid<T>(v: &Option<T>, field: &str, kind: &str) -> Result<()> {
    if v.is_some() {
        bail!("field `{field}`: not allowed for kind \"{kind}\"");
    }
    Ok(())
}

impl PlateFile {
    fn resolve(self, k: usize) -> Result<PlateSpec> {
        let field = |f: &str| format!("plates[{k}].{f}");
        let alpha0 = self.alpha0.unwrap_or(0.0);
        let delta = self.delta;
        Ok(match self.kind {
            PlateKind::Uniform => {
                forbid(&self.lambda, &field("lambda"), "uniform")?;
                forbid(&self.q, &field("q"), "uniform")?;
                PlateSpec::Uniform { delta, alpha0 }
            }
            PlateKind::GPlateX | PlateKind::GPlateY => {
                forbid(&self.q, &field("q"), "g_plate")?;
                let lambda = required(self.lambda, &field("lambda"))?;
                if matches!(self.kind, PlateKind::GPlateX) {
                    PlateSpec::GPlateX {
                        delta,
                        lambda,
                        alpha0,
                    }
                } else {
                    PlateSpec::GPlateY {
                        delta,
                        lambda,
                        alpha0,
                    }
                }
            }
            PlateKind::QPlate => {
                forbid(&self.lambda, &field("lambda"), "q_plate")?;
                PlateSpec::QPlate {
                    delta,
                    q: required(self.q, &field("q"))?,
                    alpha0,
                }
            }
        })
    }
}

impl SpecFile {
    fn resolve(self) -> Result<ProcessSpec> {
        let n = self.n;
        if self.kind != SpecKind::Plates {
            forbid(&self.plates, "plates", "non-plate")?;
            forbid(&self.window, "window", "non-plate")?;
        }
        if self.kind != SpecKind::Fourier {
            forbid(&self.seed, "seed", "non-fourier")?;
            forbid(&self.xi_max, "xi_max", "non-fourier")?;
            forbid(&self.max_omega, "max_omega", "non-fourier")?;
        }
        Ok(match self.kind {
            SpecKind::Plates => ProcessSpec::Plates {
                n,
                plates: required(self.plates, "plates")?
                    .into_iter()
                    .enumerate()
                    .map(|(k, p)| p.resolve(k))
                    .collect::<Result<_>>()?,
                window: self.window,
            },
            SpecKind::Fourier => ProcessSpec::Fourier {
                n,
                seed: required(self.seed, "seed")?,
                xi_max: self.xi_max.unwrap_or(DEFAULT_XI_MAX),
                max_omega: self.max_omega.unwrap_or(MAX_OMEGA),
            },
            SpecKind::Identity => ProcessSpec::Identity { n },
        })
    }
}
