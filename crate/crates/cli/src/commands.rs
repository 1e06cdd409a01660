use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use su2tomo::dataset::{
    read_dataset, read_target_file, DatasetMeta, DatasetReader, DatasetWriter, RawSample,
};
use su2tomo::forward::{add_noise, measurement_stack};
use su2tomo::generate::SampleRecipe;
use su2tomo::reconstruct::{reconstruct_map_ga, reconstruct_map_mle, GaConfig, MleConfig};
use su2tomo::su2::map_fidelity;
use su2tomo::{MeasurementStack64, ProcessMap64};

use crate::report::{MapMetrics, RunReport};
use crate::spec::ProcessSpec;
use crate::{BenchArgs, EvaluateArgs, GenerateArgs, Method, ReconstructArgs, SimulateArgs};

/// Flag echo written next to generated and simulated datasets.
const RUN_FILE: &str = "run.json";
const REPORT_FILE: &str = "report.json";
/// Samples generated in parallel before being appended in index order.
const GENERATE_BATCH: u64 = 256;

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn finish_verified(writer: DatasetWriter, dir: &Path) -> Result<DatasetReader> {
    let expected = writer.len();
    writer.finish()?;
    let reader = read_dataset(dir).context("re-reading the written dataset")?;
    ensure!(
        reader.len() == expected,
        "dataset at {} has {} samples, wrote {expected}",
        dir.display(),
        reader.len()
    );
    Ok(reader)
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let recipe = SampleRecipe {
        plate_fraction: a.plate_fraction,
        ..SampleRecipe::new(a.kind.into(), a.n as usize, a.sigma, a.seed)
    };
    recipe.validate()?;
    let meta = DatasetMeta {
        noise_sigma: Some(a.sigma),
        root_seed: Some(a.seed),
        generator_kind: Some(a.kind.into()),
    };
    let mut writer = DatasetWriter::create(&a.out, recipe.n_pixels, meta)?;
    let mut start = 0;
    while start < a.count {
        let end = (start + GENERATE_BATCH).min(a.count);
        let batch = (start..end)
            .into_par_iter()
            .map(|i| {
                let (stack, process) = recipe.sample::<f64>(i)?;
                RawSample::encode(&stack, &process)
            })
            .collect::<su2tomo::Result<Vec<_>>>()?;
        for s in &batch {
            writer.push_raw(s)?;
        }
        start = end;
    }
    finish_verified(writer, &a.out)?;
    RunReport::new("generate", a).write(&a.out.join(RUN_FILE))?;
    eprintln!(
        "wrote {} samples (N={}) to {}",
        a.count,
        a.n,
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    flags: &'a SimulateArgs,
    spec: &'a ProcessSpec,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    ensure!(
        a.sigma >= 0.0 && a.sigma.is_finite(),
        "--sigma must be finite and >= 0"
    );
    // everything that can fail on bad input happens before the first file is created
    let spec = ProcessSpec::load(&a.spec)?;
    let truth = spec.process()?;
    let clean = measurement_stack(&truth);
    let stack = if a.sigma > 0.0 {
        add_noise(&clean, a.sigma, a.noise_seed)?
    } else {
        clean
    };
    let meta = DatasetMeta {
        noise_sigma: Some(a.sigma),
        root_seed: spec.seed(),
        generator_kind: spec.generator_kind(),
    };
    let mut writer = DatasetWriter::create(&a.out, spec.n(), meta)?;
    writer.push(&stack, &truth)?;
    finish_verified(writer, &a.out)?;
    if a.png {
        crate::png::write_stack(&stack, &a.out.join("png"))?;
    }
    RunReport::new(
        "simulate",
        SimulateEcho {
            flags: a,
            spec: &spec,
        },
    )
    .write(&a.out.join(RUN_FILE))?;
    eprintln!("wrote N={} stack to {}", spec.n(), a.out.display());
    Ok(())
}

struct Reconstructor {
    method: Method,
    mle: MleConfig,
    ga: GaConfig,
    stitched: bool,
}

impl Reconstructor {
    fn new(method: Method, mle: MleConfig, ga: GaConfig, stitched: bool) -> Result<Self> {
        match method {
            Method::Mle => mle.validate()?,
            Method::Ga => ga.validate()?,
        }
        Ok(Self {
            method,
            mle,
            ga,
            stitched,
        })
    }

    fn run(&self, stack: &MeasurementStack64) -> Result<ProcessMap64> {
        Ok(match self.method {
            Method::Mle => reconstruct_map_mle(stack, &self.mle)?,
            Method::Ga => reconstruct_map_ga(stack, &self.ga, self.stitched)?,
        })
    }
}

fn check_truth(input: &DatasetReader, truth: &DatasetReader) -> Result<()> {
    ensure!(
        truth.n_pixels() == input.n_pixels() && truth.len() == input.len(),
        "truth dataset has {} samples of N={}, stack dataset has {} of N={}",
        truth.len(),
        truth.n_pixels(),
        input.len(),
        input.n_pixels()
    );
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let solver = Reconstructor::new(a.method, a.mle.config(), a.ga.config(), a.ga.stitched)?;
    let input = read_dataset(&a.stack)
        .with_context(|| format!("reading stacks from {}", a.stack.display()))?;
    let indices: Vec<usize> = match a.index {
        Some(i) if i >= input.len() => {
            bail!("--index {i} out of range for {} samples", input.len())
        }
        Some(i) => vec![i],
        None => (0..input.len()).collect(),
    };
    let truth = match &a.truth {
        Some(p) => {
            let t =
                read_dataset(p).with_context(|| format!("reading truth from {}", p.display()))?;
            check_truth(&input, &t)?;
            Some(t)
        }
        None => None,
    };
    let meta = DatasetMeta {
        noise_sigma: input.manifest().noise_sigma,
        ..DatasetMeta::default()
    };
    let mut writer = DatasetWriter::create(&a.out, input.n_pixels(), meta)?;
    let mut maps = Vec::with_capacity(indices.len());
    for &i in &indices {
        let stack = input.stack::<f64>(i)?;
        let start = Instant::now();
        let estimate = solver.run(&stack).with_context(|| format!("sample {i}"))?;
        let ms = elapsed_ms(start);
        let truth_map = truth.as_ref().map(|t| t.process::<f64>(i)).transpose()?;
        let mut metrics = MapMetrics::score(i, &stack, &estimate, truth_map.as_ref())?;
        metrics.wall_time_ms = Some(ms);
        maps.push(metrics);
        writer.push(&stack, &estimate)?;
    }
    finish_verified(writer, &a.out)?;
    let report = RunReport::new("reconstruct", a).with_maps(maps);
    report.write(&a.out.join(REPORT_FILE))?;
    if let Some(s) = &report.summary {
        match s.mean_map_infidelity {
            Some(inf) => println!(
                "{} maps, mean map infidelity {inf:.3e}, mean Δ {:.3e}",
                s.maps, s.mean_polarimetric_infidelity
            ),
            None => println!(
                "{} maps, mean Δ {:.3e}",
                s.maps, s.mean_polarimetric_infidelity
            ),
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRow {
    method: &'static str,
    n: usize,
    mean_ms: f64,
    median_ms: f64,
    mean_map_infidelity: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    ensure!(
        !a.methods.is_empty(),
        "--methods must name at least one method"
    );
    let ds =
        read_dataset(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let count = a.limit.map_or(ds.len(), |l| l.min(ds.len()));
    ensure!(count > 0, "nothing to benchmark: --limit 0");
    let samples = (0..count)
        .map(|i| ds.sample::<f64>(i))
        .collect::<su2tomo::Result<Vec<_>>>()?;
    eprintln!("bench config: {}", serde_json::to_string(a)?);
    let mut rows = Vec::new();
    for &method in &a.methods {
        let solver = Reconstructor::new(method, a.mle.config(), a.ga.config(), a.ga.stitched)?;
        let mut times = Vec::new();
        let mut infidelity = 0.0;
        for (stack, truth) in &samples {
            let mut estimate = None;
            for _ in 0..a.repetitions {
                let start = Instant::now();
                estimate = Some(solver.run(stack)?);
                times.push(elapsed_ms(start));
            }
            infidelity += 1.0 - map_fidelity(truth, &estimate.expect("repetitions >= 1"))?;
        }
        rows.push(BenchRow {
            method: method.name(),
            n: ds.n_pixels(),
            mean_ms: times.iter().sum::<f64>() / times.len() as f64,
            median_ms: median(&mut times),
            mean_map_infidelity: infidelity / count as f64,
        });
    }
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let reference =
        read_dataset(&a.reference).with_context(|| format!("reading {}", a.reference.display()))?;
    let predictions =
        read_target_file::<f64>(&a.predictions, reference.n_pixels(), reference.len())?;
    let maps = predictions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (stack, truth) = reference.sample::<f64>(i)?;
            MapMetrics::score(i, &stack, p, Some(&truth))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = RunReport::new("evaluate", a).with_maps(maps);
    match &a.out {
        Some(p) => report.write(p)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_of_even_and_odd_lengths() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
