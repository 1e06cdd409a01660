//! On-disk corpora: `manifest.json` plus two raw little-endian `f32` payloads.
//!
//! A dataset directory holds
//!
//! * `manifest.json` ([`DatasetManifest`]),
//! * `inputs.bin`: `sample_count × 5 × N × N` values, images in stack order,
//! * `targets.bin`: `sample_count × 3 × N × N` values, channels `(Θ, polar, azimuth)`.
//!
//! Arrays are row-major and sample-major. Single maps and stacks are exchanged as one-sample
//! datasets. Predicted parameter maps use the bare `targets.bin` layout (see
//! [`read_target_file`]).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::MeasurementStack;
use crate::generate::GeneratorKind;
use crate::scalar::Real;
use crate::su2::{AxisAngle, ProcessMap, SphericalAxis};

pub const FORMAT_VERSION: u32 = 1;
pub const CHANNELS_IN: usize = 5;
pub const CHANNELS_OUT: usize = 3;
pub const DTYPE: &str = "float32";
pub const BYTE_ORDER: &str = "little";
pub const LAYOUT: &str = "row_major_sample_major";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INPUTS_FILE: &str = "inputs.bin";
pub const TARGETS_FILE: &str = "targets.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n_pixels: usize,
    pub sample_count: usize,
    pub channels_in: usize,
    pub channels_out: usize,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    /// `null` for noiseless inputs.
    pub noise_sigma: Option<f64>,
    pub root_seed: Option<u64>,
    /// `null` when the samples were not drawn by the generator (simulated devices,
    /// reconstructions).
    pub generator_kind: Option<GeneratorKind>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(self.format_version));
        }
        let bad = |msg: String| Err(Error::InvalidManifest(msg));
        if self.channels_in != CHANNELS_IN {
            return bad(format!(
                "channels_in is {}, expected {CHANNELS_IN}",
                self.channels_in
            ));
        }
        if self.channels_out != CHANNELS_OUT {
            return bad(format!(
                "channels_out is {}, expected {CHANNELS_OUT}",
                self.channels_out
            ));
        }
        if self.dtype != DTYPE {
            return bad(format!("dtype {:?}, expected {DTYPE:?}", self.dtype));
        }
        if self.byte_order != BYTE_ORDER {
            return bad(format!(
                "byte_order {:?}, expected {BYTE_ORDER:?}",
                self.byte_order
            ));
        }
        if self.layout != LAYOUT {
            return bad(format!("layout {:?}, expected {LAYOUT:?}", self.layout));
        }
        if self.n_pixels == 0 || self.sample_count == 0 {
            return bad("n_pixels and sample_count must be positive".into());
        }
        Ok(())
    }

    pub fn inputs_len(&self) -> u64 {
        (self.sample_count * CHANNELS_IN * self.n_pixels * self.n_pixels * 4) as u64
    }

    pub fn targets_len(&self) -> u64 {
        (self.sample_count * CHANNELS_OUT * self.n_pixels * self.n_pixels * 4) as u64
    }
}

/// Corpus-level metadata supplied by whoever writes a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DatasetMeta {
    pub noise_sigma: Option<f64>,
    pub root_seed: Option<u64>,
    pub generator_kind: Option<GeneratorKind>,
}

/// One sample exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    /// `5 × N × N`
    pub inputs: Vec<f32>,
    /// `3 × N × N`
    pub targets: Vec<f32>,
}

impl RawSample {
    pub fn encode<T: Real>(stack: &MeasurementStack<T>, process: &ProcessMap<T>) -> Result<Self> {
        if stack.n_pixels() != process.n_pixels() {
            return Err(Error::SizeMismatch {
                left: stack.n_pixels(),
                right: process.n_pixels(),
            });
        }
        let inputs = stack
            .images()
            .iter()
            .flatten()
            .map(|v| to_f32(*v))
            .collect();
        Ok(Self {
            inputs,
            targets: encode_targets(process),
        })
    }

    pub fn stack<T: Real>(&self, n: usize, sigma: Option<f64>) -> Result<MeasurementStack<T>> {
        let nn = n * n;
        if self.inputs.len() != CHANNELS_IN * nn {
            return Err(Error::invalid(
                "raw sample",
                "input length does not match N",
            ));
        }
        let images = std::array::from_fn(|k| {
            self.inputs[k * nn..(k + 1) * nn]
                .iter()
                .map(|&v| T::lit(v as f64))
                .collect()
        });
        MeasurementStack::from_images(n, images, sigma.map(T::lit))
    }

    pub fn process<T: Real>(&self, n: usize) -> Result<ProcessMap<T>> {
        decode_targets(&self.targets, n)
    }
}

#[inline]
fn to_f32<T: Real>(v: T) -> f32 {
    v.to_f32().expect("finite value")
}

/// `(Θ, polar, azimuth)` planes of a process map.
pub fn encode_targets<T: Real>(process: &ProcessMap<T>) -> Vec<f32> {
    let nn = process.n_pixels() * process.n_pixels();
    let mut out = vec![0.0f32; CHANNELS_OUT * nn];
    for (i, p) in process.params().iter().enumerate() {
        let s = p.spherical();
        out[i] = to_f32(p.theta());
        out[nn + i] = to_f32(s.polar);
        out[2 * nn + i] = to_f32(s.azimuth);
    }
    out
}

/// Inverse of [`encode_targets`]. Angles slightly outside their range (from `f32` rounding or
/// an unconstrained predictor) are clamped or wrapped.
pub fn decode_targets<T: Real>(targets: &[f32], n: usize) -> Result<ProcessMap<T>> {
    let nn = n * n;
    if targets.len() != CHANNELS_OUT * nn {
        return Err(Error::invalid(
            "target planes",
            format!("{} values, expected {}", targets.len(), CHANNELS_OUT * nn),
        ));
    }
    let params = (0..nn)
        .map(|i| {
            let clamp = |v: f32| T::lit(v as f64).max(T::zero()).min(T::PI());
            let s = SphericalAxis {
                polar: clamp(targets[nn + i]),
                azimuth: T::lit(targets[2 * nn + i] as f64),
            };
            AxisAngle::from_spherical(clamp(targets[i]), s)
        })
        .collect::<Result<Vec<_>>>()?;
    ProcessMap::new(n, params)
}

fn write_f32s(w: &mut impl Write, values: &[f32]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn decode_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Streaming writer. Payloads go to temporary files that are renamed into place, and the
/// manifest is written last, by [`DatasetWriter::finish`]; an unfinished writer leaves no
/// dataset files behind.
#[derive(Debug)]
pub struct DatasetWriter {
    dir: PathBuf,
    n: usize,
    meta: DatasetMeta,
    count: usize,
    inputs: Option<BufWriter<File>>,
    targets: Option<BufWriter<File>>,
}

fn partial(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.partial"))
}

impl DatasetWriter {
    /// Creates `dir` if needed.
    pub fn create(dir: impl AsRef<Path>, n_pixels: usize, meta: DatasetMeta) -> Result<Self> {
        if n_pixels == 0 {
            return Err(Error::invalid("dataset", "n_pixels must be positive"));
        }
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let inputs = BufWriter::new(File::create(partial(&dir, INPUTS_FILE))?);
        let targets = BufWriter::new(File::create(partial(&dir, TARGETS_FILE))?);
        Ok(Self {
            dir,
            n: n_pixels,
            meta,
            count: 0,
            inputs: Some(inputs),
            targets: Some(targets),
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn push<T: Real>(
        &mut self,
        stack: &MeasurementStack<T>,
        process: &ProcessMap<T>,
    ) -> Result<()> {
        if stack.n_pixels() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: stack.n_pixels(),
            });
        }
        self.push_raw(&RawSample::encode(stack, process)?)
    }

    pub fn push_raw(&mut self, sample: &RawSample) -> Result<()> {
        let nn = self.n * self.n;
        if sample.inputs.len() != CHANNELS_IN * nn || sample.targets.len() != CHANNELS_OUT * nn {
            return Err(Error::invalid(
                "raw sample",
                "length does not match the dataset's N",
            ));
        }
        write_f32s(self.inputs.as_mut().expect("open writer"), &sample.inputs)?;
        write_f32s(self.targets.as_mut().expect("open writer"), &sample.targets)?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<DatasetManifest> {
        if self.count == 0 {
            return Err(Error::invalid("dataset", "no samples written"));
        }
        for (w, name) in [
            (self.inputs.take(), INPUTS_FILE),
            (self.targets.take(), TARGETS_FILE),
        ] {
            let file = w
                .expect("open writer")
                .into_inner()
                .map_err(|e| e.into_error())?;
            file.sync_all()?;
            fs::rename(partial(&self.dir, name), self.dir.join(name))?;
        }
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            n_pixels: self.n,
            sample_count: self.count,
            channels_in: CHANNELS_IN,
            channels_out: CHANNELS_OUT,
            dtype: DTYPE.into(),
            byte_order: BYTE_ORDER.into(),
            layout: LAYOUT.into(),
            noise_sigma: self.meta.noise_sigma,
            root_seed: self.meta.root_seed,
            generator_kind: self.meta.generator_kind,
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), json)?;
        Ok(manifest)
    }
}

impl Drop for DatasetWriter {
    fn drop(&mut self) {
        if self.inputs.is_some() {
            self.inputs = None;
            self.targets = None;
            let _ = fs::remove_file(partial(&self.dir, INPUTS_FILE));
            let _ = fs::remove_file(partial(&self.dir, TARGETS_FILE));
        }
    }
}

/// Writes a whole corpus. All samples must share one `N`; at least one is required.
pub fn write_dataset<'a, T: Real>(
    samples: impl IntoIterator<Item = (&'a MeasurementStack<T>, &'a ProcessMap<T>)>,
    dir: impl AsRef<Path>,
    meta: DatasetMeta,
) -> Result<DatasetManifest> {
    let mut iter = samples.into_iter().peekable();
    let Some((first, _)) = iter.peek() else {
        return Err(Error::invalid("dataset", "no samples to write"));
    };
    let mut w = DatasetWriter::create(dir, first.n_pixels(), meta)?;
    for (stack, process) in iter {
        w.push(stack, process)?;
    }
    w.finish()
}

/// Random-access reader; only the requested sample is read from disk.
#[derive(Debug)]
pub struct DatasetReader {
    dir: PathBuf,
    manifest: DatasetManifest,
    inputs: File,
    targets: File,
}

/// Opens and validates a dataset directory.
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<DatasetReader> {
    DatasetReader::open(dir)
}

fn check_len(path: &Path, file: &File, expected: u64) -> Result<()> {
    let actual = file.metadata()?.len();
    if actual != expected {
        return Err(Error::CorruptDataset {
            file: path.to_path_buf(),
            expected,
            actual,
        });
    }
    Ok(())
}

impl DatasetReader {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        let open = |name: &str, expected: u64| -> Result<File> {
            let path = dir.join(name);
            let f = File::open(&path)?;
            check_len(&path, &f, expected)?;
            Ok(f)
        };
        let inputs = open(INPUTS_FILE, manifest.inputs_len())?;
        let targets = open(TARGETS_FILE, manifest.targets_len())?;
        Ok(Self {
            dir,
            manifest,
            inputs,
            targets,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.manifest.sample_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_pixels(&self) -> usize {
        self.manifest.n_pixels
    }

    pub fn raw(&self, index: usize) -> Result<RawSample> {
        if index >= self.len() {
            return Err(Error::SampleOutOfRange {
                index,
                count: self.len(),
            });
        }
        let nn = self.n_pixels() * self.n_pixels();
        let read = |file: &File, channels: usize| -> Result<Vec<f32>> {
            let len = channels * nn * 4;
            let mut buf = vec![0u8; len];
            read_exact_at(file, &mut buf, (index * len) as u64)?;
            Ok(decode_f32s(&buf))
        };
        Ok(RawSample {
            inputs: read(&self.inputs, CHANNELS_IN)?,
            targets: read(&self.targets, CHANNELS_OUT)?,
        })
    }

    pub fn stack<T: Real>(&self, index: usize) -> Result<MeasurementStack<T>> {
        self.raw(index)?
            .stack(self.n_pixels(), self.manifest.noise_sigma)
    }

    pub fn process<T: Real>(&self, index: usize) -> Result<ProcessMap<T>> {
        self.raw(index)?.process(self.n_pixels())
    }

    pub fn sample<T: Real>(&self, index: usize) -> Result<(MeasurementStack<T>, ProcessMap<T>)> {
        let raw = self.raw(index)?;
        Ok((
            raw.stack(self.n_pixels(), self.manifest.noise_sigma)?,
            raw.process(self.n_pixels())?,
        ))
    }
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    std::os::unix::fs::FileExt::read_exact_at(file, buf, offset)
}

#[cfg(not(unix))]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = file.try_clone()?;
    f.seek(SeekFrom::Start(offset))?;
    f.read_exact(buf)
}

/// Reads a bare `count × 3 × N × N` target-layout file, as written by external predictors.
pub fn read_target_file<T: Real>(
    path: impl AsRef<Path>,
    n: usize,
    count: usize,
) -> Result<Vec<ProcessMap<T>>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let plane = CHANNELS_OUT * n * n;
    let expected = (count * plane * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::CorruptDataset {
            file: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    decode_f32s(&bytes)
        .chunks_exact(plane)
        .map(|t| decode_targets(t, n))
        .collect()
}

/// Writes maps in the bare target layout.
pub fn write_target_file<T: Real>(path: impl AsRef<Path>, maps: &[ProcessMap<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for m in maps {
        write_f32s(&mut w, &encode_targets(m))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{add_noise, measurement_stack};
    use crate::generate::{random_process, GeneratorConfig};
    use crate::su2::map_fidelity;

    fn sample(n: usize, seed: u64) -> (MeasurementStack<f32>, ProcessMap<f32>) {
        let p = random_process::<f32>(&GeneratorConfig::new(n, seed)).unwrap();
        let s = add_noise(&measurement_stack(&p), 0.02, seed).unwrap();
        (s, p)
    }

    #[test]
    fn single_tiny_sample_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = sample(2, 1);
        let m = write_dataset([(&s, &p)], dir.path(), DatasetMeta::default()).unwrap();
        assert_eq!(
            fs::metadata(dir.path().join(INPUTS_FILE)).unwrap().len(),
            80
        );
        assert_eq!(
            fs::metadata(dir.path().join(TARGETS_FILE)).unwrap().len(),
            48
        );
        assert_eq!(m.inputs_len(), 80);
        assert!(!dir.path().join("inputs.bin.partial").exists());
    }

    #[test]
    fn full_corpus_size_arithmetic() {
        let m = DatasetManifest {
            format_version: 1,
            n_pixels: 64,
            sample_count: 50_000,
            channels_in: 5,
            channels_out: 3,
            dtype: DTYPE.into(),
            byte_order: BYTE_ORDER.into(),
            layout: LAYOUT.into(),
            noise_sigma: Some(0.02),
            root_seed: None,
            generator_kind: None,
        };
        assert_eq!(m.inputs_len(), 4_096_000_000);
    }

    #[test]
    fn stacks_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<_> = (0..4).map(|k| sample(5, k)).collect();
        let meta = DatasetMeta {
            noise_sigma: Some(0.02),
            root_seed: Some(3),
            generator_kind: Some(GeneratorKind::Fourier),
        };
        write_dataset(samples.iter().map(|(s, p)| (s, p)), dir.path(), meta).unwrap();
        let r = read_dataset(dir.path()).unwrap();
        assert_eq!(r.len(), 4);
        for (k, (s, p)) in samples.iter().enumerate() {
            let got = r.stack::<f32>(k).unwrap();
            for (a, b) in got.images().iter().zip(s.images()) {
                assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            assert_eq!(r.raw(k).unwrap().targets, encode_targets(p));
            let f = map_fidelity(
                &r.process::<f64>(k).unwrap(),
                &ProcessMap::new(
                    5,
                    p.params()
                        .iter()
                        .map(|a| {
                            AxisAngle::new(
                                (a.theta() as f64).min(std::f64::consts::PI),
                                a.axis().map(|v| v as f64),
                            )
                            .unwrap()
                        })
                        .collect(),
                )
                .unwrap(),
            )
            .unwrap();
            assert!(f > 1.0 - 1e-6);
        }
        assert!(matches!(
            r.raw(4),
            Err(Error::SampleOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = sample(3, 2);
        write_dataset([(&s, &p)], dir.path(), DatasetMeta::default()).unwrap();
        let path = dir.path().join(INPUTS_FILE);
        let f = fs::OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(100).unwrap();
        match read_dataset(dir.path()) {
            Err(Error::CorruptDataset {
                expected: 180,
                actual: 100,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn manifest_checks() {
        let dir = tempfile::tempdir().unwrap();
        let (s, p) = sample(2, 3);
        write_dataset([(&s, &p)], dir.path(), DatasetMeta::default()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).unwrap();

        fs::write(
            &path,
            text.replace("\"channels_in\": 5", "\"channels_in\": 4"),
        )
        .unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(Error::InvalidManifest(_))
        ));

        fs::write(
            &path,
            text.replace("\"format_version\": 1", "\"format_version\": 2"),
        )
        .unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(Error::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn mixed_sizes_and_empty_corpora_fail() {
        let dir = tempfile::tempdir().unwrap();
        let (a, pa) = sample(2, 1);
        let (b, pb) = sample(3, 1);
        assert!(write_dataset([(&a, &pa), (&b, &pb)], dir.path(), DatasetMeta::default()).is_err());
        assert!(!dir.path().join(INPUTS_FILE).exists());
        assert!(!dir.path().join("inputs.bin.partial").exists());
        let none: Vec<(&MeasurementStack<f32>, &ProcessMap<f32>)> = vec![];
        assert!(write_dataset(none, dir.path(), DatasetMeta::default()).is_err());
    }

    #[test]
    fn target_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let maps: Vec<ProcessMap<f64>> = (0..3)
            .map(|k| random_process(&GeneratorConfig::new(4, k)).unwrap())
            .collect();
        let path = dir.path().join("pred.bin");
        write_target_file(&path, &maps).unwrap();
        let back = read_target_file::<f64>(&path, 4, 3).unwrap();
        for (a, b) in maps.iter().zip(&back) {
            assert!(map_fidelity(a, b).unwrap() > 1.0 - 1e-6);
        }
        assert!(read_target_file::<f64>(&path, 4, 2).is_err());
    }
}
