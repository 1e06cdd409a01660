use std::path::Path;

use anyhow::{Context, Result};
use image::GrayImage;
use su2tomo::forward::Measurement;
use su2tomo::MeasurementStack64;

/// Clamps to `[0, 1]` and quantizes to 8 bits. For viewing only.
pub fn quantize(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Writes `I_<ab>.png` for each measurement into `dir`.
pub fn write_stack(stack: &MeasurementStack64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let n = stack.n_pixels() as u32;
    for m in Measurement::ALL {
        let img = GrayImage::from_raw(n, n, quantize(stack.image(m))).expect("N×N buffer");
        let path = dir.join(format!("I_{}.png", m.label()));
        img.save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_before_quantizing() {
        assert_eq!(
            quantize(&[-0.1, 0.0, 0.5, 1.0, 1.2]),
            vec![0, 0, 128, 255, 255]
        );
    }
}
