//! Depth frames and their on-disk image formats.
//!
//! A [`DepthFrame`] is a row-major depth map in meters (0 = invalid /
//! no return) with any number of named binary masks of the same
//! dimensions. On disk, depth maps are 16-bit grayscale PNGs in
//! millimeters and masks are 8-bit grayscale PNGs where any nonzero
//! value is in-mask.

use std::collections::BTreeMap;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::alignment::{DemoEpisode, FrameRefs};
use crate::error::{Error, Result};

/// A single depth observation with per-object masks.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    /// Image width in pixels.
    pub width: usize,
    /// Image height in pixels.
    pub height: usize,
    /// Row-major depth in meters; 0 marks an invalid pixel.
    pub depth: Vec<f64>,
    /// Binary masks by label, same dimensions as `depth`.
    pub masks: BTreeMap<String, Vec<bool>>,
}

impl DepthFrame {
    /// Build a frame, checking the dimension and value invariants.
    pub fn new(
        width: usize,
        height: usize,
        depth: Vec<f64>,
        masks: BTreeMap<String, Vec<bool>>,
    ) -> Result<Self> {
        let frame = DepthFrame { width, height, depth, masks };
        frame.validate()?;
        Ok(frame)
    }

    /// Check invariants: buffer sizes match `width × height` and depth
    /// values are finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let n = self.width * self.height;
        if self.depth.len() != n {
            return Err(Error::validation(format!(
                "depth buffer has {} values, expected {}×{} = {}",
                self.depth.len(),
                self.width,
                self.height,
                n
            )));
        }
        if let Some(d) = self.depth.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::validation(format!("depth value {d} is not a non-negative meter")));
        }
        for (label, mask) in &self.masks {
            if mask.len() != n {
                return Err(Error::validation(format!(
                    "mask '{label}' has {} values, expected {n}",
                    mask.len()
                )));
            }
        }
        Ok(())
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// True when the frame has no pixels.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when pixel `i` carries a valid depth return.
    pub fn is_valid(&self, i: usize) -> bool {
        self.depth[i] > 0.0
    }

    /// Look up a mask by label.
    pub fn mask(&self, label: &str) -> Option<&[bool]> {
        self.masks.get(label).map(Vec::as_slice)
    }
}

fn image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(e) => Error::io(path, e),
        other => Error::format("PNG", path, other.to_string()),
    }
}

/// Write a depth map as a 16-bit grayscale PNG in millimeters.
///
/// Meters are rounded to the nearest millimeter and clamped to the u16
/// range; 0 (invalid) stays 0.
pub fn save_depth_png(path: &Path, width: usize, height: usize, depth_m: &[f64]) -> Result<()> {
    if depth_m.len() != width * height {
        return Err(Error::validation(format!(
            "depth buffer has {} values, expected {}×{}",
            depth_m.len(),
            width,
            height
        )));
    }
    let mm: Vec<u16> =
        depth_m.iter().map(|m| (m * 1000.0).round().clamp(0.0, 65535.0) as u16).collect();
    let img = ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(width as u32, height as u32, mm)
        .expect("buffer length checked above");
    DynamicImage::ImageLuma16(img).save(path).map_err(|e| image_error(path, e))
}

/// Read a 16-bit grayscale PNG depth map back into meters.
pub fn load_depth_png(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let DynamicImage::ImageLuma16(img) = img else {
        return Err(Error::format("PNG", path, "expected 16-bit grayscale depth"));
    };
    let (w, h) = img.dimensions();
    let depth = img.into_raw().into_iter().map(|mm| mm as f64 / 1000.0).collect();
    Ok((w as usize, h as usize, depth))
}

/// Write a binary mask as an 8-bit grayscale PNG (255 = in-mask).
pub fn save_mask_png(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::validation(format!(
            "mask buffer has {} values, expected {}×{}",
            mask.len(),
            width,
            height
        )));
    }
    let bytes: Vec<u8> = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(width as u32, height as u32, bytes)
        .expect("buffer length checked above");
    DynamicImage::ImageLuma8(img).save(path).map_err(|e| image_error(path, e))
}

/// Read an 8-bit grayscale PNG mask; any nonzero pixel is in-mask.
pub fn load_mask_png(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let DynamicImage::ImageLuma8(img) = img else {
        return Err(Error::format("PNG", path, "expected 8-bit grayscale mask"));
    };
    let (w, h) = img.dimensions();
    let mask = img.into_raw().into_iter().map(|v| v != 0).collect();
    Ok((w as usize, h as usize, mask))
}

/// Load one referenced frame (depth plus all its masks) from an episode
/// directory, validating that every mask matches the depth dimensions.
pub fn load_depth_frame(episode: &DemoEpisode, refs: &FrameRefs) -> Result<DepthFrame> {
    let depth_path = episode.path(&refs.depth);
    let (width, height, depth) = load_depth_png(&depth_path)?;
    let mut masks = BTreeMap::new();
    for (label, rel) in &refs.masks {
        let path = episode.path(rel);
        let (mw, mh, mask) = load_mask_png(&path)?;
        if (mw, mh) != (width, height) {
            return Err(Error::format(
                "PNG",
                path,
                format!("mask '{label}' is {mw}×{mh}, depth is {width}×{height}"),
            ));
        }
        masks.insert(label.clone(), mask);
    }
    DepthFrame::new(width, height, depth, masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn depth_png_roundtrips_at_millimeter_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.png");
        // Values on the millimeter lattice survive exactly; 0 stays 0.
        let depth = vec![0.0, 0.001, 0.55, 0.8, 65.535];
        save_depth_png(&path, 5, 1, &depth).unwrap();
        let (w, h, back) = load_depth_png(&path).unwrap();
        assert_eq!((w, h), (5, 1));
        assert_eq!(back, depth);
    }

    #[test]
    fn depth_png_quantizes_to_nearest_millimeter() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.png");
        save_depth_png(&path, 2, 1, &[0.5004, 0.5006]).unwrap();
        let (_, _, back) = load_depth_png(&path).unwrap();
        assert_eq!(back, vec![0.5, 0.501]);
    }

    #[test]
    fn mask_png_roundtrips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = vec![true, false, false, true, true, false];
        save_mask_png(&path, 3, 2, &mask).unwrap();
        let (w, h, back) = load_mask_png(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, mask);
    }

    #[test]
    fn wrong_bit_depth_is_a_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.png");
        save_mask_png(&path, 2, 2, &[true; 4]).unwrap();
        // An 8-bit image is not a valid 16-bit depth map.
        assert!(matches!(load_depth_png(&path), Err(Error::Format { .. })));
        save_depth_png(&path, 2, 2, &[0.5; 4]).unwrap();
        assert!(matches!(load_mask_png(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_depth_png(Path::new("/nonexistent/d.png")), Err(Error::Io { .. })));
    }

    #[test]
    fn frame_invariants_are_checked() {
        let err = DepthFrame::new(2, 2, vec![0.0; 3], BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = DepthFrame::new(2, 2, vec![0.0, 0.1, -0.2, 0.3], BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let masks = BTreeMap::from([("a".to_string(), vec![true; 3])]);
        let err = DepthFrame::new(2, 2, vec![0.1; 4], masks).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
