//! Georeferenced rasters and their on-disk form.
//!
//! Pixel `(col, row)` covers the world square starting at
//! `(origin_x + col * mpp, origin_y + row * mpp)`; row index grows with
//! world y. Files are binary PGM (P5, maxval 255) with a `<stem>.geo.json`
//! sidecar holding `{origin_x, origin_y, meters_per_pixel}`. Overlays are
//! written as binary PPM (P6).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Georef {
    pub origin_x: f64,
    pub origin_y: f64,
    pub meters_per_pixel: f64,
}

impl Georef {
    pub fn new(origin_x: f64, origin_y: f64, meters_per_pixel: f64) -> Result<Self> {
        if !(meters_per_pixel > 0.0 && meters_per_pixel.is_finite()) || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid georeferencing (origin=({origin_x}, {origin_y}), mpp={meters_per_pixel})"
            )));
        }
        Ok(Self { origin_x, origin_y, meters_per_pixel })
    }
}

/// Size and world placement of a raster without its contents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub width: usize,
    pub height: usize,
    pub georef: Georef,
}

/// Row-major grid of `T` with world placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T = f64> {
    width: usize,
    height: usize,
    georef: Georef,
    cells: Vec<T>,
}

pub type OverheadRaster = Raster<f64>;
pub type Mask = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn from_spec(spec: RasterSpec, value: T) -> Result<Self> {
        Self::filled(spec.width, spec.height, spec.georef, value)
    }

    pub fn filled(width: usize, height: usize, georef: Georef, value: T) -> Result<Self> {
        Self::from_cells(width, height, georef, vec![value; width * height])
    }

    pub fn from_cells(width: usize, height: usize, georef: Georef, cells: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("raster must be at least 1x1, got {width}x{height}")));
        }
        if cells.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{width}x{height}"),
                actual: format!("{} cells", cells.len()),
            });
        }
        Georef::new(georef.origin_x, georef.origin_y, georef.meters_per_pixel)?;
        Ok(Self { width, height, georef, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn georef(&self) -> Georef {
        self.georef
    }

    pub fn spec(&self) -> RasterSpec {
        RasterSpec { width: self.width, height: self.height, georef: self.georef }
    }

    pub fn mpp(&self) -> f64 {
        self.georef.meters_per_pixel
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> &T {
        &self.cells[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: T) {
        self.cells[row * self.width + col] = value;
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            georef: self.georef,
            cells: self.cells.iter().map(f).collect(),
        }
    }

    pub fn same_frame<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height && self.georef == other.georef
    }

    /// World coordinates of a pixel center.
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        let g = &self.georef;
        (g.origin_x + (col as f64 + 0.5) * g.meters_per_pixel, g.origin_y + (row as f64 + 0.5) * g.meters_per_pixel)
    }

    /// Pixel containing a world point, if any.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let g = &self.georef;
        let fc = (x - g.origin_x) / g.meters_per_pixel;
        let fr = (y - g.origin_y) / g.meters_per_pixel;
        if !(fc >= 0.0 && fr >= 0.0) {
            return None;
        }
        let (c, r) = (fc.floor() as usize, fr.floor() as usize);
        (c < self.width && r < self.height).then_some((c, r))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.pixel_of(x, y).is_some()
    }
}

impl Raster<f64> {
    /// Bilinear interpolation between pixel centers, clamped at the border.
    /// `None` outside the raster extent.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        self.pixel_of(x, y)?;
        let g = &self.georef;
        let fc = ((x - g.origin_x) / g.meters_per_pixel - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fr = ((y - g.origin_y) / g.meters_per_pixel - 0.5).clamp(0.0, (self.height - 1) as f64);
        let (c0, r0) = (fc.floor() as usize, fr.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(self.width - 1), (r0 + 1).min(self.height - 1));
        let (tx, ty) = (fc - c0 as f64, fr - r0 as f64);
        let top = self.get(c0, r0) * (1.0 - tx) + self.get(c1, r0) * tx;
        let bottom = self.get(c0, r1) * (1.0 - tx) + self.get(c1, r1) * tx;
        Some(top * (1.0 - ty) + bottom * ty)
    }
}

/// Traversability hint costs in `[0, 1]`; higher means avoid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap(Raster<f64>);

impl ProbabilityMap {
    pub fn new(raster: Raster<f64>) -> Result<Self> {
        if let Some(v) = raster.cells().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("hint cost {v} outside [0, 1]")));
        }
        Ok(Self(raster))
    }

    pub fn uniform(width: usize, height: usize, georef: Georef, value: f64) -> Result<Self> {
        Self::new(Raster::filled(width, height, georef, value)?)
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<f64> {
        self.0
    }
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("geo.json")
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes values in `[0, 1]` as 8-bit P5 plus the georeferencing sidecar.
pub fn write_pgm(raster: &Raster<f64>, path: &Path) -> Result<()> {
    if let Some(v) = raster.cells().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("value {v} outside [0, 1] cannot be written as PGM")));
    }
    let mut buf = format!("P5\n{} {}\n255\n", raster.width(), raster.height()).into_bytes();
    buf.extend(raster.cells().iter().map(|v| quantize(*v)));
    fs::write(path, buf)?;
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&raster.georef())?)?;
    Ok(())
}

struct PnmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8], magic: &[u8; 2]) -> Result<PnmHeader> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        let found: Vec<u8> = bytes.iter().take(2).copied().collect();
        return Err(Error::Format(format!(
            "bad magic number {:?} (bytes {:02x?}), expected {:?}",
            String::from_utf8_lossy(&found),
            found,
            std::str::from_utf8(magic).unwrap_or("?")
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("expected a header number at byte {start}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("header number at byte {start} does not fit")))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing whitespace after maxval".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("zero image dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval} (only 8-bit data)")));
    }
    Ok(PnmHeader { width, height, maxval, data_offset: pos + 1 })
}

pub fn read_pgm(path: &Path) -> Result<Raster<f64>> {
    let bytes = fs::read(path)?;
    let header = parse_pnm_header(&bytes, b"P5")?;
    let n = header.width * header.height;
    let payload = &bytes[header.data_offset..];
    if payload.len() < n {
        return Err(Error::Format(format!("truncated payload: expected {n} bytes, found {}", payload.len())));
    }
    let sidecar = sidecar_path(path);
    if !sidecar.exists() {
        return Err(Error::MissingSidecar(sidecar));
    }
    let georef: Georef = serde_json::from_slice(&fs::read(&sidecar)?)?;
    let max = header.maxval as f64;
    let cells = payload[..n].iter().map(|b| *b as f64 / max).collect();
    Raster::from_cells(header.width, header.height, georef, cells)
}

/// Packed RGB image for overlays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    /// Grayscale rendering of a `[0, 1]` raster.
    pub fn from_gray(raster: &Raster<f64>) -> Self {
        Self {
            width: raster.width(),
            height: raster.height(),
            pixels: raster.cells().iter().map(|v| [quantize(*v); 3]).collect(),
        }
    }

    pub fn put(&mut self, col: usize, row: usize, rgb: [u8; 3]) {
        if col < self.width && row < self.height {
            self.pixels[row * self.width + col] = rgb;
        }
    }
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write!(f, "P6\n{} {}\n255\n", img.width, img.height)?;
    f.write_all(&img.pixels.iter().flatten().copied().collect::<Vec<_>>())?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path)?;
    let header = parse_pnm_header(&bytes, b"P6")?;
    let n = header.width * header.height * 3;
    let payload = &bytes[header.data_offset..];
    if payload.len() < n {
        return Err(Error::Format(format!("truncated payload: expected {n} bytes, found {}", payload.len())));
    }
    Ok(RgbImage {
        width: header.width,
        height: header.height,
        pixels: payload[..n].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> Georef {
        Georef::new(-3.0, 7.5, 0.5).unwrap()
    }

    #[test]
    fn uniform_half_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let r = Raster::filled(4, 3, geo(), 0.5).unwrap();
        write_pgm(&r, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.ends_with(&[128u8; 12]));
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.georef(), geo());
        assert!(back.cells().iter().all(|v| (v - 0.5).abs() <= 1.0 / 255.0));
    }

    #[test]
    fn single_pixel_one_is_255() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.pgm");
        write_pgm(&Raster::filled(1, 1, geo(), 1.0).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"P5\n1 1\n255\n\xff");
    }

    #[test]
    fn read_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        write_pgm(&Raster::filled(2, 2, geo(), 0.2).unwrap(), &path).unwrap();

        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'Q';
        bytes[1] = b'7';
        fs::write(&path, &bytes).unwrap();
        let err = read_pgm(&path).unwrap_err().to_string();
        assert!(err.contains("Q7") && err.contains("51, 37"), "{err}");

        fs::write(&path, b"P5\n2 2\n255\n\x01\x02").unwrap();
        assert!(read_pgm(&path).unwrap_err().to_string().contains("truncated"));

        fs::write(&path, b"P5\n2 x\n255\n").unwrap();
        assert!(matches!(read_pgm(&path), Err(Error::Format(_))));

        fs::write(&path, b"P5\n1 1\n255\n\x00").unwrap();
        fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(read_pgm(&path), Err(Error::MissingSidecar(_))));
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        fs::write(&path, b"P5\n# a comment\n2 1 # trailing\n255\n\x00\xff").unwrap();
        fs::write(sidecar_path(&path), br#"{"origin_x":0,"origin_y":0,"meters_per_pixel":1}"#).unwrap();
        assert_eq!(read_pgm(&path).unwrap().cells(), &[0.0, 1.0]);
    }

    #[test]
    fn write_rejects_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let r = Raster::filled(1, 1, geo(), 1.5).unwrap();
        assert!(write_pgm(&r, &dir.path().join("x.pgm")).is_err());
    }

    #[test]
    fn pixel_lookup_and_bilinear() {
        let g = Georef::new(0.0, 0.0, 1.0).unwrap();
        let r = Raster::from_cells(2, 1, g, vec![0.0, 1.0]).unwrap();
        assert_eq!(r.pixel_of(1.5, 0.2), Some((1, 0)));
        assert_eq!(r.pixel_of(2.0, 0.2), None);
        assert_eq!(r.pixel_of(-0.1, 0.2), None);
        assert!((r.sample_bilinear(1.0, 0.5).unwrap() - 0.5).abs() < 1e-12);
        // border region clamps to the edge pixel value
        assert_eq!(r.sample_bilinear(0.2, 0.5), Some(0.0));
        assert_eq!(r.sample_bilinear(2.5, 0.5), None);
    }

    #[test]
    fn ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.ppm");
        let mut img = RgbImage::from_gray(&Raster::filled(3, 2, geo(), 0.0).unwrap());
        img.put(2, 1, [255, 0, 0]);
        write_ppm(&img, &path).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
    }
}
