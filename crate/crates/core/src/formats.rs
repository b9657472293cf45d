//! On-disk formats.
//!
//! `MSIG` (raw signals), all little-endian:
//!
//! ```text
//! magic "MSIG" | version u32 | K u64 | N u64 | start_frequency f64 | bandwidth f64 | flags u32
//! K·N × (re f32, im f32), k-major
//! K × (x f64, y f64, z f64)
//! K × timestamp f64            (only when flags bit 0 is set)
//! ```
//!
//! `MVOL` (image volumes):
//!
//! ```text
//! magic "MVOL" | version u32 | origin 3×f64 | spacing 3×f64 | dims 3×u64
//! nx·ny·nz × (re f32, im f32), x fastest
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};
use crate::eval::PointCloud;
use crate::imaging::{ImageVolume, Projection2d, RgbRaster, VoxelGrid};
use crate::radar::{AperturePath, Waveform};
use crate::sim::RawSignalSet;
use crate::{Point3, Vector3};

pub const MSIG_MAGIC: &[u8; 4] = b"MSIG";
pub const MVOL_MAGIC: &[u8; 4] = b"MVOL";
pub const FORMAT_VERSION: u32 = 1;
const FLAG_TIMESTAMPS: u32 = 1;

/// Serializes a signal set into MSIG bytes. Samples are narrowed to f32.
pub fn encode_msig(signals: &RawSignalSet) -> Vec<u8> {
    let k = signals.num_positions();
    let n = signals.num_samples();
    let ts = signals.aperture().timestamps();
    let mut out = Vec::with_capacity(44 + k * n * 8 + k * 32);
    out.extend_from_slice(MSIG_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&signals.waveform().start_frequency.to_le_bytes());
    out.extend_from_slice(&signals.waveform().bandwidth.to_le_bytes());
    let flags = if ts.is_some() { FLAG_TIMESTAMPS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for s in signals.samples() {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    for p in signals.aperture().positions() {
        for c in p.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    if let Some(ts) = ts {
        for t in ts {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    out
}

pub fn write_msig(signals: &RawSignalSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_msig(signals))?;
    Ok(())
}

pub fn read_msig(path: impl AsRef<Path>) -> Result<RawSignalSet> {
    let path = path.as_ref();
    decode_msig(&fs::read(path)?).map_err(|e| relocate(e, path))
}

pub fn decode_msig(bytes: &[u8]) -> Result<RawSignalSet> {
    let mut r = Cursor::new(bytes);
    r.magic(MSIG_MAGIC)?;
    r.version()?;
    let k = r.len_u64("K")?;
    let n = r.len_u64("N")?;
    let f0 = r.f64()?;
    let bw = r.f64()?;
    let flags = r.u32()?;
    if flags & !FLAG_TIMESTAMPS != 0 {
        return Err(r.error(format!("unknown flag bits {flags:#x}")));
    }
    let waveform = Waveform::new(f0, bw, n).map_err(|e| r.error(e.to_string()))?;
    let total = k
        .checked_mul(n)
        .ok_or_else(|| r.error("K·N overflows".into()))?;
    r.need(total.saturating_mul(8))?;
    let mut samples = Vec::with_capacity(total);
    for _ in 0..total {
        let re = r.f32()?;
        let im = r.f32()?;
        samples.push(Complex64::new(re as f64, im as f64));
    }
    let mut positions = Vec::with_capacity(k);
    for _ in 0..k {
        positions.push(Point3::new(r.f64()?, r.f64()?, r.f64()?));
    }
    let aperture = if flags & FLAG_TIMESTAMPS != 0 {
        let ts = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        AperturePath::with_timestamps(positions, ts)
    } else {
        AperturePath::new(positions)
    }
    .map_err(|e| r.error(e.to_string()))?;
    r.finish()?;
    RawSignalSet::new(samples, aperture, waveform)
}

pub fn encode_mvol(volume: &ImageVolume) -> Vec<u8> {
    let g = volume.grid();
    let mut out = Vec::with_capacity(80 + g.len() * 8);
    out.extend_from_slice(MVOL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for c in g.origin.iter().chain(g.spacing.iter()) {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for d in g.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in volume.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn write_mvol(volume: &ImageVolume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_mvol(volume))?;
    Ok(())
}

pub fn read_mvol(path: impl AsRef<Path>) -> Result<ImageVolume> {
    let path = path.as_ref();
    decode_mvol(&fs::read(path)?).map_err(|e| relocate(e, path))
}

pub fn decode_mvol(bytes: &[u8]) -> Result<ImageVolume> {
    let mut r = Cursor::new(bytes);
    r.magic(MVOL_MAGIC)?;
    r.version()?;
    let origin = Point3::new(r.f64()?, r.f64()?, r.f64()?);
    let spacing = Vector3::new(r.f64()?, r.f64()?, r.f64()?);
    let dims = [r.len_u64("nx")?, r.len_u64("ny")?, r.len_u64("nz")?];
    let grid = VoxelGrid::new(origin, spacing, dims).map_err(|e| r.error(e.to_string()))?;
    let total = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| r.error("voxel count overflows".into()))?;
    r.need(total.saturating_mul(8))?;
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        values.push(Complex32::new(r.f32()?, r.f32()?));
    }
    r.finish()?;
    ImageVolume::new(grid, values)
}

/// Little-endian reader that reports byte offsets in its errors.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn error(&self, message: String) -> Error {
        Error::Parse {
            path: Default::default(),
            location: crate::error::Location::Offset(self.pos as u64),
            message,
        }
    }

    fn need(&self, n: usize) -> Result<()> {
        if self.bytes.len() - self.pos < n {
            Err(self.error(format!("truncated: need {n} more bytes, have {}", self.bytes.len() - self.pos)))
        } else {
            Ok(())
        }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        self.need(N)?;
        let out = self.bytes[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        Ok(out)
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let got = self.take::<4>()?;
        if &got != want {
            self.pos = 0;
            return Err(self.error(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(want)
            )));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(self.error(format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn len_u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.take()?);
        usize::try_from(v).map_err(|_| self.error(format!("{what} = {v} does not fit in memory")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

fn relocate(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { location, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            location,
            message,
        },
        other => other,
    }
}

/// ASCII PLY with `x y z` double properties.
pub fn write_cloud_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z\nend_header")?;
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the vertex positions of an ASCII point-cloud PLY written by
/// [`write_cloud_ply`].
pub fn read_cloud_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let mut count = None;
    for (i, line) in lines.by_ref() {
        if let Some(n) = line.strip_prefix("element vertex ") {
            count = Some(
                n.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse_line(path, i + 1, "bad vertex count"))?,
            );
        }
        if line.trim() == "end_header" {
            break;
        }
    }
    let count = count.ok_or_else(|| Error::parse_line(path, 1, "missing vertex element"))?;
    let mut points = Vec::with_capacity(count);
    for (i, line) in lines.take(count) {
        let c: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse_line(path, i + 1, "bad coordinate"))?;
        if c.len() != 3 {
            return Err(Error::parse_line(path, i + 1, "expected 3 coordinates"));
        }
        points.push(Point3::new(c[0], c[1], c[2]));
    }
    if points.len() != count {
        return Err(Error::parse_line(path, text.lines().count(), "fewer points than declared"));
    }
    PointCloud::new(points)
}

/// Raw little-endian f32 values, u fastest, no header.
pub fn write_projection_f32(image: &Projection2d, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(image.values.len() * 4);
    for v in &image.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_png(raster: &RgbRaster, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    let width = u32::try_from(raster.width).map_err(|_| Error::Format("image too wide".into()))?;
    let height = u32::try_from(raster.height).map_err(|_| Error::Format("image too tall".into()))?;
    let mut enc = png::Encoder::new(file, width, height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| Error::Format(e.to_string()))?;
    let data: Vec<u8> = raster.pixels.iter().flatten().copied().collect();
    writer.write_image_data(&data).map_err(|e| Error::Format(e.to_string()))?;
    writer.finish().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::make_planar_aperture;
    use proptest::prelude::*;

    fn signals(with_ts: bool) -> RawSignalSet {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.02, 0.01, 0.01).unwrap();
        let ap = if with_ts {
            AperturePath::with_timestamps(ap.positions().to_vec(), (0..ap.len()).map(|i| i as f64 * 0.1).collect())
                .unwrap()
        } else {
            ap
        };
        let w = Waveform::new(24e9, 0.25e9, 4).unwrap();
        let samples = (0..ap.len() * 4).map(|i| Complex64::new(i as f64 * 0.5, -(i as f64))).collect();
        RawSignalSet::new(samples, ap, w).unwrap()
    }

    #[test]
    fn msig_header_layout() {
        let s = signals(false);
        let b = encode_msig(&s);
        assert_eq!(&b[..4], b"MSIG");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 6);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(b[24..32].try_into().unwrap()), 24e9);
        assert_eq!(f64::from_le_bytes(b[32..40].try_into().unwrap()), 0.25e9);
        assert_eq!(u32::from_le_bytes(b[40..44].try_into().unwrap()), 0);
        assert_eq!(b.len(), 44 + 6 * 4 * 8 + 6 * 24);
        // second sample: (0.5, -1.0)
        assert_eq!(f32::from_le_bytes(b[52..56].try_into().unwrap()), 0.5);
        assert_eq!(f32::from_le_bytes(b[56..60].try_into().unwrap()), -1.0);
        assert_eq!(decode_msig(&b).unwrap(), s);
    }

    #[test]
    fn msig_timestamps_round_trip() {
        let s = signals(true);
        let b = encode_msig(&s);
        assert_eq!(u32::from_le_bytes(b[40..44].try_into().unwrap()), 1);
        assert_eq!(b.len(), 44 + 6 * 4 * 8 + 6 * 32);
        assert_eq!(decode_msig(&b).unwrap(), s);
    }

    #[test]
    fn msig_rejects_garbage() {
        let mut b = encode_msig(&signals(false));
        assert!(decode_msig(&b[..b.len() - 1]).is_err());
        b.push(0);
        assert!(decode_msig(&b).is_err());
        b[0] = b'X';
        assert!(matches!(decode_msig(&b), Err(Error::Parse { .. })));
        assert!(decode_msig(b"MSIG").is_err());
    }

    #[test]
    fn mvol_header_layout() {
        let g = VoxelGrid::new(Point3::new(1.0, 2.0, 3.0), Vector3::new(0.1, 0.2, 0.3), [2, 3, 1]).unwrap();
        let v = ImageVolume::new(g, (0..6).map(|i| Complex32::new(i as f32, 1.0)).collect()).unwrap();
        let b = encode_mvol(&v);
        assert_eq!(&b[..4], b"MVOL");
        assert_eq!(f64::from_le_bytes(b[8..16].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(b[32..40].try_into().unwrap()), 0.1);
        assert_eq!(u64::from_le_bytes(b[56..64].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[64..72].try_into().unwrap()), 3);
        assert_eq!(b.len(), 80 + 6 * 8);
        assert_eq!(decode_mvol(&b).unwrap(), v);
        assert!(decode_mvol(&b[..70]).is_err());
    }

    #[test]
    fn file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.msig");
        fs::write(&p, b"nope").unwrap();
        match read_msig(&p).unwrap_err() {
            Error::Parse { path, .. } => assert_eq!(path, p),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn cloud_ply_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ply");
        let c = PointCloud::new(vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-1.0, 1e-9, 7.0)]).unwrap();
        write_cloud_ply(&c, &p).unwrap();
        assert_eq!(read_cloud_ply(&p).unwrap(), c);
    }

    #[test]
    fn png_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let r = RgbRaster { width: 3, height: 2, pixels: vec![[1, 2, 3]; 6] };
        write_png(&r, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        assert_eq!(u32::from_be_bytes(bytes[16..20].try_into().unwrap()), 3);
        assert_eq!(u32::from_be_bytes(bytes[20..24].try_into().unwrap()), 2);
    }

    proptest! {
        #[test]
        fn mvol_round_trip(dims in prop::array::uniform3(1usize..5), seed in any::<u32>()) {
            let g = VoxelGrid::new(Point3::new(0.5, -0.1, 2.0), Vector3::new(1e-3, 2e-3, 5e-3), dims).unwrap();
            let values = (0..g.len()).map(|i| Complex32::new((i as u32 ^ seed) as f32, -(i as f32))).collect();
            let v = ImageVolume::new(g, values).unwrap();
            prop_assert_eq!(decode_mvol(&encode_mvol(&v)).unwrap(), v);
        }
    }
}
