//! Dense SDF training samples: regular-grid evaluation with a narrow-band
//! cutoff, and the `SGSD` binary sample file.

use std::io::Read;
use std::path::Path;

use nalgebra::Point3;
use rayon::prelude::*;

use super::mesh::{Aabb, TriangleMesh};
use super::sdf::{winding_number, MeshSdf};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SGSD";

/// Specification of the sampling lattice: a `resolution³` grid of points
/// spanning `cube` inclusively, keeping only samples with |SDF| ≤ `cutoff`.
///
/// The default covers `[-0.05, 1.05]³` — the unit-cube shape frame plus a
/// 5% margin — at 256³ with a 0.2 narrow band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub cube: Aabb,
    pub cutoff: f64,
}

/// Serde mirror with flat cube corners (JSON-friendly).
#[derive(serde::Serialize, serde::Deserialize)]
struct GridSpecFile {
    resolution: usize,
    cube_min: [f64; 3],
    cube_max: [f64; 3],
    cutoff: f64,
}

impl serde::Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridSpecFile {
            resolution: self.resolution,
            cube_min: [self.cube.min.x, self.cube.min.y, self.cube.min.z],
            cube_max: [self.cube.max.x, self.cube.max.y, self.cube.max.z],
            cutoff: self.cutoff,
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = GridSpecFile::deserialize(d)?;
        Ok(GridSpec {
            resolution: f.resolution,
            cube: Aabb::new(
                Point3::new(f.cube_min[0], f.cube_min[1], f.cube_min[2]),
                Point3::new(f.cube_max[0], f.cube_max[1], f.cube_max[2]),
            ),
            cutoff: f.cutoff,
        })
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 256,
            cube: Aabb::new(Point3::new(-0.05, -0.05, -0.05), Point3::new(1.05, 1.05, 1.05)),
            cutoff: 0.2,
        }
    }
}

impl GridSpec {
    pub fn with_resolution(resolution: usize) -> Self {
        GridSpec { resolution, ..GridSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::validation(format!(
                "grid resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        if !(self.cutoff >= 0.0) {
            return Err(Error::validation(format!(
                "grid cutoff must be non-negative, got {}",
                self.cutoff
            )));
        }
        for k in 0..3 {
            if !(self.cube.max[k] > self.cube.min[k]) {
                return Err(Error::validation("grid cube must have positive extent".to_string()));
            }
        }
        Ok(())
    }
}

/// Ground-truth SDF samples for one mesh: parallel `points` / `sdf_values`
/// arrays plus the name of the mesh they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfSampleSet {
    pub source_mesh: String,
    pub points: Vec<Point3<f64>>,
    pub sdf_values: Vec<f64>,
}

impl SdfSampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Evaluate the exact SDF of `mesh` over the grid described by `spec`,
/// keeping samples within the narrow band (|SDF| ≤ cutoff).
///
/// Retention is decided purely by the unsigned distance, so the retained
/// set is independent of triangle order; winding-number signs are computed
/// only for retained points. Grid rows are processed in parallel and
/// concatenated in index order, making the output deterministic.
pub fn sample_training_grid(mesh: &TriangleMesh, spec: &GridSpec) -> Result<SdfSampleSet> {
    spec.validate()?;
    let sdf = MeshSdf::new(mesh.clone());
    let res = spec.resolution;
    let ext = spec.cube.extent();
    let step = ext / (res as f64 - 1.0);
    let origin = spec.cube.min;

    let rows: Vec<(Vec<Point3<f64>>, Vec<f64>)> = (0..res * res)
        .into_par_iter()
        .map(|row| {
            let iz = row / res;
            let iy = row % res;
            let mut pts = Vec::new();
            let mut vals = Vec::new();
            for ix in 0..res {
                let p = Point3::new(
                    origin.x + step.x * ix as f64,
                    origin.y + step.y * iy as f64,
                    origin.z + step.z * iz as f64,
                );
                let d = sdf.unsigned_distance(&p);
                if d <= spec.cutoff {
                    let signed = if winding_number(sdf.mesh(), &p) >= 0.5 { -d } else { d };
                    pts.push(p);
                    vals.push(signed);
                }
            }
            (pts, vals)
        })
        .collect();

    let mut points = Vec::new();
    let mut sdf_values = Vec::new();
    for (pts, vals) in rows {
        points.extend(pts);
        sdf_values.extend(vals);
    }
    if points.is_empty() {
        return Err(Error::numerical(format!(
            "no grid samples within cutoff {} of mesh '{}'; grid does not reach the surface",
            spec.cutoff, mesh.name
        )));
    }
    Ok(SdfSampleSet { source_mesh: mesh.name.clone(), points, sdf_values })
}

/// Write a sample set as an `SGSD` file: magic `SGSD`, little-endian u32
/// sample count, then per sample x, y, z, sdf as little-endian f64.
pub fn save_samples(set: &SdfSampleSet, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + set.len() * 32);
    buf.extend_from_slice(MAGIC);
    let count = u32::try_from(set.len())
        .map_err(|_| Error::validation("sample set too large for SGSD (u32 count)"))?;
    buf.extend_from_slice(&count.to_le_bytes());
    for (p, &v) in set.points.iter().zip(&set.sdf_values) {
        for c in [p.x, p.y, p.z, v] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    std::fs::write(path, &buf).map_err(|e| Error::io(path, e))
}

/// Read an `SGSD` file written by [`save_samples`]. `source_mesh` is not
/// stored in the file and is taken from the caller.
pub fn load_samples(path: &Path, source_mesh: &str) -> Result<SdfSampleSet> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    file.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    if data.len() < 8 || &data[0..4] != MAGIC {
        return Err(Error::format("SGSD", path, "missing SGSD magic"));
    }
    let count = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
    let expected = 8 + count * 32;
    if data.len() != expected {
        return Err(Error::format(
            "SGSD",
            path,
            format!("expected {expected} bytes for {count} samples, found {}", data.len()),
        ));
    }
    let mut points = Vec::with_capacity(count);
    let mut sdf_values = Vec::with_capacity(count);
    let mut off = 8;
    let mut next = || {
        let v = f64::from_le_bytes(data[off..off + 8].try_into().unwrap());
        off += 8;
        v
    };
    for _ in 0..count {
        let x = next();
        let y = next();
        let z = next();
        let v = next();
        points.push(Point3::new(x, y, z));
        sdf_values.push(v);
    }
    Ok(SdfSampleSet { source_mesh: source_mesh.to_string(), points, sdf_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::icosphere;
    use crate::geometry::sdf::brute_sdf;

    fn unit_sphere_spec(res: usize) -> (TriangleMesh, GridSpec) {
        let mesh = icosphere(Point3::new(0.5, 0.5, 0.5), 0.35, 3, "s");
        (mesh, GridSpec { resolution: res, ..GridSpec::default() })
    }

    #[test]
    fn grid_samples_respect_cutoff_and_match_brute() {
        let (mesh, spec) = unit_sphere_spec(24);
        let set = sample_training_grid(&mesh, &spec).unwrap();
        assert!(!set.is_empty());
        assert_eq!(set.source_mesh, "s");
        for (p, &v) in set.points.iter().zip(&set.sdf_values).step_by(97) {
            assert!(v.abs() <= spec.cutoff + 1e-15);
            assert!((v - brute_sdf(&mesh, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_retention_count_matches_brute_recount() {
        // Independent oracle: count band membership by brute distance over
        // the same lattice.
        let (mesh, spec) = unit_sphere_spec(16);
        let set = sample_training_grid(&mesh, &spec).unwrap();
        let res = spec.resolution;
        let step = spec.cube.extent() / (res as f64 - 1.0);
        let mut count = 0;
        for iz in 0..res {
            for iy in 0..res {
                for ix in 0..res {
                    let p = Point3::new(
                        spec.cube.min.x + step.x * ix as f64,
                        spec.cube.min.y + step.y * iy as f64,
                        spec.cube.min.z + step.z * iz as f64,
                    );
                    if brute_sdf(&mesh, &p).abs() <= spec.cutoff {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(set.len(), count);
    }

    #[test]
    fn retained_set_is_invariant_to_face_permutation() {
        let (mesh, spec) = unit_sphere_spec(12);
        let faces: Vec<[u32; 3]> =
            mesh.faces().iter().rev().map(|&[a, b, c]| [c, a, b]).collect();
        let permuted = TriangleMesh::new("s", mesh.vertices().to_vec(), faces).unwrap();
        let a = sample_training_grid(&mesh, &spec).unwrap();
        let b = sample_training_grid(&permuted, &spec).unwrap();
        assert_eq!(a.points, b.points);
        for (x, y) in a.sdf_values.iter().zip(&b.sdf_values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_cutoff_keeps_only_exact_surface_hits() {
        // A resolution-2 lattice over [0,1]³ has its 8 nodes exactly at the
        // corners of this box, where the closest-point query returns the
        // vertex bitwise and the distance is exactly zero.
        let mesh = crate::geometry::primitives::box_mesh(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 1.0),
            "b",
        );
        let spec = GridSpec {
            resolution: 2,
            cube: Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)),
            cutoff: 0.0,
        };
        let set = sample_training_grid(&mesh, &spec).unwrap();
        assert_eq!(set.len(), 8);
        assert!(set.sdf_values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        let (mesh, _) = unit_sphere_spec(8);
        let bad = GridSpec { resolution: 1, ..GridSpec::default() };
        assert!(matches!(sample_training_grid(&mesh, &bad), Err(Error::Validation(_))));
        let bad = GridSpec { cutoff: -0.1, ..GridSpec::default() };
        assert!(matches!(sample_training_grid(&mesh, &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn sgsd_roundtrip_is_bitwise() {
        let (mesh, spec) = unit_sphere_spec(10);
        let set = sample_training_grid(&mesh, &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.sgsd");
        save_samples(&set, &path).unwrap();
        let back = load_samples(&path, "s").unwrap();
        assert_eq!(set, back);
        // And the binary layout is exactly magic + count + 32B records.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"SGSD");
        assert_eq!(bytes.len(), 8 + set.len() * 32);
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        assert_eq!(n as usize, set.len());
    }

    #[test]
    fn sgsd_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.sgsd");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_samples(&path, "x"), Err(Error::Format { .. })));
        std::fs::write(&path, [b"SGSD".as_slice(), &5u32.to_le_bytes(), &[0u8; 16]].concat())
            .unwrap();
        assert!(matches!(load_samples(&path, "x"), Err(Error::Format { .. })));
    }
}
