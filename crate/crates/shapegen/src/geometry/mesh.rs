//! Triangle mesh container and normalization maps.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    /// The empty box, ready to grow.
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        Aabb { min, max }
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        out.grow(&other.min);
        out.grow(&other.max);
        out
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from((self.min.coords + self.max.coords) * 0.5)
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Squared distance from `p` to this box (zero inside).
    pub fn dist2(&self, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = (self.min[k] - p[k]).max(0.0).max(p[k] - self.max[k]);
            d2 += d * d;
        }
        d2
    }
}

/// The similarity that [`TriangleMesh::normalize_to_unit_cube`] applied:
/// `normalized = scale · original + offset`, uniform scale, no rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCubeMap {
    pub scale: f64,
    pub offset: Vector3<f64>,
}

impl UnitCubeMap {
    /// Original-frame point to normalized frame.
    pub fn to_normalized(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(p.coords * self.scale + self.offset)
    }

    /// Normalized-frame point back to the original frame.
    pub fn to_original(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - self.offset) / self.scale)
    }
}

/// An indexed triangle mesh.
///
/// Invariants, enforced at construction: at least one vertex and one face,
/// all face indices in range, all coordinates finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub name: String,
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(name: impl Into<String>, vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let name = name.into();
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::validation(format!(
                "mesh '{name}' is empty ({} vertices, {} faces)",
                vertices.len(),
                faces.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::validation(format!(
                    "mesh '{name}' vertex {i} has non-finite coordinates"
                )));
            }
        }
        let n = vertices.len() as u32;
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&ix| ix >= n) {
                return Err(Error::validation(format!(
                    "mesh '{name}' face {i} references vertex out of range (indices {f:?}, {n} vertices)"
                )));
            }
        }
        Ok(TriangleMesh { name, vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    /// Corner points of face `i`.
    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn bounding_box(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for v in &self.vertices {
            bb.grow(v);
        }
        bb
    }

    /// Total surface area.
    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                (b - a).cross(&(c - a)).norm() * 0.5
            })
            .sum()
    }

    /// Uniformly scale and translate so the bounding box fits `[0, 1]³`,
    /// centered, with the longest axis spanning exactly 1. Returns the
    /// normalized mesh and the map that was applied.
    ///
    /// Errors if the mesh is degenerate (zero extent on every axis).
    pub fn normalize_to_unit_cube(&self) -> Result<(TriangleMesh, UnitCubeMap)> {
        let bb = self.bounding_box();
        let ext = bb.extent();
        let longest = ext.max();
        if !(longest > 0.0) {
            return Err(Error::numerical(format!(
                "mesh '{}' has zero extent; cannot normalize",
                self.name
            )));
        }
        let scale = 1.0 / longest;
        let center = bb.center();
        // center maps to the cube center (0.5, 0.5, 0.5).
        let offset = Vector3::new(0.5, 0.5, 0.5) - center.coords * scale;
        let map = UnitCubeMap { scale, offset };
        let vertices = self.vertices.iter().map(|v| map.to_normalized(v)).collect();
        let mesh = TriangleMesh { name: self.name.clone(), vertices, faces: self.faces.clone() };
        Ok((mesh, map))
    }

    /// Uniformly scale about the bounding-box center so the bounding-box
    /// diagonal becomes `target`. Used to produce size variants of library
    /// shapes relative to a reference object.
    pub fn scale_to_diagonal(&self, target: f64) -> Result<TriangleMesh> {
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::validation(format!(
                "scale_to_diagonal target must be positive and finite, got {target}"
            )));
        }
        let bb = self.bounding_box();
        let diag = bb.diagonal();
        if !(diag > 0.0) {
            return Err(Error::numerical(format!(
                "mesh '{}' has zero bounding-box diagonal; cannot rescale",
                self.name
            )));
        }
        let s = target / diag;
        let c = bb.center().coords;
        let vertices = self.vertices.iter().map(|v| Point3::from((v.coords - c) * s + c)).collect();
        Ok(TriangleMesh { name: self.name.clone(), vertices, faces: self.faces.clone() })
    }

    /// Apply an arbitrary per-vertex map, keeping connectivity.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> TriangleMesh {
        TriangleMesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Same mesh under a new name.
    pub fn renamed(&self, name: impl Into<String>) -> TriangleMesh {
        TriangleMesh { name: name.into(), vertices: self.vertices.clone(), faces: self.faces.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> TriangleMesh {
        TriangleMesh::new(
            "tetra",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 2.0, 0.0),
                Point3::new(0.0, 0.0, 4.0),
            ],
            vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        assert!(TriangleMesh::new("e", vec![], vec![]).is_err());
        let r = TriangleMesh::new("bad", vec![Point3::origin()], vec![[0, 0, 1]]);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn bounding_box_and_area() {
        let m = tetra();
        let bb = m.bounding_box();
        assert_eq!(bb.min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(bb.max, Point3::new(1.0, 2.0, 4.0));
        // Face [0,1,2] has area 1/2·|1·2| = 1.
        assert!(m.surface_area() > 1.0);
    }

    #[test]
    fn normalize_centers_and_scales_longest_axis() {
        let m = tetra();
        let (n, map) = m.normalize_to_unit_cube().unwrap();
        let bb = n.bounding_box();
        // Longest original axis is z with extent 4 → scale 1/4.
        assert!((map.scale - 0.25).abs() < 1e-15);
        assert!((bb.extent().max() - 1.0).abs() < 1e-12);
        let c = bb.center();
        for k in 0..3 {
            assert!((c[k] - 0.5).abs() < 1e-12);
            assert!(bb.min[k] >= -1e-12 && bb.max[k] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn normalize_of_symmetric_cube_has_expected_map() {
        // [-1, 1]³ cube: scale 1/2, offset (0.5, 0.5, 0.5).
        let cube = crate::geometry::primitives::box_mesh(
            Point3::new(-1.0, -1.0, -1.0),
            Point3::new(1.0, 1.0, 1.0),
            "cube",
        );
        let (_, map) = cube.normalize_to_unit_cube().unwrap();
        assert!((map.scale - 0.5).abs() < 1e-15);
        assert!((map.offset - Vector3::new(0.5, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn unit_cube_map_roundtrips() {
        let m = tetra();
        let (_, map) = m.normalize_to_unit_cube().unwrap();
        let p = Point3::new(0.3, 1.1, 2.0);
        let back = map.to_original(&map.to_normalized(&p));
        assert!((back - p).norm() < 1e-12);
    }

    #[test]
    fn scale_to_diagonal_hits_target_and_keeps_center() {
        let m = tetra();
        let scaled = m.scale_to_diagonal(0.8).unwrap();
        assert!((scaled.bounding_box().diagonal() - 0.8).abs() < 1e-12);
        let c0 = m.bounding_box().center();
        let c1 = scaled.bounding_box().center();
        assert!((c1 - c0).norm() < 1e-12);
    }

    #[test]
    fn scale_to_diagonal_rejects_bad_target() {
        assert!(tetra().scale_to_diagonal(0.0).is_err());
        assert!(tetra().scale_to_diagonal(f64::NAN).is_err());
    }

    #[test]
    fn aabb_distance() {
        let bb = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        assert_eq!(bb.dist2(&Point3::new(0.5, 0.5, 0.5)), 0.0);
        assert!((bb.dist2(&Point3::new(2.0, 0.5, 0.5)) - 1.0).abs() < 1e-15);
        assert!((bb.dist2(&Point3::new(2.0, 2.0, 0.5)) - 2.0).abs() < 1e-15);
    }
}
