//! Procedural test and fixture meshes: boxes, icospheres, ellipsoids,
//! plane patches. All watertight except [`plane_patch`], which is an open
//! surface used only as synthetic scene geometry.

use nalgebra::{Point3, Vector3};
use std::collections::HashMap;

use super::mesh::TriangleMesh;

/// Axis-aligned box with outward-facing triangles.
pub fn box_mesh(min: Point3<f64>, max: Point3<f64>, name: &str) -> TriangleMesh {
    let v = [
        Point3::new(min.x, min.y, min.z),
        Point3::new(max.x, min.y, min.z),
        Point3::new(max.x, max.y, min.z),
        Point3::new(min.x, max.y, min.z),
        Point3::new(min.x, min.y, max.z),
        Point3::new(max.x, min.y, max.z),
        Point3::new(max.x, max.y, max.z),
        Point3::new(min.x, max.y, max.z),
    ];
    // Each face as two CCW-from-outside triangles.
    let faces = vec![
        [0, 2, 1], [0, 3, 2], // z = min
        [4, 5, 6], [4, 6, 7], // z = max
        [0, 1, 5], [0, 5, 4], // y = min
        [3, 7, 6], [3, 6, 2], // y = max
        [0, 4, 7], [0, 7, 3], // x = min
        [1, 2, 6], [1, 6, 5], // x = max
    ];
    TriangleMesh::new(name, v.to_vec(), faces).expect("box mesh is valid")
}

/// Geodesic sphere: an icosahedron subdivided `subdivisions` times with all
/// vertices projected to the radius. `subdivisions = 4` gives 5120 faces
/// with a maximum deviation from the true sphere of about 2.4e-4·radius.
pub fn icosphere(center: Point3<f64>, radius: f64, subdivisions: u32, name: &str) -> TriangleMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint_cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mids = [
                midpoint(&mut vertices, &mut midpoint_cache, f[0], f[1]),
                midpoint(&mut vertices, &mut midpoint_cache, f[1], f[2]),
                midpoint(&mut vertices, &mut midpoint_cache, f[2], f[0]),
            ];
            next_faces.push([f[0], mids[0], mids[2]]);
            next_faces.push([f[1], mids[1], mids[0]]);
            next_faces.push([f[2], mids[2], mids[1]]);
            next_faces.push(mids);
        }
        faces = next_faces;
    }

    let verts: Vec<Point3<f64>> =
        vertices.iter().map(|d| Point3::from(center.coords + d * radius)).collect();
    TriangleMesh::new(name, verts, faces).expect("icosphere is valid")
}

fn midpoint(
    vertices: &mut Vec<Vector3<f64>>,
    cache: &mut HashMap<(u32, u32), u32>,
    a: u32,
    b: u32,
) -> u32 {
    let key = if a < b { (a, b) } else { (b, a) };
    if let Some(&ix) = cache.get(&key) {
        return ix;
    }
    let m = ((vertices[a as usize] + vertices[b as usize]) * 0.5).normalize();
    vertices.push(m);
    let ix = (vertices.len() - 1) as u32;
    cache.insert(key, ix);
    ix
}

/// Axis-aligned ellipsoid: an icosphere stretched by `semi_axes`.
pub fn ellipsoid(
    center: Point3<f64>,
    semi_axes: Vector3<f64>,
    subdivisions: u32,
    name: &str,
) -> TriangleMesh {
    let unit = icosphere(Point3::origin(), 1.0, subdivisions, name);
    unit.map_vertices(|v| Point3::from(center.coords + v.coords.component_mul(&semi_axes)))
}

/// Open rectangular patch in a plane, triangulated on a grid. `origin` is
/// one corner; `u` and `v` span the sides. Used as synthetic scene geometry
/// (tabletop) for rendering fixtures, not as a shape to warp.
pub fn plane_patch(
    origin: Point3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    cells: (u32, u32),
    name: &str,
) -> TriangleMesh {
    let (nu, nv) = cells;
    let mut vertices = Vec::with_capacity(((nu + 1) * (nv + 1)) as usize);
    for j in 0..=nv {
        for i in 0..=nu {
            let fu = i as f64 / nu as f64;
            let fv = j as f64 / nv as f64;
            vertices.push(Point3::from(origin.coords + u * fu + v * fv));
        }
    }
    let stride = nu + 1;
    let mut faces = Vec::with_capacity((nu * nv * 2) as usize);
    for j in 0..nv {
        for i in 0..nu {
            let a = j * stride + i;
            let b = a + 1;
            let c = a + stride;
            let d = c + 1;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh::new(name, vertices, faces).expect("plane patch is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_radius() {
        let s = icosphere(Point3::new(1.0, 2.0, 3.0), 0.5, 2, "s");
        // 20·4^k faces; vertices via Euler: V = 2 + F/2.
        assert_eq!(s.faces().len(), 320);
        assert_eq!(s.vertices().len(), 162);
        for v in s.vertices() {
            let r = (v - Point3::new(1.0, 2.0, 3.0)).norm();
            assert!((r - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn icosphere_is_watertight() {
        // Every edge must be shared by exactly two faces.
        let s = icosphere(Point3::origin(), 1.0, 1, "s");
        let mut edge_count: HashMap<(u32, u32), u32> = HashMap::new();
        for f in s.faces() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = if a < b { (a, b) } else { (b, a) };
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        assert!(edge_count.values().all(|&c| c == 2));
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let s = icosphere(Point3::origin(), 1.0, 1, "s");
        for i in 0..s.faces().len() {
            let [a, b, c] = s.triangle(i);
            let n = (b - a).cross(&(c - a));
            let centroid = (a.coords + b.coords + c.coords) / 3.0;
            assert!(n.dot(&centroid) > 0.0, "face {i} winds inward");
        }
    }

    #[test]
    fn box_volume_via_divergence() {
        // Signed volume from the divergence theorem checks global outward
        // orientation: V = Σ (a · (b × c)) / 6 over faces.
        let m = box_mesh(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 3.0, 4.0), "b");
        let vol: f64 = (0..m.faces().len())
            .map(|i| {
                let [a, b, c] = m.triangle(i);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum();
        assert!((vol - 24.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_bounding_box() {
        // Subdivision ≥ 1 puts exact vertices on all six axis poles (edge
        // midpoints normalize onto the axes), so the bounding box equals
        // the semi-axes up to rounding.
        let e = ellipsoid(Point3::origin(), Vector3::new(0.45, 0.3, 0.3), 3, "e");
        let bb = e.bounding_box();
        assert!((bb.max.x - 0.45).abs() < 1e-12);
        assert!((bb.min.x + 0.45).abs() < 1e-12);
        assert!((bb.max.y - 0.3).abs() < 1e-12);
        assert!((bb.max.z - 0.3).abs() < 1e-12);
    }

    #[test]
    fn plane_patch_area() {
        let p = plane_patch(
            Point3::origin(),
            Vector3::new(0.5, 0.0, 0.0),
            Vector3::new(0.0, 0.4, 0.0),
            (4, 4),
            "p",
        );
        assert!((p.surface_area() - 0.2).abs() < 1e-12);
    }
}
