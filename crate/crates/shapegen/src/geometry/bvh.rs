//! Bounding volume hierarchy over mesh triangles for nearest-triangle
//! queries. Built once per mesh with median splits along the longest axis;
//! queries prune by axis-aligned box distance.

use nalgebra::Point3;

use super::mesh::{Aabb, TriangleMesh};
use super::tri::closest_point_on_triangle;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bb: Aabb, start: usize, count: usize },
    Inner { bb: Aabb, left: usize, right: usize },
}

impl Node {
    fn bb(&self) -> &Aabb {
        match self {
            Node::Leaf { bb, .. } | Node::Inner { bb, .. } => bb,
        }
    }
}

/// Static BVH over the faces of one mesh. Holds triangle corner copies so
/// queries touch contiguous memory.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle corners, permuted into leaf order.
    tris: Vec<[Point3<f64>; 3]>,
    /// Original face index for each permuted triangle.
    face_ids: Vec<u32>,
    root: usize,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        let n = mesh.faces().len();
        let mut tris: Vec<[Point3<f64>; 3]> = (0..n).map(|i| mesh.triangle(i)).collect();
        let mut face_ids: Vec<u32> = (0..n as u32).collect();
        let mut centroids: Vec<Point3<f64>> = tris
            .iter()
            .map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 2);
        let root = build_node(&mut tris, &mut face_ids, &mut centroids, 0, n, &mut nodes);
        Bvh { nodes, tris, face_ids, root }
    }

    /// Closest surface point to `p`: returns `(distance, face index, point)`.
    pub fn nearest(&self, p: &Point3<f64>) -> (f64, u32, Point3<f64>) {
        let mut best_d2 = f64::INFINITY;
        let mut best_face = 0u32;
        let mut best_point = self.tris[0][0];
        // Explicit stack; descend nearer child first for tighter pruning.
        let mut stack = Vec::with_capacity(64);
        stack.push(self.root);
        while let Some(ix) = stack.pop() {
            let node = &self.nodes[ix];
            if node.bb().dist2(p) >= best_d2 {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for t in start..start + count {
                        let [a, b, c] = self.tris[t];
                        let q = closest_point_on_triangle(p, &a, &b, &c);
                        let d2 = (p - q).norm_squared();
                        if d2 < best_d2 {
                            best_d2 = d2;
                            best_face = self.face_ids[t];
                            best_point = q;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bb().dist2(p);
                    let dr = self.nodes[right].bb().dist2(p);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        (best_d2.sqrt(), best_face, best_point)
    }
}

fn build_node(
    tris: &mut [ [Point3<f64>; 3] ],
    face_ids: &mut [u32],
    centroids: &mut [Point3<f64>],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bb = Aabb::empty();
    for t in &tris[start..end] {
        bb.grow(&t[0]);
        bb.grow(&t[1]);
        bb.grow(&t[2]);
    }
    let count = end - start;
    if count <= LEAF_SIZE {
        nodes.push(Node::Leaf { bb, start, count });
        return nodes.len() - 1;
    }
    // Split at the median centroid along the longest bounding axis.
    let mut cb = Aabb::empty();
    for c in &centroids[start..end] {
        cb.grow(c);
    }
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
    let mid = start + count / 2;
    // Sort the sub-range by centroid; a full sort keeps construction
    // deterministic regardless of input order pathologies.
    let mut order: Vec<usize> = (start..end).collect();
    order.sort_by(|&i, &j| centroids[i][axis].total_cmp(&centroids[j][axis]).then(i.cmp(&j)));
    apply_permutation(tris, face_ids, centroids, start, &order);
    let left = build_node(tris, face_ids, centroids, start, mid, nodes);
    let right = build_node(tris, face_ids, centroids, mid, end, nodes);
    nodes.push(Node::Inner { bb, left, right });
    nodes.len() - 1
}

fn apply_permutation(
    tris: &mut [ [Point3<f64>; 3] ],
    face_ids: &mut [u32],
    centroids: &mut [Point3<f64>],
    start: usize,
    order: &[usize],
) {
    let tris_new: Vec<_> = order.iter().map(|&i| tris[i]).collect();
    let ids_new: Vec<_> = order.iter().map(|&i| face_ids[i]).collect();
    let cen_new: Vec<_> = order.iter().map(|&i| centroids[i]).collect();
    for (k, (t, (id, c))) in tris_new
        .into_iter()
        .zip(ids_new.into_iter().zip(cen_new.into_iter()))
        .enumerate()
    {
        tris[start + k] = t;
        face_ids[start + k] = id;
        centroids[start + k] = c;
    }
}
