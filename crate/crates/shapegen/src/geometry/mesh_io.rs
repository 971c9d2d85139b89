//! Mesh file I/O: Wavefront OBJ (ASCII) and binary little-endian PLY.
//!
//! The mesh name is taken from the file stem. Saved PLY files store vertex
//! coordinates as `double`, so a save/load roundtrip is bitwise exact —
//! library manifests rely on this when hashing stored meshes.

use std::path::Path;

use nalgebra::Point3;

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};

/// Load a triangle mesh, dispatching on extension: `.obj` or `.ply`.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => load_obj(path, name),
        Some("ply") => load_ply(path, name),
        other => Err(Error::validation(format!(
            "unsupported mesh extension {:?} for {}; expected .obj or .ply",
            other,
            path.display()
        ))),
    }
}

fn load_obj(path: &Path, name: String) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    *c = tokens
                        .next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| {
                            Error::format(
                                "OBJ",
                                path,
                                format!("line {}: malformed vertex", lineno + 1),
                            )
                        })?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = tokens
                    .map(|t| parse_obj_index(t, vertices.len()))
                    .collect::<Result<_>>()
                    .map_err(|e| {
                        Error::format("OBJ", path, format!("line {}: {e}", lineno + 1))
                    })?;
                if idx.len() < 3 {
                    return Err(Error::format(
                        "OBJ",
                        path,
                        format!("line {}: face with fewer than 3 vertices", lineno + 1),
                    ));
                }
                // Fan-triangulate polygons.
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {} // comments, normals, texture coords, groups: ignored
        }
    }
    TriangleMesh::new(name, vertices, faces)
}

/// OBJ face tokens look like `7`, `7/1`, `7//2`, `7/1/2`, or negative
/// (relative) indices. Returns a zero-based index.
fn parse_obj_index(token: &str, vertex_count: usize) -> Result<u32> {
    let first = token.split('/').next().unwrap_or("");
    let raw: i64 = first
        .parse()
        .map_err(|_| Error::validation(format!("malformed face index '{token}'")))?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        return Err(Error::validation("face index 0 is not valid in OBJ".to_string()));
    };
    if resolved < 0 || resolved >= vertex_count as i64 {
        return Err(Error::validation(format!(
            "face index {raw} out of range ({vertex_count} vertices so far)"
        )));
    }
    Ok(resolved as u32)
}

#[derive(Clone, Copy, PartialEq)]
enum PlyScalar {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl PlyScalar {
    fn parse(s: &str) -> Option<PlyScalar> {
        Some(match s {
            "float" | "float32" => PlyScalar::F32,
            "double" | "float64" => PlyScalar::F64,
            "char" | "int8" => PlyScalar::I8,
            "uchar" | "uint8" => PlyScalar::U8,
            "short" | "int16" => PlyScalar::I16,
            "ushort" | "uint16" => PlyScalar::U16,
            "int" | "int32" => PlyScalar::I32,
            "uint" | "uint32" => PlyScalar::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyScalar::I8 | PlyScalar::U8 => 1,
            PlyScalar::I16 | PlyScalar::U16 => 2,
            PlyScalar::F32 | PlyScalar::I32 | PlyScalar::U32 => 4,
            PlyScalar::F64 => 8,
        }
    }
}

struct PlyCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PlyCursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.data.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn read_f64(&mut self, ty: PlyScalar) -> Option<f64> {
        let b = self.take(ty.size())?;
        Some(match ty {
            PlyScalar::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            PlyScalar::F64 => f64::from_le_bytes(b.try_into().unwrap()),
            PlyScalar::I8 => b[0] as i8 as f64,
            PlyScalar::U8 => b[0] as f64,
            PlyScalar::I16 => i16::from_le_bytes(b.try_into().unwrap()) as f64,
            PlyScalar::U16 => u16::from_le_bytes(b.try_into().unwrap()) as f64,
            PlyScalar::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
            PlyScalar::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
        })
    }

    fn read_index(&mut self, ty: PlyScalar) -> Option<i64> {
        self.read_f64(ty).map(|v| v as i64)
    }
}

struct PlyProperty {
    name: String,
    ty: PlyScalar,
    list_count_ty: Option<PlyScalar>,
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

fn load_ply(path: &Path, name: String) -> Result<TriangleMesh> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::format("PLY", path.to_path_buf(), reason);

    // The header is ASCII lines terminated by "end_header".
    let header_end = find_header_end(&data)
        .ok_or_else(|| bad("missing end_header".to_string()))?;
    let header = std::str::from_utf8(&data[..header_end])
        .map_err(|_| bad("header is not valid ASCII".to_string()))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing 'ply' magic".to_string()));
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut format_seen = false;
    for line in lines {
        let line = line.trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let f = tok.next().unwrap_or("");
                if f != "binary_little_endian" {
                    return Err(bad(format!(
                        "unsupported format '{f}'; only binary_little_endian is supported"
                    )));
                }
                format_seen = true;
            }
            Some("element") => {
                let ename = tok.next().unwrap_or("").to_string();
                let count: usize = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(format!("bad element count for '{ename}'")))?;
                elements.push(PlyElement { name: ename, count, properties: Vec::new() });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element".to_string()))?;
                let t1 = tok.next().unwrap_or("");
                if t1 == "list" {
                    let count_ty = PlyScalar::parse(tok.next().unwrap_or(""))
                        .ok_or_else(|| bad("bad list count type".to_string()))?;
                    let item_ty = PlyScalar::parse(tok.next().unwrap_or(""))
                        .ok_or_else(|| bad("bad list item type".to_string()))?;
                    let pname = tok.next().unwrap_or("").to_string();
                    elem.properties.push(PlyProperty {
                        name: pname,
                        ty: item_ty,
                        list_count_ty: Some(count_ty),
                    });
                } else {
                    let ty = PlyScalar::parse(t1)
                        .ok_or_else(|| bad(format!("unknown property type '{t1}'")))?;
                    let pname = tok.next().unwrap_or("").to_string();
                    elem.properties.push(PlyProperty { name: pname, ty, list_count_ty: None });
                }
            }
            Some("comment") | Some("obj_info") | Some("end_header") | None => {}
            Some(other) => return Err(bad(format!("unknown header keyword '{other}'"))),
        }
    }
    if !format_seen {
        return Err(bad("missing format declaration".to_string()));
    }

    let mut cursor = PlyCursor { data: &data, pos: header_end };
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for elem in &elements {
        if elem.name == "vertex" {
            let ix = |p: &str| elem.properties.iter().position(|q| q.name == p);
            let (xi, yi, zi) = match (ix("x"), ix("y"), ix("z")) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(bad("vertex element lacks x/y/z properties".to_string())),
            };
            for _ in 0..elem.count {
                let mut vals = Vec::with_capacity(elem.properties.len());
                for p in &elem.properties {
                    if p.list_count_ty.is_some() {
                        return Err(bad("list property on vertex element".to_string()));
                    }
                    let v = cursor
                        .read_f64(p.ty)
                        .ok_or_else(|| bad("truncated vertex data".to_string()))?;
                    vals.push(v);
                }
                vertices.push(Point3::new(vals[xi], vals[yi], vals[zi]));
            }
        } else if elem.name == "face" {
            for _ in 0..elem.count {
                for p in &elem.properties {
                    match p.list_count_ty {
                        Some(cty) => {
                            let n = cursor
                                .read_index(cty)
                                .ok_or_else(|| bad("truncated face data".to_string()))?;
                            let mut idx = Vec::with_capacity(n as usize);
                            for _ in 0..n {
                                let i = cursor
                                    .read_index(p.ty)
                                    .ok_or_else(|| bad("truncated face data".to_string()))?;
                                if i < 0 || i as usize >= vertices.len() {
                                    return Err(bad(format!("face index {i} out of range")));
                                }
                                idx.push(i as u32);
                            }
                            if p.name == "vertex_indices" || p.name == "vertex_index" {
                                if idx.len() < 3 {
                                    return Err(bad("face with fewer than 3 vertices".to_string()));
                                }
                                for k in 1..idx.len() - 1 {
                                    faces.push([idx[0], idx[k], idx[k + 1]]);
                                }
                            }
                        }
                        None => {
                            cursor
                                .read_f64(p.ty)
                                .ok_or_else(|| bad("truncated face data".to_string()))?;
                        }
                    }
                }
            }
        } else {
            // Unknown element: skip, which requires fixed-size properties.
            for _ in 0..elem.count {
                for p in &elem.properties {
                    match p.list_count_ty {
                        Some(cty) => {
                            let n = cursor
                                .read_index(cty)
                                .ok_or_else(|| bad("truncated data".to_string()))?;
                            for _ in 0..n {
                                cursor
                                    .read_f64(p.ty)
                                    .ok_or_else(|| bad("truncated data".to_string()))?;
                            }
                        }
                        None => {
                            cursor
                                .read_f64(p.ty)
                                .ok_or_else(|| bad("truncated data".to_string()))?;
                        }
                    }
                }
            }
        }
    }
    TriangleMesh::new(name, vertices, faces)
}

fn find_header_end(data: &[u8]) -> Option<usize> {
    let needle = b"end_header\n";
    data.windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + needle.len())
}

/// Write a mesh as binary little-endian PLY with `double` vertex
/// coordinates and `uchar`-counted `int` face index lists.
pub fn save_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(b"format binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", mesh.vertices().len()).as_bytes());
    out.extend_from_slice(b"property double x\nproperty double y\nproperty double z\n");
    out.extend_from_slice(format!("element face {}\n", mesh.faces().len()).as_bytes());
    out.extend_from_slice(b"property list uchar int vertex_indices\n");
    out.extend_from_slice(b"end_header\n");
    for v in mesh.vertices() {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in mesh.faces() {
        out.push(3u8);
        for &i in f {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    std::fs::write(path, &out).map_err(|e| Error::io(path, e))
}
