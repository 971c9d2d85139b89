//! Per-demonstration human annotation files.
//!
//! An `annotation.json` names every task-relevant object in a source
//! demonstration and attaches to each:
//!
//! - its library `category`,
//! - whether it is `gripped`, and if so one or more `gripper_keypoint`
//!   points (object frame) marking where the gripper holds it,
//! - an ordered list of `functionals`: timestamped keypoint sets used to
//!   align a substituted shape. Each entry carries a `tstamp` (frame
//!   index) and either a keypoint payload (`mode` + `points`, optionally
//!   an `anchor_ref` for anchored alignment) or the literal string
//!   `"ditto"`, meaning "same keypoints as the previous entry".
//!
//! Remaining foreground objects that are merely visible (kept as-is
//! during compositing) are listed by name under
//! `other_foreground_objects`.
//!
//! Parsing is strict: unknown fields are rejected, and every violation is
//! reported with the JSON path to the offending field (for example
//! `objects.mug_pink.functionals[1].tstamp`). Between annotated
//! timestamps the alignment is interpolated; [`ObjectAnnotation::keypoints_at`]
//! returns the surrounding anchor pair and the interpolation fraction
//! `s = (t − t_i)/(t_{i+1} − t_i)`, holding the first anchor before the
//! first timestamp and the last anchor after the last.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Point3;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Alignment-cost identifiers accepted in `keypoints.mode`. `"ditto"` is
/// the whole-payload shorthand and never appears as an explicit mode in a
/// file; it shows up in typed form after parsing.
pub const MODE_SIMPLE: &str = "simple";
pub const MODE_RIGID: &str = "rigid";
pub const MODE_DITTO: &str = "ditto";

const KNOWN_MODES: [&str; 2] = [MODE_SIMPLE, MODE_RIGID];

/// Reference to a point on another annotated object, for alignments that
/// must track that object's (possibly moving) anchor rather than a fixed
/// camera-space position.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRef {
    pub object: String,
    pub point: Point3<f64>,
}

/// One timestamped alignment anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalAnchor {
    /// Frame index this anchor takes effect at.
    pub tstamp: u64,
    /// `"simple"`, `"rigid"`, or `"ditto"` (unresolved copy of previous).
    pub mode: String,
    /// Keypoints in the object frame; empty exactly when mode is ditto.
    pub points: Vec<Point3<f64>>,
    pub anchor_ref: Option<AnchorRef>,
}

impl FunctionalAnchor {
    pub fn is_ditto(&self) -> bool {
        self.mode == MODE_DITTO
    }
}

/// Annotation attached to one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAnnotation {
    pub category: String,
    pub gripped: bool,
    pub gripper_keypoint: Option<Vec<Point3<f64>>>,
    pub functionals: Vec<FunctionalAnchor>,
}

/// A parsed `annotation.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub objects: BTreeMap<String, ObjectAnnotation>,
    pub other_foreground_objects: Vec<String>,
}

impl ObjectAnnotation {
    /// The anchor segment containing frame `t` and the interpolation
    /// fraction within it.
    ///
    /// Before the first timestamp the first anchor is held (`s = 0`);
    /// after the last, the last anchor is held. Between consecutive
    /// timestamps `t_i ≤ t < t_{i+1}` the fraction is
    /// `(t − t_i)/(t_{i+1} − t_i)`. Requires at least one functional
    /// (guaranteed for parsed annotations).
    pub fn keypoints_at(&self, t: f64) -> (&FunctionalAnchor, &FunctionalAnchor, f64) {
        let (i, j, s) = self.segment_indices_at(t);
        (&self.functionals[i], &self.functionals[j], s)
    }

    /// Index form of [`Self::keypoints_at`], for callers that keep
    /// per-anchor data (like solved alignments) in parallel arrays.
    pub fn segment_indices_at(&self, t: f64) -> (usize, usize, f64) {
        assert!(!self.functionals.is_empty(), "segment lookup on empty functionals");
        if t <= self.functionals[0].tstamp as f64 {
            return (0, 0, 0.0);
        }
        for (i, w) in self.functionals.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if t < b.tstamp as f64 {
                let s = (t - a.tstamp as f64) / (b.tstamp as f64 - a.tstamp as f64);
                return (i, i + 1, s);
            }
        }
        let last = self.functionals.len() - 1;
        (last, last, 0.0)
    }
}

impl Annotation {
    /// Parse and validate from a JSON value. Schema violations carry the
    /// path to the offending field.
    pub fn from_value(root: &Value) -> Result<Annotation> {
        let map = expect_object(root, "$")?;
        reject_unknown(map, &["objects", "other_foreground_objects"], "$")?;
        let objects_val = map
            .get("objects")
            .ok_or_else(|| err("$", "missing field 'objects'"))?;
        let objects_map = expect_object(objects_val, "objects")?;
        let mut objects = BTreeMap::new();
        for (name, obj_val) in objects_map {
            let path = format!("objects.{name}");
            objects.insert(name.clone(), parse_object(obj_val, &path)?);
        }
        let other_foreground_objects = match map.get("other_foreground_objects") {
            None => Vec::new(),
            Some(v) => {
                let arr = expect_array(v, "other_foreground_objects")?;
                arr.iter()
                    .enumerate()
                    .map(|(i, s)| {
                        expect_string(s, &format!("other_foreground_objects[{i}]"))
                            .map(str::to_owned)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Annotation { objects, other_foreground_objects })
    }

    /// Serialize back to the on-disk JSON layout.
    pub fn to_value(&self) -> Value {
        let mut objects = Map::new();
        for (name, obj) in &self.objects {
            let mut o = Map::new();
            o.insert("category".into(), json!(obj.category));
            o.insert("gripped".into(), json!(obj.gripped));
            if let Some(gk) = &obj.gripper_keypoint {
                o.insert(
                    "gripper_keypoint".into(),
                    Value::Array(gk.iter().map(point_to_value).collect()),
                );
            }
            let functionals: Vec<Value> = obj
                .functionals
                .iter()
                .map(|f| {
                    let keypoints = if f.is_ditto() {
                        json!("ditto")
                    } else {
                        let mut k = Map::new();
                        k.insert("mode".into(), json!(f.mode));
                        k.insert(
                            "points".into(),
                            Value::Array(f.points.iter().map(point_to_value).collect()),
                        );
                        if let Some(a) = &f.anchor_ref {
                            k.insert(
                                "anchor_ref".into(),
                                json!({"object": a.object, "point": point_to_value(&a.point)}),
                            );
                        }
                        Value::Object(k)
                    };
                    json!({"tstamp": f.tstamp, "keypoints": keypoints})
                })
                .collect();
            o.insert("functionals".into(), Value::Array(functionals));
            objects.insert(name.clone(), Value::Object(o));
        }
        json!({
            "objects": Value::Object(objects),
            "other_foreground_objects": self.other_foreground_objects,
        })
    }
}

fn point_to_value(p: &Point3<f64>) -> Value {
    json!([p.x, p.y, p.z])
}

fn err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::validation(format!("{path}: {msg}"))
}

fn expect_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected a JSON object"))
}

fn expect_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected a JSON array"))
}

fn expect_string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| err(path, "expected a string"))
}

fn expect_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| err(path, "expected a boolean"))
}

fn expect_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| err(path, "expected a non-negative integer"))
}

fn expect_finite(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| err(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(err(path, "expected a finite number"));
    }
    Ok(x)
}

fn expect_point(v: &Value, path: &str) -> Result<Point3<f64>> {
    let arr = expect_array(v, path)?;
    if arr.len() != 3 {
        return Err(err(path, format!("expected 3 coordinates, got {}", arr.len())));
    }
    Ok(Point3::new(
        expect_finite(&arr[0], &format!("{path}[0]"))?,
        expect_finite(&arr[1], &format!("{path}[1]"))?,
        expect_finite(&arr[2], &format!("{path}[2]"))?,
    ))
}

fn expect_points(v: &Value, path: &str) -> Result<Vec<Point3<f64>>> {
    let arr = expect_array(v, path)?;
    arr.iter()
        .enumerate()
        .map(|(i, p)| expect_point(p, &format!("{path}[{i}]")))
        .collect()
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(err(&format!("{path}.{key}"), "unknown field"));
        }
    }
    Ok(())
}

fn parse_object(v: &Value, path: &str) -> Result<ObjectAnnotation> {
    let map = expect_object(v, path)?;
    reject_unknown(map, &["category", "gripped", "gripper_keypoint", "functionals"], path)?;
    let category = expect_string(
        map.get("category").ok_or_else(|| err(path, "missing field 'category'"))?,
        &format!("{path}.category"),
    )?
    .to_owned();
    if category.is_empty() {
        return Err(err(&format!("{path}.category"), "must be non-empty"));
    }
    let gripped = expect_bool(
        map.get("gripped").ok_or_else(|| err(path, "missing field 'gripped'"))?,
        &format!("{path}.gripped"),
    )?;
    let gripper_keypoint = map
        .get("gripper_keypoint")
        .map(|v| expect_points(v, &format!("{path}.gripper_keypoint")))
        .transpose()?;
    if gripped && gripper_keypoint.as_ref().is_none_or(Vec::is_empty) {
        return Err(err(
            &format!("{path}.gripper_keypoint"),
            "required and non-empty when 'gripped' is true",
        ));
    }
    let functionals_val =
        map.get("functionals").ok_or_else(|| err(path, "missing field 'functionals'"))?;
    let functionals_arr = expect_array(functionals_val, &format!("{path}.functionals"))?;
    if functionals_arr.is_empty() {
        return Err(err(&format!("{path}.functionals"), "must contain at least one entry"));
    }
    let mut functionals = Vec::with_capacity(functionals_arr.len());
    for (i, f) in functionals_arr.iter().enumerate() {
        functionals.push(parse_functional(f, &format!("{path}.functionals[{i}]"))?);
    }
    for w in functionals.windows(2) {
        if w[1].tstamp <= w[0].tstamp {
            return Err(err(
                &format!("{path}.functionals"),
                format!(
                    "tstamps must be strictly increasing ({} then {})",
                    w[0].tstamp, w[1].tstamp
                ),
            ));
        }
    }
    Ok(ObjectAnnotation { category, gripped, gripper_keypoint, functionals })
}

fn parse_functional(v: &Value, path: &str) -> Result<FunctionalAnchor> {
    let map = expect_object(v, path)?;
    reject_unknown(map, &["tstamp", "keypoints"], path)?;
    let tstamp = expect_u64(
        map.get("tstamp").ok_or_else(|| err(path, "missing field 'tstamp'"))?,
        &format!("{path}.tstamp"),
    )?;
    let keypoints = map.get("keypoints").ok_or_else(|| err(path, "missing field 'keypoints'"))?;
    let kp_path = format!("{path}.keypoints");
    match keypoints {
        Value::String(s) if s == MODE_DITTO => Ok(FunctionalAnchor {
            tstamp,
            mode: MODE_DITTO.to_owned(),
            points: Vec::new(),
            anchor_ref: None,
        }),
        Value::String(other) => {
            Err(err(&kp_path, format!("expected \"ditto\" or an object, got \"{other}\"")))
        }
        Value::Object(kmap) => {
            reject_unknown(kmap, &["mode", "points", "anchor_ref"], &kp_path)?;
            let mode = expect_string(
                kmap.get("mode").ok_or_else(|| err(&kp_path, "missing field 'mode'"))?,
                &format!("{kp_path}.mode"),
            )?
            .to_owned();
            if !KNOWN_MODES.contains(&mode.as_str()) {
                return Err(err(&format!("{kp_path}.mode"), format!("unknown mode \"{mode}\"")));
            }
            let points = expect_points(
                kmap.get("points").ok_or_else(|| err(&kp_path, "missing field 'points'"))?,
                &format!("{kp_path}.points"),
            )?;
            if points.is_empty() {
                return Err(err(&format!("{kp_path}.points"), "must contain at least one point"));
            }
            let anchor_ref = match kmap.get("anchor_ref") {
                None => None,
                Some(a) => {
                    let a_path = format!("{kp_path}.anchor_ref");
                    let amap = expect_object(a, &a_path)?;
                    reject_unknown(amap, &["object", "point"], &a_path)?;
                    let object = expect_string(
                        amap.get("object")
                            .ok_or_else(|| err(&a_path, "missing field 'object'"))?,
                        &format!("{a_path}.object"),
                    )?
                    .to_owned();
                    let point = expect_point(
                        amap.get("point").ok_or_else(|| err(&a_path, "missing field 'point'"))?,
                        &format!("{a_path}.point"),
                    )?;
                    Some(AnchorRef { object, point })
                }
            };
            Ok(FunctionalAnchor { tstamp, mode, points, anchor_ref })
        }
        _ => Err(err(&kp_path, "expected \"ditto\" or an object")),
    }
}

/// Parse + validate an annotation file.
pub fn parse_annotation(path: &Path) -> Result<Annotation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::format("annotation", path, format!("invalid JSON: {e}")))?;
    Annotation::from_value(&value)
}

/// Replace every ditto entry with a copy of the previous (resolved)
/// entry's keypoint payload, keeping its own timestamp. Errors if an
/// object's first functional is a ditto. Idempotent.
pub fn resolve_ditto(ann: &Annotation) -> Result<Annotation> {
    let mut out = ann.clone();
    for (name, obj) in &mut out.objects {
        let mut prev: Option<FunctionalAnchor> = None;
        for (i, f) in obj.functionals.iter_mut().enumerate() {
            if f.is_ditto() {
                let Some(p) = &prev else {
                    return Err(err(
                        &format!("objects.{name}.functionals[{i}].keypoints"),
                        "\"ditto\" needs a previous entry to copy",
                    ));
                };
                f.mode = p.mode.clone();
                f.points = p.points.clone();
                f.anchor_ref = p.anchor_ref.clone();
            }
            prev = Some(f.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The reference example: one gripped mug with three functionals
    /// (the middle one a ditto) and one other foreground object.
    pub(crate) const EXAMPLE: &str = r#"{
        "objects": {
            "mug_pink": {
                "category": "mug",
                "gripped": true,
                "gripper_keypoint": [
                    [-0.03592510148882866, 0.10562200099229813, 0.023572899401187897]
                ],
                "functionals": [
                    {
                        "tstamp": 0,
                        "keypoints": {
                            "mode": "simple",
                            "points": [
                                [-0.001282079960219562, 0.0028379999566823244, 0.003494200063869357]
                            ]
                        }
                    },
                    {
                        "tstamp": 100,
                        "keypoints": "ditto"
                    },
                    {
                        "tstamp": 115,
                        "keypoints": {
                            "mode": "simple",
                            "points": [
                                [-0.0020681601017713547, 0.08404900133609772, -0.049066800624132156]
                            ]
                        }
                    }
                ]
            }
        },
        "other_foreground_objects": ["tree"]
    }"#;

    fn example() -> Annotation {
        Annotation::from_value(&serde_json::from_str(EXAMPLE).unwrap()).unwrap()
    }

    #[test]
    fn example_parses_with_exact_values() {
        let ann = example();
        assert_eq!(ann.objects.len(), 1);
        assert_eq!(ann.other_foreground_objects, vec!["tree".to_string()]);
        let mug = &ann.objects["mug_pink"];
        assert_eq!(mug.category, "mug");
        assert!(mug.gripped);
        let gk = mug.gripper_keypoint.as_ref().unwrap();
        assert_eq!(gk.len(), 1);
        assert_eq!(
            gk[0],
            Point3::new(-0.03592510148882866, 0.10562200099229813, 0.023572899401187897)
        );
        assert_eq!(mug.functionals.len(), 3);
        let tstamps: Vec<u64> = mug.functionals.iter().map(|f| f.tstamp).collect();
        assert_eq!(tstamps, vec![0, 100, 115]);
        assert_eq!(mug.functionals[0].mode, MODE_SIMPLE);
        assert!(mug.functionals[1].is_ditto());
        assert!(mug.functionals[1].points.is_empty());
        assert_eq!(mug.functionals[2].mode, MODE_SIMPLE);
        assert_eq!(
            mug.functionals[2].points[0],
            Point3::new(-0.0020681601017713547, 0.08404900133609772, -0.049066800624132156)
        );
    }

    #[test]
    fn ditto_resolution_copies_previous_entry() {
        let resolved = resolve_ditto(&example()).unwrap();
        let mug = &resolved.objects["mug_pink"];
        assert_eq!(mug.functionals[1].tstamp, 100);
        assert_eq!(mug.functionals[1].mode, mug.functionals[0].mode);
        assert_eq!(mug.functionals[1].points, mug.functionals[0].points);
        // Idempotent, and a ditto-free annotation passes through unchanged.
        let twice = resolve_ditto(&resolved).unwrap();
        assert_eq!(twice, resolved);
    }

    #[test]
    fn interpolation_fraction_matches_example() {
        let resolved = resolve_ditto(&example()).unwrap();
        let mug = &resolved.objects["mug_pink"];
        let (a, b, s) = mug.keypoints_at(110.0);
        assert_eq!((a.tstamp, b.tstamp), (100, 115));
        assert_eq!(s, 2.0 / 3.0);
        // Held before the first and after the last timestamp.
        let (a, b, s) = mug.keypoints_at(0.0);
        assert_eq!((a.tstamp, b.tstamp, s), (0, 0, 0.0));
        let (a, b, s) = mug.keypoints_at(500.0);
        assert_eq!((a.tstamp, b.tstamp, s), (115, 115, 0.0));
        // Segment boundary lands at the start of the next segment.
        let (a, b, s) = mug.keypoints_at(100.0);
        assert_eq!((a.tstamp, b.tstamp, s), (100, 115, 0.0));
        let (a, b, s) = mug.keypoints_at(50.0);
        assert_eq!((a.tstamp, b.tstamp, s), (0, 100, 0.5));
    }

    #[test]
    fn fraction_steps_are_bounded_within_segments() {
        let resolved = resolve_ditto(&example()).unwrap();
        let mug = &resolved.objects["mug_pink"];
        for t in 0..200u64 {
            let (a0, b0, s0) = mug.keypoints_at(t as f64);
            let (a1, b1, s1) = mug.keypoints_at((t + 1) as f64);
            if (a0.tstamp, b0.tstamp) == (a1.tstamp, b1.tstamp) && a0.tstamp != b0.tstamp {
                let bound = 1.0 / (b0.tstamp - a0.tstamp) as f64;
                assert!((s1 - s0).abs() <= bound + 1e-12, "jump at t={t}");
            }
        }
    }

    #[test]
    fn equal_tstamps_are_rejected() {
        let text = EXAMPLE.replace("\"tstamp\": 115", "\"tstamp\": 100");
        let errmsg = Annotation::from_value(&serde_json::from_str(&text).unwrap())
            .unwrap_err()
            .to_string();
        assert!(errmsg.contains("objects.mug_pink.functionals"), "{errmsg}");
        assert!(errmsg.contains("strictly increasing"), "{errmsg}");
    }

    #[test]
    fn gripped_requires_gripper_keypoint() {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        v["objects"]["mug_pink"]
            .as_object_mut()
            .unwrap()
            .remove("gripper_keypoint");
        let errmsg = Annotation::from_value(&v).unwrap_err().to_string();
        assert!(errmsg.contains("objects.mug_pink.gripper_keypoint"), "{errmsg}");
    }

    #[test]
    fn unknown_fields_are_rejected_with_path() {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        v["objects"]["mug_pink"]["color"] = json!("pink");
        let errmsg = Annotation::from_value(&v).unwrap_err().to_string();
        assert!(errmsg.contains("objects.mug_pink.color"), "{errmsg}");
        assert!(errmsg.contains("unknown field"), "{errmsg}");
    }

    #[test]
    fn unknown_mode_is_rejected_with_path() {
        let text = EXAMPLE.replacen("\"simple\"", "\"fancy\"", 1);
        let errmsg = Annotation::from_value(&serde_json::from_str(&text).unwrap())
            .unwrap_err()
            .to_string();
        assert!(
            errmsg.contains("objects.mug_pink.functionals[0].keypoints.mode"),
            "{errmsg}"
        );
        assert!(errmsg.contains("fancy"), "{errmsg}");
    }

    #[test]
    fn leading_ditto_is_an_error() {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        let functionals = v["objects"]["mug_pink"]["functionals"].as_array_mut().unwrap();
        functionals[0]["keypoints"] = json!("ditto");
        let ann = Annotation::from_value(&v).unwrap();
        let errmsg = resolve_ditto(&ann).unwrap_err().to_string();
        assert!(errmsg.contains("objects.mug_pink.functionals[0]"), "{errmsg}");
    }

    #[test]
    fn anchor_ref_parses_and_validates() {
        let mut v: Value = serde_json::from_str(EXAMPLE).unwrap();
        v["objects"]["mug_pink"]["functionals"][2]["keypoints"]["anchor_ref"] =
            json!({"object": "tree", "point": [0.1, 0.2, 0.3]});
        let ann = Annotation::from_value(&v).unwrap();
        let a = ann.objects["mug_pink"].functionals[2].anchor_ref.as_ref().unwrap();
        assert_eq!(a.object, "tree");
        assert_eq!(a.point, Point3::new(0.1, 0.2, 0.3));
        // Unknown fields inside anchor_ref are rejected too.
        v["objects"]["mug_pink"]["functionals"][2]["keypoints"]["anchor_ref"]["frame"] =
            json!("world");
        let errmsg = Annotation::from_value(&v).unwrap_err().to_string();
        assert!(errmsg.contains("anchor_ref.frame"), "{errmsg}");
    }

    #[test]
    fn missing_fields_report_paths() {
        let cases: &[(&str, &str, &str)] = &[
            ("\"category\": \"mug\",", "", "category"),
            ("\"tstamp\": 0,", "", "tstamp"),
            ("\"mode\": \"simple\",", "", "mode"),
        ];
        for (needle, replacement, field) in cases {
            let text = EXAMPLE.replacen(needle, replacement, 1);
            let errmsg = Annotation::from_value(&serde_json::from_str(&text).unwrap())
                .unwrap_err()
                .to_string();
            assert!(errmsg.contains(field), "removing {field}: {errmsg}");
        }
    }

    #[test]
    fn roundtrips_through_to_value() {
        let ann = example();
        let back = Annotation::from_value(&ann.to_value()).unwrap();
        assert_eq!(back, ann);
        let resolved = resolve_ditto(&ann).unwrap();
        let back = Annotation::from_value(&resolved.to_value()).unwrap();
        assert_eq!(back, resolved);
    }

    #[test]
    fn file_level_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        assert!(matches!(parse_annotation(&missing), Err(Error::Io { .. })));
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "{not json").unwrap();
        assert!(matches!(parse_annotation(&bad), Err(Error::Format { .. })));
        let good = dir.path().join("ok.json");
        std::fs::write(&good, EXAMPLE).unwrap();
        assert_eq!(parse_annotation(&good).unwrap(), example());
    }
}
