//! Browser bindings: a Floyd point cloud, a Karlsson defect curve and the
//! glueing of two finite spaces. The plain functions return JSON or SVG text
//! and are what the native tests exercise; the `#[wasm_bindgen]` wrappers only
//! turn errors into JS exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use persp_core::floyd::{karlsson_bound, karlsson_defect, sample_avoiding_geodesics, FloydChart, FloydFunction};
use persp_core::graph::parse_graph;
use persp_core::report::{num, round_floats};
use persp_core::svg::point_cloud;
use persp_core::topo::{glue, AdmissibleMap, AdmissibleMapJson, FinSpace, FinSpaceJson};

/// Keeps the page responsive on branching graphs.
const MAX_VERTICES: usize = 6_000;

fn chart(graph: &str, f: &str) -> Result<FloydChart, String> {
    let g = parse_graph(graph).map_err(|e| e.to_string())?;
    let f = FloydFunction::parse(f).map_err(|e| e.to_string())?;
    Ok(FloydChart::new(g, f))
}

/// SVG of `ball(v, R)` laid out by Floyd distance to the basepoint.
pub fn cloud_svg(graph: &str, f: &str, radius: u32, size: f64) -> Result<String, String> {
    let c = chart(graph, f)?;
    let cloud = point_cloud(&c, radius, MAX_VERTICES).map_err(|e| e.to_string())?;
    Ok(cloud.to_svg(size))
}

/// `[{radius, defect, bound, pairs}]` for radii `1..=max_radius`.
pub fn defect_json(graph: &str, f: &str, max_radius: u32, pairs: usize, seed: u64) -> Result<String, String> {
    let c = chart(graph, f)?;
    let mut rows = Vec::new();
    for r in 1..=max_radius {
        let sample = sample_avoiding_geodesics(&c, r, 2, pairs, seed + u64::from(r));
        let defect = karlsson_defect(&c, &sample).ok();
        rows.push(json!({
            "radius": r,
            "pairs": sample.len(),
            "defect": defect.map(num),
            "bound": num(karlsson_bound(c.function(), r)),
        }));
    }
    Ok(round_floats(json!(rows)).to_string())
}

/// Glued space of an admissible map given as
/// `{"source": space, "target": space, "table": [{"closure": [...], "value": [...]}]}`.
pub fn glue_json(input: &str) -> Result<String, String> {
    let j: AdmissibleMapJson = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let map = AdmissibleMap::try_from(&j).map_err(|e| e.to_string())?;
    let base = FinSpace::try_from(&j.source).map_err(|e| e.to_string())?;
    let boundary = FinSpace::try_from(&j.target).map_err(|e| e.to_string())?;
    let glued = glue(&base, &boundary, &map).map_err(|e| e.to_string())?;
    let space = FinSpaceJson::from(glued.space());
    Ok(json!({"count": space.closed_sets.len(), "space": space}).to_string())
}

#[wasm_bindgen]
pub fn point_cloud_svg(graph: &str, f: &str, radius: u32) -> Result<String, JsError> {
    cloud_svg(graph, f, radius, 520.0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn defect_curve(graph: &str, f: &str, max_radius: u32) -> Result<String, JsError> {
    defect_json(graph, f, max_radius, 200, 20240917).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn glue_space(input: &str) -> Result<String, JsError> {
    glue_json(input).map_err(|e| JsError::new(&e))
}
