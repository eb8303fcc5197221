use serde_json::Value;

use persp_web::{cloud_svg, defect_json, glue_json};

const SIERPINSKI_INTO_POINT: &str = r#"{
  "source": {"points": ["a", "b"], "closed_sets": [[], ["b"], ["a", "b"]]},
  "target": {"points": ["p"], "closed_sets": [[], ["p"]]},
  "table": [
    {"closure": ["b"], "value": []},
    {"closure": ["a", "b"], "value": ["p"]}
  ]
}"#;

#[test]
fn glueing_counts_closed_sets() {
    let v: Value = serde_json::from_str(&glue_json(SIERPINSKI_INTO_POINT).unwrap()).unwrap();
    // A ∪ B closed iff both parts closed and f(A) ⊆ B: (∅|∅), (∅|p), (b|∅), (b|p), (ab|p)
    assert_eq!(v["count"], 5);
    assert_eq!(v["space"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn glueing_rejects_bad_input() {
    assert!(glue_json("{}").is_err());
    let not_admissible = SIERPINSKI_INTO_POINT.replace(r#""value": ["p"]"#, r#""value": ["q"]"#);
    assert!(glue_json(&not_admissible).is_err());
}

#[test]
fn defect_curve_stays_under_the_bound() {
    let rows: Vec<Value> = serde_json::from_str(&defect_json("tree:3", "geom:0.5", 5, 50, 1).unwrap()).unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows.iter().filter(|r| r["defect"].is_number()) {
        assert!(r["defect"].as_f64().unwrap() <= r["bound"].as_f64().unwrap());
    }
}

#[test]
fn cloud_is_svg() {
    let s = cloud_svg("grid", "geom:0.5", 3, 300.0).unwrap();
    assert!(s.starts_with("<svg") && s.contains("<line"));
    assert!(cloud_svg("cayley:free:2", "geom:0.5", 40, 300.0).is_err());
}
