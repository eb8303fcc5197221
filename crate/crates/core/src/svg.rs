//! Static point-cloud pictures of a Floyd chart. Presentation only: the
//! positions are a heuristic, but numbers are printed with 6 decimals so the
//! output is reproducible.

use std::fmt::Write;

use serde::Serialize;

use crate::error::Result;
use crate::floyd::{dijkstra_in_ball, FloydChart};
use crate::graph::Ball;
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CloudPoint {
    pub vertex: Word,
    pub depth: u32,
    /// Floyd distance to the basepoint.
    pub delta: f64,
    pub angle: f64,
    /// `delta` over the total mass of `f`, so the boundary sits near 1.
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointCloud {
    pub graph: String,
    pub floyd: String,
    pub radius: u32,
    pub points: Vec<CloudPoint>,
    pub edges: Vec<(usize, usize)>,
}

/// Lays out `ball(v, R)`: the radial coordinate is the Floyd distance to `v`,
/// the angle comes from a breadth-first tree where every leaf gets an equal
/// share of the circle and inner vertices sit mid-way over their leaves.
pub fn point_cloud(chart: &FloydChart, radius: u32, max_vertices: usize) -> Result<PointCloud> {
    let ball = Ball::bounded(chart.graph().as_ref(), chart.basepoint(), radius, max_vertices)?;
    let n = ball.len();
    let delta = dijkstra_in_ball(chart, &ball, 0);

    // parent = smallest index one step closer
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = ball.adj[i].iter().copied().filter(|&j| ball.dist[j] + 1 == ball.dist[i]).min().expect("bfs parent");
        children[p].push(i);
    }
    for c in &mut children {
        c.sort_unstable();
    }
    // leaf counts, deepest first (vertices are listed by distance)
    let mut leaves = vec![0usize; n];
    for i in (0..n).rev() {
        leaves[i] = if children[i].is_empty() { 1 } else { children[i].iter().map(|&c| leaves[c]).sum() };
    }
    let mut start = vec![0.0f64; n];
    let mut angle = vec![0.0f64; n];
    let share = std::f64::consts::TAU / leaves[0] as f64;
    for i in 0..n {
        angle[i] = start[i] + share * leaves[i] as f64 / 2.0;
        let mut s = start[i];
        for &c in &children[i] {
            start[c] = s;
            s += share * leaves[c] as f64;
        }
    }

    let f = chart.function();
    let mass = if f.is_summable() { f.tail(0) } else { delta.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE) };
    let points = (0..n)
        .map(|i| CloudPoint {
            vertex: ball.vertices[i].clone(),
            depth: ball.dist[i],
            delta: delta[i],
            angle: angle[i],
            rho: delta[i] / mass,
        })
        .collect();
    let mut edges = Vec::new();
    for (i, adj) in ball.adj.iter().enumerate() {
        for &j in adj {
            if i < j {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    Ok(PointCloud { graph: chart.graph().name(), floyd: f.to_string(), radius, points, edges })
}

impl PointCloud {
    fn xy(&self, i: usize, half: f64) -> (f64, f64) {
        let p = &self.points[i];
        let r = p.rho * (half - 10.0);
        (half + r * p.angle.cos(), half - r * p.angle.sin())
    }

    pub fn to_svg(&self, size: f64) -> String {
        let half = size / 2.0;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.6}" height="{size:.6}" viewBox="0 0 {size:.6} {size:.6}">"#);
        let _ = writeln!(s, "<title>{} / {} / R = {}</title>", self.graph, self.floyd, self.radius);
        let _ = writeln!(s, r##"<circle cx="{half:.6}" cy="{half:.6}" r="{:.6}" fill="none" stroke="#bbb"/>"##, half - 10.0);
        let _ = writeln!(s, r##"<g stroke="#456" stroke-width="0.500000">"##);
        for &(i, j) in &self.edges {
            let ((x1, y1), (x2, y2)) = (self.xy(i, half), self.xy(j, half));
            let _ = writeln!(s, r#"<line x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}"/>"#);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r##"<g fill="#c33">"##);
        for i in 0..self.points.len() {
            let (x, y) = self.xy(i, half);
            let r = if i == 0 { 3.0 } else { 1.5 };
            let _ = writeln!(s, r#"<circle cx="{x:.6}" cy="{y:.6}" r="{r:.6}"><title>{}</title></circle>"#, self.points[i].vertex);
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floyd::FloydFunction;
    use crate::graph::parse_graph;

    #[test]
    fn tree_cloud_stays_in_the_disc() {
        let chart = FloydChart::new(parse_graph("tree:3").unwrap(), FloydFunction::Geometric { lambda: 0.5 });
        let cloud = point_cloud(&chart, 4, 10_000).unwrap();
        assert_eq!(cloud.points[0].rho, 0.0);
        assert!(cloud.points.iter().all(|p| p.rho < 1.0 && (0.0..=std::f64::consts::TAU).contains(&p.angle)));
        // a tree ball has one edge fewer than vertices
        assert_eq!(cloud.edges.len() + 1, cloud.points.len());
        let svg = cloud.to_svg(400.0);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg, point_cloud(&chart, 4, 10_000).unwrap().to_svg(400.0));
    }

    #[test]
    fn line_points_sit_on_two_rays() {
        let chart = FloydChart::new(parse_graph("line").unwrap(), FloydFunction::Geometric { lambda: 0.5 });
        let cloud = point_cloud(&chart, 3, 100).unwrap();
        let mut angles: Vec<f64> = cloud.points[1..].iter().map(|p| p.angle).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        assert_eq!(angles.len(), 2);
    }
}
