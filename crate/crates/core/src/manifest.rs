//! Run manifests: named graphs, groups, actions, Floyd functions and charts,
//! plus the suite selection, budget and seed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action::{build_action, GraphAction};
use crate::error::{Error, Result};
use crate::floyd::FloydFunction;
use crate::graph::{parse_graph, LocallyFiniteGraph};
use crate::group::parse_group;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Tiny,
    #[default]
    Default,
    Full,
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(Budget::Tiny),
            "default" => Ok(Budget::Default),
            "full" => Ok(Budget::Full),
            other => Err(Error::Parse(format!("unknown budget `{other}` (tiny, default, full)"))),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Budget::Tiny => "tiny",
            Budget::Default => "default",
            Budget::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    /// `left`, `translate:k`, `dihedral`, `perm` or `trivial`.
    pub kind: String,
    /// Name of an entry of `groups`.
    pub group: String,
    /// Name of an entry of `graphs`; empty for the Cayley graph of the group.
    #[serde(default)]
    pub graph: String,
    /// Basepoint, as a vertex word.
    pub x0: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub graph: String,
    pub floyd: String,
}

/// Optional radius schedules replacing the budget defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub karlsson_radii: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspectivity_radii: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback_radii: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msvarc_radius: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    pub graphs: BTreeMap<String, String>,
    pub groups: BTreeMap<String, String>,
    pub actions: BTreeMap<String, ActionSpec>,
    pub floyd: BTreeMap<String, String>,
    pub charts: BTreeMap<String, ChartSpec>,
    /// Charts of hyperbolic graphs, used by the accessibility suites.
    pub hyperbolic_charts: Vec<String>,
    /// Suite ids or groups to run; empty means all.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub overrides: Overrides,
}

fn map<const N: usize>(entries: [(&str, &str); N]) -> BTreeMap<String, String> {
    entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

impl Default for Manifest {
    fn default() -> Self {
        let action = |kind: &str, group: &str, graph: &str, x0: &str| ActionSpec {
            kind: kind.into(),
            group: group.into(),
            graph: graph.into(),
            x0: x0.into(),
        };
        let chart = |graph: &str, floyd: &str| ChartSpec { graph: graph.into(), floyd: floyd.into() };
        Manifest {
            seed: 20240917,
            budget: Budget::Default,
            graphs: map([("line", "line"), ("grid", "grid"), ("tree3", "tree:3"), ("tree4", "cayley:free:2")]),
            groups: map([("z", "zn:1"), ("z2", "zn:2"), ("f2", "free:2"), ("z2free3", "z2free:3")]),
            actions: [
                ("z-line", action("translate:1", "z", "line", "0")),
                ("z2-grid", action("translate:1", "z2", "grid", "0,0")),
                ("f2-tree", action("left", "f2", "tree4", "e")),
                ("z2free3-tree", action("left", "z2free3", "tree3", "e")),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            floyd: map([("geom", "geom:0.5"), ("pow", "pow:2"), ("flat", "const:1")]),
            charts: [
                ("line-geom", chart("line", "geom")),
                ("grid-geom", chart("grid", "geom")),
                ("tree3-geom", chart("tree3", "geom")),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            hyperbolic_charts: vec!["line-geom".into(), "tree3-geom".into()],
            suites: Vec::new(),
            overrides: Overrides::default(),
        }
    }
}

/// A manifest with every reference resolved.
#[derive(Clone)]
pub struct Resolved {
    pub manifest: Manifest,
    pub graphs: BTreeMap<String, Arc<dyn LocallyFiniteGraph>>,
    pub actions: BTreeMap<String, (Arc<dyn GraphAction>, crate::word::Word)>,
    pub floyd: BTreeMap<String, FloydFunction>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    /// Parses every entry and checks cross-references and budgets.
    pub fn resolve(&self) -> Result<Resolved> {
        let unresolved = |what: &str, name: &str, owner: &str| {
            Error::Parse(format!("{owner} refers to unknown {what} `{name}`"))
        };
        let mut graphs = BTreeMap::new();
        for (name, spec) in &self.graphs {
            graphs.insert(name.clone(), parse_graph(spec)?);
        }
        for (name, spec) in &self.groups {
            parse_group(spec).map_err(|e| Error::Parse(format!("group `{name}`: {e}")))?;
        }
        let mut floyd = BTreeMap::new();
        for (name, spec) in &self.floyd {
            let f = FloydFunction::parse(spec)?;
            floyd.insert(name.clone(), f);
        }
        let mut actions = BTreeMap::new();
        for (name, a) in &self.actions {
            let group = self.groups.get(&a.group).ok_or_else(|| unresolved("group", &a.group, name))?;
            let graph = if a.graph.is_empty() {
                ""
            } else {
                self.graphs.get(&a.graph).ok_or_else(|| unresolved("graph", &a.graph, name))?
            };
            let action = build_action(&a.kind, group, graph)?;
            let x0: crate::word::Word = a.x0.parse()?;
            if !action.graph().contains(&x0) {
                return Err(Error::Parse(format!("action `{name}`: basepoint {x0} is not a vertex")));
            }
            actions.insert(name.clone(), (action, x0));
        }
        for (name, c) in &self.charts {
            if !self.graphs.contains_key(&c.graph) {
                return Err(unresolved("graph", &c.graph, name));
            }
            if !self.floyd.contains_key(&c.floyd) {
                return Err(unresolved("Floyd function", &c.floyd, name));
            }
        }
        for name in &self.hyperbolic_charts {
            if !self.charts.contains_key(name) {
                return Err(unresolved("chart", name, "hyperbolic_charts"));
            }
        }
        let o = &self.overrides;
        for radii in [&o.karlsson_radii, &o.perspectivity_radii, &o.pullback_radii].into_iter().flatten() {
            if radii.is_empty() || radii.iter().any(|&r| r == 0) {
                return Err(Error::InvalidParameter("override radii must be positive and non-empty".into()));
            }
        }
        if o.msvarc_radius == Some(0) {
            return Err(Error::InvalidParameter("msvarc_radius must be positive".into()));
        }
        Ok(Resolved { manifest: self.clone(), graphs, actions, floyd })
    }
}
