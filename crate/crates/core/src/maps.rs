//! Named vertex maps between graphs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::word::Word;

type MapFn = dyn Fn(&Word) -> Word + Send + Sync;

#[derive(Clone)]
pub struct VertexMap {
    name: String,
    f: Arc<MapFn>,
}

impl VertexMap {
    pub fn new(name: impl Into<String>, f: impl Fn(&Word) -> Word + Send + Sync + 'static) -> Self {
        VertexMap { name: name.into(), f: Arc::new(f) }
    }

    pub fn apply(&self, v: &Word) -> Word {
        (self.f)(v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn identity() -> Self {
        Self::new("id", Word::clone)
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &VertexMap) -> VertexMap {
        let (a, b) = (self.f.clone(), inner.f.clone());
        VertexMap::new(format!("{}∘{}", self.name, inner.name), move |v| a(&b(v)))
    }

    /// Parses `id`, `shift:k`, `scale:k`, `halve`, `const:<word>`,
    /// `pad` and `parent`. Integer maps act coordinatewise; `pad` appends a zero
    /// coordinate and `parent` drops the last letter.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        let int = || arg.parse::<i32>().map_err(|_| Error::Parse(format!("map `{spec}` needs an integer")));
        Ok(match kind {
            "id" => Self::identity(),
            "shift" => {
                let k = int()?;
                Self::new(spec, move |v| v.as_slice().iter().map(|x| x + k).collect())
            }
            "scale" => {
                let k = int()?;
                Self::new(spec, move |v| v.as_slice().iter().map(|x| x * k).collect())
            }
            "double" => Self::new(spec, |v| v.as_slice().iter().map(|x| 2 * x).collect()),
            "halve" => Self::new(spec, |v| v.as_slice().iter().map(|x| x.div_euclid(2)).collect()),
            "const" => {
                let w: Word = arg.parse()?;
                Self::new(spec, move |_| w.clone())
            }
            "pad" => Self::new(spec, |v| v.as_slice().iter().copied().chain([0]).collect()),
            "parent" => Self::new(spec, |v| {
                let s = v.as_slice();
                Word::new(&s[..s.len().saturating_sub(1)])
            }),
            other => return Err(Error::Parse(format!("unknown map `{other}`"))),
        })
    }
}

impl fmt::Debug for VertexMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VertexMap({})", self.name)
    }
}
