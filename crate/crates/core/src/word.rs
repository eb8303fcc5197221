use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::Error;

/// A short integer tuple used both as a graph vertex id and as a group element.
///
/// Ordering is lexicographic, which is the tie-break used wherever a
/// deterministic choice between vertices is needed.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub SmallVec<[i32; 4]>);

impl Word {
    pub fn new(letters: &[i32]) -> Self {
        Word(SmallVec::from_slice(letters))
    }

    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    pub fn scalar(value: i32) -> Self {
        Word::new(&[value])
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> i32 {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn push(&mut self, letter: i32) {
        self.0.push(letter)
    }
}

impl From<Vec<i32>> for Word {
    fn from(v: Vec<i32>) -> Self {
        Word(SmallVec::from_vec(v))
    }
}

impl FromIterator<i32> for Word {
    fn from_iter<T: IntoIterator<Item = i32>>(iter: T) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// Accepts `e`, `3`, `1,-2` and bracketed forms such as `[1,-2]` or `(1,-2)`.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']).trim();
        if t.is_empty() || t == "e" {
            return Ok(Word::empty());
        }
        t.split(',')
            .map(|p| p.trim().parse::<i32>().map_err(|_| Error::Parse(format!("bad word `{s}`"))))
            .collect()
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Vec::<i32>::deserialize(d).map(Word::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["e", "3", "1,-2", "0,1,0"] {
            assert_eq!(s.parse::<Word>().unwrap().to_string(), s);
        }
        assert_eq!("[4, 5]".parse::<Word>().unwrap(), Word::new(&[4, 5]));
        assert!("x".parse::<Word>().is_err());
    }

    #[test]
    fn lexicographic_order() {
        let mut v = vec![Word::new(&[1]), Word::new(&[0, 5]), Word::empty(), Word::new(&[0])];
        v.sort();
        assert_eq!(v, vec![Word::empty(), Word::new(&[0]), Word::new(&[0, 5]), Word::new(&[1])]);
    }

    #[test]
    fn json_round_trip() {
        let w = Word::new(&[3, -1]);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, "[3,-1]");
        assert_eq!(serde_json::from_str::<Word>(&s).unwrap(), w);
    }
}
