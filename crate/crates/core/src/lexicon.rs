//! Word → representation tables.

use indexmap::IndexMap;

use crate::densecore::DensityMatrix;
use crate::error::{Error, Result};

/// An insertion-ordered map from surface form to a representation of fixed width.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon<T> {
    dim: usize,
    entries: IndexMap<String, T>,
}

pub type DensityLexicon = Lexicon<DensityMatrix>;
pub type VectorLexicon = Lexicon<Vec<f64>>;

/// Anything with a dimension a lexicon can check.
pub trait Dimensioned {
    fn dimension(&self) -> usize;
}

impl Dimensioned for DensityMatrix {
    fn dimension(&self) -> usize {
        self.dim()
    }
}

impl Dimensioned for Vec<f64> {
    fn dimension(&self) -> usize {
        self.len()
    }
}

impl<T: Dimensioned> Lexicon<T> {
    pub fn new(dim: usize) -> Self {
        Lexicon {
            dim,
            entries: IndexMap::new(),
        }
    }

    /// Inserts or replaces `word`.
    pub fn insert(&mut self, word: impl Into<String>, value: T) -> Result<()> {
        if value.dimension() != self.dim {
            return Err(Error::dims(self.dim, value.dimension()));
        }
        self.entries.insert(word.into(), value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&T> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &T)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// A loaded lexicon of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Representations {
    Density(DensityLexicon),
    Vector(VectorLexicon),
}

impl Representations {
    pub fn dim(&self) -> usize {
        match self {
            Representations::Density(l) => l.dim(),
            Representations::Vector(l) => l.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Representations::Density(l) => l.len(),
            Representations::Vector(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, word: &str) -> bool {
        match self {
            Representations::Density(l) => l.contains(word),
            Representations::Vector(l) => l.contains(word),
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(self, Representations::Density(_))
    }
}
