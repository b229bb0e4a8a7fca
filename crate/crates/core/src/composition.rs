//! Phrase composition over density matrices and vectors.
//!
//! Composed matrices stay unnormalized; consumers that need a density
//! matrix (similarity, entropy) normalize themselves.

use std::fmt;
use std::str::FromStr;

use crate::densecore::{matrix_sqrt_psd, DensityMatrix, DEFAULT_CLAMP_TOL};
use crate::error::{Error, Result};
use crate::lexicon::Representations;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Add,
    Mult,
    Tensor,
    /// `X^{1/2} Y X^{1/2}`; matrices only.
    Phaser,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Add, Method::Mult, Method::Tensor, Method::Phaser];

    pub fn name(self) -> &'static str {
        match self {
            Method::Add => "add",
            Method::Mult => "mult",
            Method::Tensor => "tensor",
            Method::Phaser => "phaser",
        }
    }

    pub fn supports_vectors(self) -> bool {
        self != Method::Phaser
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "add" => Ok(Method::Add),
            "mult" => Ok(Method::Mult),
            "tensor" => Ok(Method::Tensor),
            "phaser" => Ok(Method::Phaser),
            other => Err(Error::Config(format!("unknown composition method '{other}'"))),
        }
    }
}

/// A word or phrase meaning.
#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Density(DensityMatrix),
    Vector(Vec<f64>),
}

/// Composes functor `x` with argument `y`. The result is symmetric but not
/// trace-normalized.
pub fn compose_pair_dm(method: Method, x: &DensityMatrix, y: &DensityMatrix) -> Result<DensityMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::dims(format!("dimension {}", x.dim()), format!("dimension {}", y.dim())));
    }
    let (xm, ym) = (x.as_matrix(), y.as_matrix());
    let out = match method {
        Method::Add => xm + ym,
        Method::Mult => xm.component_mul(ym),
        Method::Tensor => xm * ym * xm,
        Method::Phaser => {
            let root = matrix_sqrt_psd(x, DEFAULT_CLAMP_TOL)?;
            let r = root.as_matrix();
            r * ym * r
        }
    };
    DensityMatrix::from_matrix((&out + out.transpose()) * 0.5)
}

pub fn compose_pair_vec(method: Method, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::dims(format!("length {}", x.len()), format!("length {}", y.len())));
    }
    Ok(match method {
        Method::Add => x.iter().zip(y).map(|(a, b)| a + b).collect(),
        Method::Mult => x.iter().zip(y).map(|(a, b)| a * b).collect(),
        Method::Tensor => {
            let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            x.iter().map(|a| dot * a).collect()
        }
        Method::Phaser => {
            return Err(Error::Config("phaser composition needs density matrices".into()));
        }
    })
}

pub fn compose_pair(method: Method, x: &Representation, y: &Representation) -> Result<Representation> {
    match (x, y) {
        (Representation::Density(a), Representation::Density(b)) => {
            compose_pair_dm(method, a, b).map(Representation::Density)
        }
        (Representation::Vector(a), Representation::Vector(b)) => {
            compose_pair_vec(method, a, b).map(Representation::Vector)
        }
        _ => Err(Error::Config("cannot compose a matrix with a vector".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Noun,
    Adj,
    Verb,
}

/// Sentence shapes found in the disambiguation data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Structure {
    /// subject verb
    Sv,
    /// subject verb object
    Svo,
    /// adjective subject verb adjective object
    Asvao,
}

impl Structure {
    pub fn arity(self) -> usize {
        match self {
            Structure::Sv => 2,
            Structure::Svo => 3,
            Structure::Asvao => 5,
        }
    }

    /// Position of the verb among the role-ordered tokens.
    pub fn verb_index(self) -> usize {
        match self {
            Structure::Sv | Structure::Svo => 1,
            Structure::Asvao => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::Sv => "SV",
            Structure::Svo => "SVO",
            Structure::Asvao => "ASVAO",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SV" => Ok(Structure::Sv),
            "SVO" => Ok(Structure::Svo),
            "ASVAO" => Ok(Structure::Asvao),
            other => Err(Error::Config(format!("unknown sentence structure '{other}'"))),
        }
    }
}

/// Which word of an SV pair acts as the functor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SvOrder {
    #[default]
    SubjectFirst,
    VerbFirst,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhraseTree {
    Leaf { word: String, role: Role },
    Apply { functor: Box<PhraseTree>, argument: Box<PhraseTree> },
}

impl PhraseTree {
    pub fn leaf(word: impl Into<String>, role: Role) -> Self {
        PhraseTree::Leaf {
            word: word.into(),
            role,
        }
    }

    pub fn apply(functor: PhraseTree, argument: PhraseTree) -> Self {
        PhraseTree::Apply {
            functor: Box::new(functor),
            argument: Box::new(argument),
        }
    }

    /// Canonical bracketing for role-ordered tokens:
    /// `SV: f(s, v)`, `SVO: f(s, f(v, o))`,
    /// `ASVAO: f(f(as, s), f(v, f(ao, o)))`.
    pub fn from_structure<S: AsRef<str>>(structure: Structure, tokens: &[S], sv_order: SvOrder) -> Result<Self> {
        if tokens.len() != structure.arity() {
            return Err(Error::Domain(format!(
                "{structure} phrase needs {} tokens, got {}",
                structure.arity(),
                tokens.len()
            )));
        }
        let t = |i: usize, role| PhraseTree::leaf(tokens[i].as_ref(), role);
        Ok(match structure {
            Structure::Sv => match sv_order {
                SvOrder::SubjectFirst => Self::apply(t(0, Role::Noun), t(1, Role::Verb)),
                SvOrder::VerbFirst => Self::apply(t(1, Role::Verb), t(0, Role::Noun)),
            },
            Structure::Svo => Self::apply(t(0, Role::Noun), Self::apply(t(1, Role::Verb), t(2, Role::Noun))),
            Structure::Asvao => Self::apply(
                Self::apply(t(0, Role::Adj), t(1, Role::Noun)),
                Self::apply(t(2, Role::Verb), Self::apply(t(3, Role::Adj), t(4, Role::Noun))),
            ),
        })
    }

    /// Leaf words, left to right.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PhraseTree::Leaf { word, .. } => out.push(word),
            PhraseTree::Apply { functor, argument } => {
                functor.collect_words(out);
                argument.collect_words(out);
            }
        }
    }
}

/// Post-order fold of `tree`, functor first at every node.
pub fn compose_phrase(tree: &PhraseTree, method: Method, lexicon: &Representations) -> Result<Representation> {
    if !lexicon.is_density() && !method.supports_vectors() {
        return Err(Error::Config(format!("{method} composition needs density matrices")));
    }
    match tree {
        PhraseTree::Leaf { word, .. } => lookup(lexicon, word),
        PhraseTree::Apply { functor, argument } => {
            let f = compose_phrase(functor, method, lexicon)?;
            let a = compose_phrase(argument, method, lexicon)?;
            compose_pair(method, &f, &a)
        }
    }
}

pub fn lookup(lexicon: &Representations, word: &str) -> Result<Representation> {
    let found = match lexicon {
        Representations::Density(l) => l.get(word).cloned().map(Representation::Density),
        Representations::Vector(l) => l.get(word).cloned().map(Representation::Vector),
    };
    found.ok_or_else(|| Error::MissingWord(word.to_string()))
}
