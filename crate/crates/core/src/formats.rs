//! On-disk formats.
//!
//! * DMAT: text; `DMAT1 V d`, then one line per word with `d·d` row-major
//!   entries written as shortest round-trip decimals.
//! * Vectors: word2vec text; `V n`, then `word f1 .. fn`.
//! * CEB1: little-endian binary contextual embeddings; magic `CEB1`, `u32`
//!   width `D`, then records of `u16` byte length, UTF-8 word and `D` `f32`s.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::densecore::DensityMatrix;
use crate::error::{Error, Result};
use crate::lexicon::{DensityLexicon, Representations, VectorLexicon};

pub const DMAT_MAGIC: &str = "DMAT1";
pub const CEB_MAGIC: &[u8; 4] = b"CEB1";

pub fn write_dmat<W: Write>(lexicon: &DensityLexicon, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{DMAT_MAGIC} {} {}", lexicon.len(), lexicon.dim())?;
    for (word, rho) in lexicon.iter() {
        out.write_all(word.as_bytes())?;
        for v in rho.to_row_major() {
            write!(out, " {v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_dmat<R: BufRead>(input: R, label: &str) -> Result<DensityLexicon> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(label, 1, "empty file"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != DMAT_MAGIC {
        return Err(Error::parse(label, 1, format!("expected '{DMAT_MAGIC} V d' header")));
    }
    let count: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(label, 1, "invalid word count"))?;
    let dim: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(label, 1, "invalid dimension"))?;

    let mut lexicon = DensityLexicon::new(dim);
    let mut entries = vec![0.0; dim * dim];
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let mut n = 0;
        for f in fields {
            if n == entries.len() {
                return Err(Error::parse(label, lineno, format!("more than {} entries", dim * dim)));
            }
            entries[n] = f
                .parse()
                .map_err(|_| Error::parse(label, lineno, format!("invalid number '{f}'")))?;
            n += 1;
        }
        if n != entries.len() {
            return Err(Error::parse(label, lineno, format!("expected {} entries, got {n}", dim * dim)));
        }
        let rho = DensityMatrix::from_row_major(dim, &entries)
            .map_err(|e| Error::parse(label, lineno, e.to_string()))?;
        lexicon.insert(word, rho)?;
    }
    if lexicon.len() != count {
        return Err(Error::parse(
            label,
            1,
            format!("header declares {count} words, found {}", lexicon.len()),
        ));
    }
    Ok(lexicon)
}

pub fn write_vectors<W: Write>(lexicon: &VectorLexicon, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{} {}", lexicon.len(), lexicon.dim())?;
    for (word, v) in lexicon.iter() {
        out.write_all(word.as_bytes())?;
        for x in v {
            write!(out, " {x}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_vectors<R: BufRead>(input: R, label: &str) -> Result<VectorLexicon> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(label, 1, "empty file"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parsed: Option<(usize, usize)> = match fields.as_slice() {
        [v, n] => v.parse().ok().zip(n.parse().ok()),
        _ => None,
    };
    let (count, dim) = parsed.ok_or_else(|| Error::parse(label, 1, "expected 'V n' header"))?;

    let mut lexicon = VectorLexicon::new(dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let v = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(label, lineno, format!("invalid number '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != dim {
            return Err(Error::parse(label, lineno, format!("expected {dim} values, got {}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(label, lineno, "non-finite value"));
        }
        lexicon.insert(word, v)?;
    }
    if lexicon.len() != count {
        return Err(Error::parse(
            label,
            1,
            format!("header declares {count} words, found {}", lexicon.len()),
        ));
    }
    Ok(lexicon)
}

/// Loads a lexicon, choosing the format from the first line.
pub fn read_representations(path: &Path) -> Result<Representations> {
    let label = path.display().to_string();
    let mut reader = BufReader::new(File::open(path)?);
    let is_dmat = reader.fill_buf()?.starts_with(DMAT_MAGIC.as_bytes());
    if is_dmat {
        Ok(Representations::Density(read_dmat(reader, &label)?))
    } else {
        Ok(Representations::Vector(read_vectors(reader, &label)?))
    }
}

pub fn write_representations<W: Write>(reps: &Representations, out: W) -> io::Result<()> {
    match reps {
        Representations::Density(l) => write_dmat(l, out),
        Representations::Vector(l) => write_vectors(l, out),
    }
}

/// Per-occurrence contextual embeddings, in corpus order.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualEmbeddingSet {
    dim: usize,
    records: Vec<(String, Vec<f64>)>,
}

impl ContextualEmbeddingSet {
    pub fn new(dim: usize) -> Self {
        ContextualEmbeddingSet {
            dim,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::dims(self.dim, vector.len()));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("contextual embedding".into()));
        }
        self.records.push((word.into(), vector));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(String, Vec<f64>)] {
        &self.records
    }
}

pub fn write_ceb<W: Write>(set: &ContextualEmbeddingSet, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(CEB_MAGIC)?;
    out.write_all(&(set.dim as u32).to_le_bytes())?;
    for (word, v) in &set.records {
        let len = u16::try_from(word.len())
            .map_err(|_| Error::Domain(format!("word longer than 65535 bytes: {word:.32}…")))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(word.as_bytes())?;
        for &x in v {
            out.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_ceb<R: Read>(input: R) -> Result<ContextualEmbeddingSet> {
    let mut reader = OffsetReader {
        inner: BufReader::new(input),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    reader.exact(&mut magic, "magic")?;
    if &magic != CEB_MAGIC {
        return Err(Error::Framing {
            offset: 0,
            message: format!("bad magic {magic:?}"),
        });
    }
    let mut word = [0u8; 4];
    reader.exact(&mut word, "dimension")?;
    let dim = u32::from_le_bytes(word) as usize;

    let mut set = ContextualEmbeddingSet::new(dim);
    let mut floats = vec![0u8; dim * 4];
    loop {
        let start = reader.offset;
        let mut len = [0u8; 2];
        match reader.inner.read(&mut len[..1])? {
            0 => break,
            _ => reader.offset += 1,
        }
        reader.exact(&mut len[1..], "record length")?;
        let mut bytes = vec![0u8; u16::from_le_bytes(len) as usize];
        reader.exact(&mut bytes, "word")?;
        let surface = String::from_utf8(bytes).map_err(|_| Error::Framing {
            offset: start + 2,
            message: "word is not valid UTF-8".into(),
        })?;
        reader.exact(&mut floats, "vector")?;
        let v: Vec<f64> = floats
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Framing {
                offset: start,
                message: "non-finite component".into(),
            });
        }
        set.records.push((surface, v));
    }
    Ok(set)
}

pub fn read_ceb_file(path: &Path) -> Result<ContextualEmbeddingSet> {
    read_ceb(File::open(path)?)
}

struct OffsetReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> OffsetReader<R> {
    fn exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Framing {
                offset: self.offset,
                message: format!("truncated {what}"),
            },
            _ => Error::Io(e),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }
}

/// Reads a one-word-per-line list, ignoring blank lines.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_string());
        }
    }
    Ok(words)
}
