use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::features::{Vocabulary, PAD_ID, RESERVED_IDS};
use crate::{Error, Result};

/// Word vectors aligned with sequence ids: row 0 is OOV, row 1 is PAD and
/// row `i + 2` belongs to vocabulary term `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub rows: Array2<f64>,
    pub trainable: bool,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() < RESERVED_IDS {
            return Err(Error::invalid("embedding matrix needs the two reserved rows"));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("embedding entries must be finite"));
        }
        if rows.row(PAD_ID).iter().any(|&x| x != 0.0) {
            return Err(Error::invalid("PAD embedding row must be zero"));
        }
        Ok(EmbeddingMatrix {
            dim: rows.ncols(),
            rows,
            trainable: false,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }
}

/// Reads whitespace-delimited word vectors (`token v1 v2 ... vd` per line)
/// and keeps the rows of in-vocabulary tokens. Tokens missing from the file,
/// OOV and PAD are zero rows.
pub fn load_embeddings(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), vocab)
}

pub fn parse_embeddings<R: BufRead>(reader: R, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
    let mut rows: Option<Array2<f64>> = None;
    let mut filled = vec![false; vocab.len()];
    let mut dim = 0;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else {
            continue;
        };
        let values = parts
            .map(|s| s.parse::<f64>().map_err(|_| Error::parse(lineno, format!("not a number: {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(lineno, format!("non-finite value {v}")));
        }
        let matrix = match rows.as_mut() {
            None => {
                if values.is_empty() {
                    return Err(Error::parse(lineno, "expected at least one value"));
                }
                dim = values.len();
                rows.insert(Array2::zeros((vocab.len() + RESERVED_IDS, dim)))
            }
            Some(m) => {
                if values.len() != dim {
                    return Err(Error::parse(lineno, format!("expected {dim} values")));
                }
                m
            }
        };
        if let Some(id) = vocab.id(token) {
            if !filled[id] {
                filled[id] = true;
                for (dst, v) in matrix.row_mut(id + RESERVED_IDS).iter_mut().zip(values) {
                    *dst = v;
                }
            }
        }
    }
    let rows = rows.ok_or_else(|| Error::invalid("embedding file is empty"))?;
    Ok(EmbeddingMatrix {
        dim,
        rows,
        trainable: false,
    })
}

/// Writes vectors in the same text format, one token per line.
pub fn write_embeddings<W: Write>(vectors: &[(String, Vec<f64>)], mut out: W) -> std::io::Result<()> {
    for (token, v) in vectors {
        write!(out, "{token}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
