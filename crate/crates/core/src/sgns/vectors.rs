//! word2vec text format: a `count dim` header followed by one
//! `word v1 ... vdim` row per word.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("vector table rows must have dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("duplicate word {0:?} in vector table")]
    DuplicateWord(String),
}

/// Read-only word → vector table.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f32>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        VectorTable {
            words: Vec::new(),
            index: HashMap::new(),
            dim,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<(), VectorError> {
        if vector.len() != self.dim {
            return Err(VectorError::Dimension {
                expected: self.dim,
                got: vector.len(),
            });
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            return Err(VectorError::DuplicateWord(word));
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for v in self.row(i) {
                write!(out, " {v:.6}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VectorError> {
        let path = path.as_ref();
        let io_err = |source| VectorError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        self.write(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    /// Parses word2vec text from `reader`; `path` is only used in errors.
    pub fn read<R: BufRead>(reader: R, path: &Path) -> Result<Self, VectorError> {
        let parse = |line: usize, msg: String| VectorError::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|source| VectorError::Io {
                path: path.to_path_buf(),
                source,
            })?,
            None => return Err(parse(1, "missing header".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => (c, d),
                _ => return Err(parse(1, format!("malformed header {header:?}"))),
            },
            _ => return Err(parse(1, format!("malformed header {header:?}"))),
        };
        let mut table = VectorTable::new(dim);
        let mut buf = Vec::with_capacity(dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|source| VectorError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line");
            buf.clear();
            for p in parts {
                let v: f32 = p
                    .parse()
                    .map_err(|_| parse(lineno, format!("bad component {p:?} for {word:?}")))?;
                buf.push(v);
            }
            if buf.len() != dim {
                return Err(parse(
                    lineno,
                    format!(
                        "row {word:?} has {} components, header says {dim}",
                        buf.len()
                    ),
                ));
            }
            table
                .push(word, &buf)
                .map_err(|e| parse(lineno, e.to_string()))?;
        }
        if table.len() != count {
            return Err(parse(
                1,
                format!("header announces {count} rows, found {}", table.len()),
            ));
        }
        Ok(table)
    }
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorTable, VectorError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| VectorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    VectorTable::read(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_str(s: &str) -> Result<VectorTable, VectorError> {
        VectorTable::read(s.as_bytes(), Path::new("mem.vec"))
    }

    #[test]
    fn round_trip_through_file() {
        let mut t = VectorTable::new(3);
        t.push("alpha", &[0.1234567, -2.0, 3.5e-7]).unwrap();
        t.push("beta", &[1.0, 0.0, -0.333_333_3]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.vec");
        t.save(&p).unwrap();
        let back = load_vectors(&p).unwrap();
        assert_eq!(back.words(), t.words());
        for w in t.words() {
            for (a, b) in t.get(w).unwrap().iter().zip(back.get(w).unwrap()) {
                assert!((a - b).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn row_arity_mismatch_names_line() {
        let err = read_str("2 3\nfoo 1 2 3\nbar 1 2\n").unwrap_err();
        match err {
            VectorError::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("bar"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            read_str("two 3\n"),
            Err(VectorError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_str(""),
            Err(VectorError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn count_mismatch() {
        assert!(read_str("3 2\na 1 2\nb 3 4\n").is_err());
    }

    #[test]
    fn external_format_with_exponents_and_trailing_space() {
        let t = read_str("2 2\nthe 1e-3 -4.5 \nof 0 2\n").unwrap();
        assert_eq!(t.get("the").unwrap(), &[1e-3, -4.5]);
        assert_eq!(t.dim(), 2);
    }
}
