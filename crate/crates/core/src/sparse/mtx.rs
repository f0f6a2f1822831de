//! Matrix Market coordinate format (ASCII, 1-based indices).
//!
//! The reader accepts `real`, `integer` and `pattern` fields with `general`,
//! `symmetric` or `skew-symmetric` symmetry. The writer always emits
//! `coordinate real general` with round-trip precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CsrMatrix, SparseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> SparseError {
    SparseError::MatrixMarket { line, message: msg.into() }
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<CsrMatrix, SparseError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad header `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format `{}`", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((nrows, ncols, nnz)) = size else {
            if parts.len() != 3 {
                return Err(parse_err(lineno, "expected `rows cols entries`"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lineno, e.to_string()));
            let dims = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
            triplets.reserve(dims.2);
            size = Some(dims);
            continue;
        };
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if parts.len() != expected {
            return Err(parse_err(lineno, format!("expected {expected} tokens")));
        }
        let idx = |s: &str, bound: usize| -> Result<usize, SparseError> {
            let i = s.parse::<usize>().map_err(|e| parse_err(lineno, e.to_string()))?;
            if i == 0 || i > bound {
                return Err(parse_err(lineno, format!("index {i} outside 1..={bound}")));
            }
            Ok(i - 1)
        };
        let r = idx(parts[0], nrows)?;
        let c = idx(parts[1], ncols)?;
        let v = match field {
            Field::Pattern => 1.0,
            _ => parts[2].parse::<f64>().map_err(|e| parse_err(lineno, e.to_string()))?,
        };
        triplets.push((r, c, v));
        if r != c {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((c, r, v)),
                Symmetry::SkewSymmetric => triplets.push((c, r, -v)),
            }
        }
        if triplets.len() > 2 * nnz {
            return Err(parse_err(lineno, "more entries than declared"));
        }
    }
    let (nrows, ncols, _) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

pub fn write_matrix_market<W: Write>(a: &CsrMatrix, writer: W) -> Result<(), SparseError> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (r, c, v) in a.iter() {
        // `{:?}` on f64 prints the shortest representation that round-trips
        writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CsrMatrix, SparseError> {
    read_matrix_market(File::open(path)?)
}

pub fn write_matrix_market_file(a: &CsrMatrix, path: impl AsRef<Path>) -> Result<(), SparseError> {
    write_matrix_market(a, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_symmetric_and_expands() {
        let text =
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2.0\n2 1 -1\n2 2 2\n3 3 1e0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![2.0, -1.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn reads_pattern_and_skew() {
        let a = read_matrix_market("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n".as_bytes())
            .unwrap();
        assert_eq!(a.to_dense(), vec![0.0, 1.0, 1.0, 0.0]);
        let s = read_matrix_market("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n".as_bytes())
            .unwrap();
        assert_eq!(s.to_dense(), vec![0.0, -3.0, 3.0, 0.0]);
    }

    #[test]
    fn rejects_malformed_input() {
        for text in [
            "",
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
        ] {
            assert!(read_matrix_market(text.as_bytes()).is_err(), "{text:?}");
        }
    }

    #[test]
    fn file_roundtrip() {
        let a = CsrMatrix::tridiagonal(4, -1.0, 2.0, -1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market_file(&a, &path).unwrap();
        assert_eq!(read_matrix_market_file(&path).unwrap(), a);
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(entries in proptest::collection::vec((0usize..6, 0usize..5, -1e6f64..1e6), 0..25)) {
            let a = CsrMatrix::from_triplets(6, 5, &entries).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            prop_assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
        }
    }
}
