use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linop::SymmetricOperator;

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymmetricOperator> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file), path)
}

/// Parse a `coordinate real symmetric` Matrix Market stream. `origin` is only
/// used to label parse errors.
pub fn read_matrix_market<R: BufRead>(reader: R, origin: &Path) -> Result<SymmetricOperator> {
    let fail = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        msg,
    };

    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(fail(1, "empty file".into())),
    };
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(fail(lineno, "header must start with %%MatrixMarket".into()));
    }
    if fields.len() != 5 {
        return Err(fail(lineno, format!("malformed header `{header}`")));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(fail(lineno, format!("only `matrix coordinate` is supported, got `{header}`")));
    }
    if fields[3] != "real" {
        return Err(fail(lineno, format!("only real fields are supported, got `{}`", fields[3])));
    }
    if fields[4] != "symmetric" {
        return Err(fail(
            lineno,
            format!("matrix must be declared symmetric, got `{}`", fields[4]),
        ));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(fail(lineno, format!("expected `rows cols nnz`, got `{trimmed}`")));
                }
                let parse = |t: &str| {
                    t.parse::<usize>()
                        .map_err(|e| fail(lineno, format!("bad size field `{t}`: {e}")))
                };
                let (rows, cols, nnz) = (parse(toks[0])?, parse(toks[1])?, parse(toks[2])?);
                if rows != cols {
                    return Err(fail(lineno, format!("symmetric matrix must be square, got {rows}x{cols}")));
                }
                if rows == 0 {
                    return Err(fail(lineno, "matrix dimension must be positive".into()));
                }
                size = Some((rows, nnz));
                triplets.reserve(nnz);
            }
            Some((n, nnz)) => {
                if triplets.len() == nnz {
                    return Err(fail(lineno, format!("more than the declared {nnz} entries")));
                }
                if toks.len() != 3 {
                    return Err(fail(lineno, format!("expected `i j value`, got `{trimmed}`")));
                }
                let index = |t: &str| -> Result<usize> {
                    let i = t
                        .parse::<usize>()
                        .map_err(|e| fail(lineno, format!("bad index `{t}`: {e}")))?;
                    if i == 0 || i > n {
                        return Err(fail(lineno, format!("index {i} out of bounds 1..={n}")));
                    }
                    Ok(i - 1)
                };
                let (i, j) = (index(toks[0])?, index(toks[1])?);
                if j > i {
                    return Err(fail(
                        lineno,
                        format!("entry ({}, {}) lies above the diagonal", i + 1, j + 1),
                    ));
                }
                let v = toks[2]
                    .parse::<f64>()
                    .map_err(|e| fail(lineno, format!("bad value `{}`: {e}", toks[2])))?;
                triplets.push((i, j, v));
            }
        }
    }

    let (n, nnz) = size.ok_or_else(|| fail(lineno + 1, "missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(fail(
            0,
            format!("declared {nnz} entries but found {}", triplets.len()),
        ));
    }
    SymmetricOperator::sparse(n, &triplets)
}

/// Write the lower triangle with 17 significant digits, which round-trips
/// every `f64` exactly.
pub fn write_matrix_market<W: Write>(op: &SymmetricOperator, mut out: W) -> Result<()> {
    let trip = op.lower_triplets()?;
    let n = crate::linop::LinearMap::dim(op);
    writeln!(out, "{HEADER}")?;
    writeln!(out, "% generated by spam-core")?;
    writeln!(out, "{n} {n} {}", trip.len())?;
    for (i, j, v) in trip {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SymmetricOperator> {
        read_matrix_market(text.as_bytes(), Path::new("inline.mtx"))
    }

    #[test]
    fn small_example() {
        let op = parse("%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 3.0\n2 1 1.5\n").unwrap();
        let m = op.to_dense().unwrap();
        assert_eq!(m.as_slice(), &[3.0, 1.5, 1.5, 0.0]);
        assert_eq!(op.nnz().unwrap(), 3);
    }

    #[test]
    fn duplicates_summed() {
        let op = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n1 1 2.0\n2 2 1.0\n").unwrap();
        assert_eq!(op.to_dense().unwrap()[(0, 0)], 3.0);
    }

    fn err_line(text: &str) -> usize {
        match parse(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(err_line("%%MatrixMarket matrix array real symmetric\n"), 1);
        assert_eq!(err_line("%%MatrixMarket matrix coordinate real general\n2 2 0\n"), 1);
        assert_eq!(err_line("hello\n"), 1);
        assert_eq!(
            err_line("%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 1\n3 1 1.0\n"),
            4
        );
        assert_eq!(
            err_line("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n"),
            3
        );
        assert_eq!(
            err_line("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 abc\n"),
            3
        );
        assert_eq!(err_line("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n"), 2);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        assert!(parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1.0\n2 2 1.0\n").is_err());
    }

    #[test]
    fn writer_uses_seventeen_digits() {
        let op = SymmetricOperator::sparse(2, &[(0, 0, 0.1), (1, 0, -1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&op, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(HEADER));
        assert!(text.contains("1 1 1.0000000000000001e-1"));
        assert!(text.contains("2 1 -3.3333333333333331e-1"));
        let back = parse(&text).unwrap();
        assert_eq!(back.lower_triplets().unwrap(), op.lower_triplets().unwrap());
    }
}
