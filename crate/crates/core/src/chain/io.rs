//! Plain-text matrix files: the first non-empty line holds `n`, followed by
//! `n` lines of `n` whitespace-separated probabilities. Lines starting with
//! `#` are ignored. A label sidecar holds one label per line.

use super::{Checks, FiniteChain};
use crate::error::{Error, Result};
use std::path::Path;

pub fn parse_matrix(text: &str, allow_loops: bool) -> Result<FiniteChain> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty matrix file".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: first,
        msg: format!("expected state count, found {header:?}"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line: first,
            msg: "state count must be positive".into(),
        });
    }
    let mut rows = Vec::with_capacity(n);
    for (line, l) in lines {
        if rows.len() == n {
            return Err(Error::Parse {
                line,
                msg: format!("more than {n} rows"),
            });
        }
        let row = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {n} entries, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("expected {n} rows, found {}", rows.len()),
        });
    }
    FiniteChain::from_rows(
        rows,
        Checks {
            allow_loops,
            reject_periodic: true,
        },
    )
}

pub fn load_labels(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn load_matrix(path: &Path, labels: Option<&Path>, allow_loops: bool) -> Result<FiniteChain> {
    let chain = parse_matrix(&std::fs::read_to_string(path)?, allow_loops)?;
    match labels {
        Some(l) => chain.with_labels(load_labels(l)?),
        None => Ok(chain),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ring() {
        let c = parse_matrix("# ring\n3\n0 .5 .5\n.5 0 .5\n.5 .5 0\n", false).unwrap();
        assert_eq!(c.n_states(), 3);
        assert_eq!(c.p(1, 2), 0.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_matrix("2\n0 1\n1 x\n", false).unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 3,
                msg: "not a number: \"x\"".into()
            }
        );
        assert!(matches!(parse_matrix("2\n0 1\n", false), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("2\n0 1 0\n", false), Err(Error::Parse { line: 2, .. })));
    }
}
