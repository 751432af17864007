//! Process-count and size lists as written on the command line.
//!
//! A list is comma separated. Each item is a single value, an inclusive
//! arithmetic range `a..b:step` (step defaults to 1) or, for sizes, a
//! geometric range `a..b*factor`. Sizes accept `K`/`KiB`, `M`/`MiB` and
//! `G`/`GiB` suffixes, all binary.

use std::collections::BTreeSet;

use crate::{BenchError, Result};

fn bad(item: &str, why: &str) -> BenchError {
    BenchError::Config(format!("bad list item `{item}`: {why}"))
}

fn parse_size_literal(text: &str) -> Result<u64> {
    let text = text.trim();
    let digits = text
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(text.len());
    let (number, suffix) = text.split_at(digits);
    let value: u64 = number.parse().map_err(|_| bad(text, "expected a number"))?;
    let scale: u64 = match suffix.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => 1 << 10,
        "m" | "mb" | "mib" => 1 << 20,
        "g" | "gb" | "gib" => 1 << 30,
        _ => return Err(bad(text, "unknown size suffix")),
    };
    value
        .checked_mul(scale)
        .ok_or_else(|| bad(text, "overflows"))
}

fn parse_list(text: &str, sizes: bool) -> Result<Vec<u64>> {
    let literal = |s: &str| -> Result<u64> {
        if sizes {
            parse_size_literal(s)
        } else {
            s.trim().parse().map_err(|_| bad(s, "expected an integer"))
        }
    };
    let mut out = BTreeSet::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((start, rest)) = item.split_once("..") else {
            out.insert(literal(item)?);
            continue;
        };
        let start = literal(start)?;
        if let Some((end, factor)) = rest.split_once('*') {
            let end = literal(end)?;
            let factor: u64 = factor
                .trim()
                .parse()
                .map_err(|_| bad(item, "expected an integer factor"))?;
            if factor < 2 || start == 0 {
                return Err(bad(
                    item,
                    "geometric ranges need a start of at least 1 and a factor of at least 2",
                ));
            }
            let mut v = start;
            while v <= end {
                out.insert(v);
                v = match v.checked_mul(factor) {
                    Some(next) => next,
                    None => break,
                };
            }
        } else {
            let (end, step) = match rest.split_once(':') {
                Some((end, step)) => (
                    literal(end)?,
                    step.trim()
                        .parse::<u64>()
                        .map_err(|_| bad(item, "expected an integer step"))?,
                ),
                None => (literal(rest)?, 1),
            };
            if step == 0 {
                return Err(bad(item, "step must be positive"));
            }
            out.extend((start..=end).step_by(step as usize));
        }
    }
    if out.is_empty() {
        return Err(BenchError::Config(format!(
            "`{text}` describes an empty list"
        )));
    }
    Ok(out.into_iter().collect())
}

/// Sorted, de-duplicated process counts.
pub fn parse_procs(text: &str) -> Result<Vec<usize>> {
    let procs: Vec<usize> = parse_list(text, false)?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    if procs[0] == 0 {
        return Err(BenchError::Config("process counts must be positive".into()));
    }
    Ok(procs)
}

/// Sorted, de-duplicated byte counts.
pub fn parse_sizes(text: &str) -> Result<Vec<u64>> {
    let sizes = parse_list(text, true)?;
    if sizes[0] == 0 {
        return Err(BenchError::Config("sizes must be positive".into()));
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let procs = parse_procs("8..256:8, 5..253:8").unwrap();
        assert_eq!(procs.len(), 64);
        assert_eq!(&procs[..4], &[5, 8, 13, 16]);
        let sizes = parse_sizes("1..1MiB*2").unwrap();
        assert_eq!(sizes.len(), 21);
        assert_eq!(*sizes.last().unwrap(), 1 << 20);
    }

    #[test]
    fn literals_and_errors() {
        assert_eq!(parse_sizes("64K,1,4kib").unwrap(), vec![1, 4096, 65536]);
        assert_eq!(parse_procs("3,1..3").unwrap(), vec![1, 2, 3]);
        assert!(parse_procs("0").is_err());
        assert!(parse_procs("1..4:0").is_err());
        assert!(parse_sizes("3X").is_err());
        assert!(parse_sizes("1..8*1").is_err());
        assert!(parse_procs(" , ").is_err());
    }
}
