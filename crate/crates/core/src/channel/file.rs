//! Text container for a [`ChannelSet`].
//!
//! ```text
//! sdma-thp-channels 1
//! N 16
//! K 16
//! NT 8
//! NR 4
//! drop_id 0
//! position <k> <x> <y>            (K lines, k = 0..K)
//! matrix <n> <k>                  (N*K blocks, n-major then k)
//! <re> <im> <re> <im> ...         (NR rows of NT pairs, row-major)
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! IEEE-754 double survives a write/read cycle bit for bit. Blank lines and
//! lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::ChannelSet;
use crate::{CMat, Error, Result};

const MAGIC: &str = "sdma-thp-channels";
const VERSION: u32 = 1;

pub fn render_channels(set: &ChannelSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "N {}", set.num_subcarriers());
    let _ = writeln!(out, "K {}", set.num_users());
    let _ = writeln!(out, "NT {}", set.tx_antennas());
    let _ = writeln!(out, "NR {}", set.rx_antennas());
    let _ = writeln!(out, "drop_id {}", set.drop_id);
    for (k, (x, y)) in set.user_positions.iter().enumerate() {
        let _ = writeln!(out, "position {k} {x:?} {y:?}");
    }
    for n in 0..set.num_subcarriers() {
        for k in 0..set.num_users() {
            let _ = writeln!(out, "matrix {n} {k}");
            let h = set.h(n, k);
            for r in 0..h.nrows() {
                let row: Vec<String> = (0..h.ncols())
                    .map(|c| format!("{:?} {:?}", h[(r, c)].re, h[(r, c)].im))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
    }
    out
}

pub fn write_channels(set: &ChannelSet, path: &Path) -> Result<()> {
    fs::write(path, render_channels(set)).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_channels(path: &Path) -> Result<ChannelSet> {
    let text = fs::read_to_string(path).map_err(|source| Error::ChannelFileIo {
        path: path.to_path_buf(),
        source,
    })?;
    parse_channels(&text)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.inner.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
            } else {
                break;
            }
        }
    }

    fn peek_tokens(&mut self) -> Option<Vec<&'a str>> {
        self.skip_blank();
        self.inner.peek().map(|(_, l)| l.split_whitespace().collect())
    }

    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        self.skip_blank();
        self.inner.next().map(|(i, l)| {
            self.last = i + 1;
            (i + 1, l.split_whitespace().collect())
        })
    }

    fn expect(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let last = self.last;
        self.next_tokens().ok_or(Error::ChannelFileFormat {
            line: last + 1,
            message: "unexpected end of file".into(),
        })
    }
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::ChannelFileFormat {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| format_err(line, format!("cannot parse '{tok}'")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = parse_num(tok, line)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteEntry { line });
    }
    Ok(v)
}

fn header_field(lines: &mut Lines<'_>, key: &str) -> Result<u64> {
    let (line, toks) = lines.expect()?;
    match toks.as_slice() {
        [k, v] if *k == key => parse_num(v, line),
        _ => Err(format_err(line, format!("expected '{key} <value>'"))),
    }
}

pub fn parse_channels(text: &str) -> Result<ChannelSet> {
    let mut lines = Lines::new(text);
    let (line, toks) = lines.expect()?;
    match toks.as_slice() {
        [m, v] if *m == MAGIC => {
            let v: u32 = parse_num(v, line)?;
            if v != VERSION {
                return Err(format_err(line, format!("unsupported version {v}")));
            }
        }
        _ => return Err(format_err(line, format!("missing '{MAGIC} {VERSION}' header"))),
    }
    let n_sub = header_field(&mut lines, "N")? as usize;
    let n_users = header_field(&mut lines, "K")? as usize;
    let tx = header_field(&mut lines, "NT")? as usize;
    let rx = header_field(&mut lines, "NR")? as usize;
    let drop_id = header_field(&mut lines, "drop_id")?;

    let mut positions = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let (line, toks) = lines.expect()?;
        match toks.as_slice() {
            ["position", idx, x, y] => {
                let idx: usize = parse_num(idx, line)?;
                if idx != k {
                    return Err(format_err(line, format!("expected position {k}, found {idx}")));
                }
                positions.push((parse_f64(x, line)?, parse_f64(y, line)?));
            }
            _ => return Err(format_err(line, format!("expected 'position {k} <x> <y>'"))),
        }
    }

    let mut matrices = Vec::with_capacity(n_sub);
    for n in 0..n_sub {
        let mut row_users = Vec::with_capacity(n_users);
        for k in 0..n_users {
            let (line, toks) = lines.expect()?;
            match toks.as_slice() {
                ["matrix", a, b] => {
                    let (a, b): (usize, usize) = (parse_num(a, line)?, parse_num(b, line)?);
                    if (a, b) != (n, k) {
                        return Err(format_err(line, format!("expected matrix {n} {k}, found {a} {b}")));
                    }
                }
                _ => return Err(format_err(line, format!("expected 'matrix {n} {k}'"))),
            }
            let mut rows: Vec<Vec<Complex64>> = Vec::new();
            let mut first_line = line + 1;
            while let Some(peek) = lines.peek_tokens() {
                if peek.first() == Some(&"matrix") {
                    break;
                }
                let (line, toks) = lines.expect()?;
                if rows.is_empty() {
                    first_line = line;
                }
                if toks.len() != 2 * tx {
                    return Err(Error::DimensionMismatch {
                        line,
                        message: format!("row has {} numbers, expected {} (NT = {tx})", toks.len(), 2 * tx),
                    });
                }
                let mut row = Vec::with_capacity(tx);
                for pair in toks.chunks(2) {
                    row.push(Complex64::new(parse_f64(pair[0], line)?, parse_f64(pair[1], line)?));
                }
                rows.push(row);
            }
            if rows.len() != rx {
                return Err(Error::DimensionMismatch {
                    line: first_line,
                    message: format!("matrix {n} {k} has {} rows, header says NR = {rx}", rows.len()),
                });
            }
            row_users.push(CMat::from_fn(rx, tx, |r, c| rows[r][c]));
        }
        matrices.push(row_users);
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(format_err(line, "trailing content after last matrix"));
    }
    ChannelSet::new(matrices, tx, rx, positions, drop_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_drop, scenario_preset, Preset};

    fn small() -> ChannelSet {
        let mut c = scenario_preset(Preset::S2);
        c.num_subcarriers = 2;
        c.num_users = 2;
        generate_drop(&c, 0)
    }

    #[test]
    fn round_trip_is_exact() {
        let set = generate_drop(&scenario_preset(Preset::S3), 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("drop.chan");
        write_channels(&set, &path).unwrap();
        let back = load_channels(&path).unwrap();
        assert_eq!(back, set);
        for n in 0..set.num_subcarriers() {
            for k in 0..set.num_users() {
                for (a, b) in set.h(n, k).iter().zip(back.h(n, k).iter()) {
                    assert_eq!(a.re.to_bits(), b.re.to_bits());
                    assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
            }
        }
    }

    #[test]
    fn extra_row_is_dimension_mismatch() {
        let text = render_channels(&small());
        let mut lines: Vec<&str> = text.lines().collect();
        let idx = lines.iter().position(|l| l.starts_with("matrix 0 0")).unwrap();
        let dup = lines[idx + 1];
        lines.insert(idx + 1, dup);
        let err = parse_channels(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
    }

    #[test]
    fn nan_entry_rejected() {
        let text = render_channels(&small());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let idx = lines.iter().position(|l| l.starts_with("matrix 1 1")).unwrap();
        let mut toks: Vec<String> = lines[idx + 1].split_whitespace().map(String::from).collect();
        toks[1] = "NaN".into();
        lines[idx + 1] = toks.join(" ");
        let err = parse_channels(&lines.join("\n")).unwrap_err();
        assert!(
            matches!(err, Error::NonFiniteEntry { line } if line == idx + 2),
            "{err}"
        );
    }

    #[test]
    fn missing_file_reported() {
        let err = load_channels(Path::new("/nonexistent/drop.chan")).unwrap_err();
        assert!(matches!(err, Error::ChannelFileIo { .. }));
    }

    #[test]
    fn truncated_file_rejected() {
        let text = render_channels(&small());
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(parse_channels(&cut).is_err());
    }
}
