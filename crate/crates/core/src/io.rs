//! File formats.
//!
//! Edge list:
//! ```text
//! n1 3 n2 2
//! 1 4
//! 2 4
//! ```
//! The header gives the mode sizes; each following line is a tab- or
//! space-separated dyad in global 1-based numbering, mode-1 node first.
//! Blank lines and lines starting with `#` are ignored.
//!
//! Attribute table (one file per mode):
//! ```text
//! #types cat num
//! id gender tenure
//! 1 Male 3.5
//! ```
//! The `#types` line declares each attribute column `cat` or `num`; the
//! header names the columns; every node of the mode must appear exactly
//! once, keyed by its global id. Fields are split on tabs, else on commas,
//! else on whitespace.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::attrs::AttributeTable;
use crate::error::{AttrError, LoadError};
use crate::graph::{BipartiteNetwork, Mode, WeightedProjection};

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
}

/// Parses edge-list text; `path` is only used in error messages.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<BipartiteNetwork, LoadError> {
    let mut lines = content_lines(text).filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `n1 <int> n2 <int>` header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (n1, n2) = match h.as_slice() {
        ["n1", a, "n2", b] => (
            a.parse::<usize>().map_err(|_| parse_err(path, hline, format!("bad n1 `{a}`")))?,
            b.parse::<usize>().map_err(|_| parse_err(path, hline, format!("bad n2 `{b}`")))?,
        ),
        _ => return Err(parse_err(path, hline, "expected header `n1 <int> n2 <int>`")),
    };
    let mut dyads = Vec::new();
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(parse_err(path, ln, "expected two node ids"));
        }
        let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, ln, format!("bad node id `{s}`")));
        let (i, k) = (p(f[0])?, p(f[1])?);
        dyads.push((ln, i, k));
    }
    let mut net = BipartiteNetwork::new(n1, n2);
    for (ln, i, k) in dyads {
        net.check_dyad(i, k).map_err(|e| parse_err(path, ln, e.to_string()))?;
        if !net.contains(i, k) {
            net.toggle_unchecked(i, k);
        }
    }
    Ok(net)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<BipartiteNetwork, LoadError> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, path)
}

/// Edge-list text for `net`, edges sorted.
pub fn format_edge_list(net: &BipartiteNetwork) -> String {
    let mut s = format!("n1 {} n2 {}\n", net.n1(), net.n2());
    for (i, k) in net.sorted_edges() {
        let _ = writeln!(s, "{i}\t{k}");
    }
    s
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ColType {
    Cat,
    Num,
}

/// Parses an attribute table for `mode` of `net`.
pub fn parse_attributes(
    text: &str,
    path: &Path,
    net: &BipartiteNetwork,
    mode: Mode,
) -> Result<AttributeTable, LoadError> {
    let mut types: Option<(usize, Vec<ColType>)> = None;
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (ln, line) in content_lines(text) {
        if line.trim().is_empty() {
            continue;
        }
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("#types") {
            let decl: Result<Vec<ColType>, LoadError> = split_fields(rest.trim())
                .into_iter()
                .filter(|s| !s.is_empty())
                .map(|s| match s {
                    "cat" => Ok(ColType::Cat),
                    "num" => Ok(ColType::Num),
                    other => Err(parse_err(path, ln, format!("unknown column type `{other}` (use cat or num)"))),
                })
                .collect();
            types = Some((ln, decl?));
            continue;
        }
        if t.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = split_fields(line).into_iter().map(String::from).collect();
        if header.is_none() {
            header = Some((ln, fields));
        } else {
            rows.push((ln, fields));
        }
    }
    let (hln, header) = header.ok_or_else(|| parse_err(path, 1, "missing header line"))?;
    let names = &header[1..];
    let types = match types {
        Some((tln, t)) if t.len() != names.len() => {
            return Err(parse_err(
                path,
                tln,
                format!("#types declares {} columns, header has {}", t.len(), names.len()),
            ))
        }
        Some((_, t)) => t,
        None => return Err(parse_err(path, hln, "missing `#types` declaration line")),
    };

    let first = net.first_node(mode);
    let count = net.mode_count(mode);
    let mut values: Vec<Option<Vec<String>>> = vec![None; count];
    for (ln, fields) in rows {
        if fields.len() != header.len() {
            return Err(parse_err(path, ln, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad node id `{}`", fields[0])))?;
        if id < first || id >= first + count {
            let e = AttrError::ForeignNode { node: id, mode };
            return Err(parse_err(path, ln, e.to_string()));
        }
        let slot = &mut values[id - first];
        if slot.is_some() {
            return Err(parse_err(path, ln, AttrError::DuplicateNode { node: id }.to_string()));
        }
        *slot = Some(fields[1..].to_vec());
    }
    let attr_err = |source| LoadError::Attr { path: path.to_path_buf(), source };
    if let Some(missing) = values.iter().position(Option::is_none) {
        return Err(attr_err(AttrError::MissingNode { mode, node: first + missing }));
    }
    let values: Vec<Vec<String>> = values.into_iter().map(Option::unwrap).collect();
    let mut table = AttributeTable::new(mode, first, count);
    for (c, (name, ty)) in names.iter().zip(&types).enumerate() {
        let col: Vec<&str> = values.iter().map(|r| r[c].as_str()).collect();
        match ty {
            ColType::Cat => {
                table.add_categorical(name, &col).map_err(attr_err)?;
            }
            ColType::Num => {
                let nums = col
                    .iter()
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| AttrError::BadNumber { name: name.clone(), value: v.to_string() })
                    })
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(attr_err)?;
                table.add_numeric(name, &nums).map_err(attr_err)?;
            }
        }
    }
    Ok(table)
}

pub fn read_attributes(
    path: impl AsRef<Path>,
    net: &BipartiteNetwork,
    mode: Mode,
) -> Result<AttributeTable, LoadError> {
    let path = path.as_ref();
    parse_attributes(&read(path)?, path, net, mode)
}

/// `i j weight` lines of a projection.
pub fn format_projection(p: &WeightedProjection) -> String {
    let mut s = String::new();
    for (&(a, b), w) in &p.weights {
        let _ = writeln!(s, "{a} {b} {w}");
    }
    s
}

/// Placeholder path for text parsed from memory.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let text = "n1 3 n2 2\n1\t4\n2\t4\n3 4\n1\t5\n2\t5\n2\t5\n";
        let net = parse_edge_list(text, &memory_path()).unwrap();
        assert_eq!(net.edge_count(), 5);
        let again = parse_edge_list(&format_edge_list(&net), &memory_path()).unwrap();
        assert_eq!(again.sorted_edges(), net.sorted_edges());
    }

    #[test]
    fn edge_list_errors_name_the_line() {
        let e = parse_edge_list("n1 3 n2 2\n1\t4\n1\t2\n", &memory_path()).unwrap_err();
        assert!(e.to_string().contains(":3:"), "{e}");
        assert!(parse_edge_list("3 2\n", &memory_path()).is_err());
        assert!(parse_edge_list("n1 3 n2 2\n1 x\n", &memory_path()).is_err());
    }

    #[test]
    fn attributes() {
        let net = BipartiteNetwork::new(2, 3);
        let text = "#types\tcat\tnum\nid\tgender\ttenure\n2\tMale\t1.5\n1\tFemale\t3\n";
        let t = parse_attributes(text, &memory_path(), &net, Mode::One).unwrap();
        assert_eq!(t.numeric("tenure").unwrap(), &[3.0, 1.5]);
        assert_eq!(t.code_of("gender", 2).unwrap(), 1);

        let csv = "#types,cat\nid,skill\n3,hard\n4,soft\n5,hard\n";
        let t2 = parse_attributes(csv, &memory_path(), &net, Mode::Two).unwrap();
        assert_eq!(t2.categorical("skill").unwrap().0, ["hard", "soft"]);

        let missing = "#types\tcat\nid\tg\n1\ta\n";
        assert!(matches!(
            parse_attributes(missing, &memory_path(), &net, Mode::One),
            Err(LoadError::Attr { source: AttrError::MissingNode { node: 2, .. }, .. })
        ));
        let dup = "#types\tcat\nid\tg\n1\ta\n1\tb\n";
        assert!(parse_attributes(dup, &memory_path(), &net, Mode::One).is_err());
        let foreign = "#types\tcat\nid\tg\n3\ta\n";
        assert!(parse_attributes(foreign, &memory_path(), &net, Mode::One).is_err());
        let bad_num = "#types\tnum\nid\tx\n1\tabc\n2\t1\n";
        assert!(parse_attributes(bad_num, &memory_path(), &net, Mode::One).is_err());
        let no_types = "id\tg\n1\ta\n2\tb\n";
        assert!(parse_attributes(no_types, &memory_path(), &net, Mode::One).is_err());
    }
}
