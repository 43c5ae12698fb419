use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::SpreadingNetwork;
use crate::error::{Error, Result};

/// How to interpret an edge-list text file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeListDialect {
    /// Each line `a b alpha` yields both `a -> b` and `b -> a`.
    pub undirected: bool,
    /// Alpha for lines with only two columns. `None` makes the third column mandatory.
    pub default_alpha: Option<f64>,
    /// Skip self-loops and repeated pairs instead of failing. Public
    /// datasets often contain both.
    pub lenient: bool,
}

impl Default for EdgeListDialect {
    fn default() -> Self {
        Self {
            undirected: false,
            default_alpha: None,
            lenient: false,
        }
    }
}

impl EdgeListDialect {
    pub fn undirected() -> Self {
        Self {
            undirected: true,
            ..Self::default()
        }
    }
}

/// Reads `src dst alpha` lines separated by whitespace or commas. Blank lines
/// and lines starting with `#` or `%` are skipped. Labels get dense indices in
/// order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, dialect: &EdgeListDialect) -> Result<SpreadingNetwork> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut skipped = 0usize;

    let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(label) {
            return i;
        }
        let i = labels.len();
        labels.push(label.to_string());
        index.insert(label.to_string(), i);
        i
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let alpha = match (fields.len(), dialect.default_alpha) {
            (2, Some(a)) => a,
            (2, None) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: "missing alpha column".into(),
                })
            }
            (3, _) => fields[2].parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("cannot parse alpha {:?}: {e}", fields[2]),
            })?,
            (k, _) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected `src dst alpha`, found {k} fields"),
                })
            }
        };
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("alpha {alpha} outside [0, 1]"),
            });
        }
        if fields[0] == fields[1] {
            if dialect.lenient {
                skipped += 1;
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                message: format!("self-loop on {:?}", fields[0]),
            });
        }
        let s = intern(fields[0], &mut labels);
        let d = intern(fields[1], &mut labels);
        let mut pairs = vec![(s, d)];
        if dialect.undirected {
            pairs.push((d, s));
        }
        if pairs.iter().any(|p| seen.contains(p)) {
            if dialect.lenient {
                skipped += 1;
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                message: format!("duplicate edge {} -> {}", fields[0], fields[1]),
            });
        }
        for (a, b) in pairs {
            seen.insert((a, b));
            edges.push((a, b, alpha));
        }
    }

    if skipped > 0 {
        log::info!("edge list: skipped {skipped} self-loop or duplicate lines");
    }
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    SpreadingNetwork::new(labels, edges)
}

/// Writes one directed edge per line. Alphas use the shortest decimal that
/// parses back to the same `f64`.
pub fn write_edge_list<W: Write>(net: &SpreadingNetwork, mut out: W) -> Result<()> {
    for l in net.labels() {
        if l.is_empty() || l.contains(|c: char| c == ',' || c == '#' || c.is_whitespace()) {
            return Err(Error::Invalid(format!(
                "label {l:?} cannot be written to an edge list"
            )));
        }
    }
    for (s, d, a) in net.edges() {
        writeln!(out, "{} {} {}", net.label(s), net.label(d), a)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub src: String,
    pub dst: String,
    pub alpha: f64,
}

/// JSON form `{nodes: [labels], edges: [{src, dst, alpha}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

impl From<&SpreadingNetwork> for NetworkJson {
    fn from(net: &SpreadingNetwork) -> Self {
        Self {
            nodes: net.labels().to_vec(),
            edges: net
                .edges()
                .map(|(s, d, alpha)| EdgeJson {
                    src: net.label(s).to_string(),
                    dst: net.label(d).to_string(),
                    alpha,
                })
                .collect(),
        }
    }
}

impl NetworkJson {
    pub fn into_network(self) -> Result<SpreadingNetwork> {
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let lookup = |l: &str| {
            index
                .get(l)
                .copied()
                .ok_or_else(|| Error::UnknownNode(l.to_string()))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push((lookup(&e.src)?, lookup(&e.dst)?, e.alpha));
        }
        SpreadingNetwork::new(self.nodes.clone(), edges)
    }
}

impl SpreadingNetwork {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<NetworkJson>(text)?.into_network()
    }

    /// Loads `.json` files as [`NetworkJson`], anything else as an edge list.
    pub fn load_path(path: &std::path::Path, dialect: &EdgeListDialect) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&std::fs::read_to_string(path)?)
        } else {
            let f = std::fs::File::open(path)?;
            load_edge_list(std::io::BufReader::new(f), dialect)
        }
    }
}
