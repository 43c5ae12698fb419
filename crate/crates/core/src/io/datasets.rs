use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{load_edge_list, EdgeListDialect, SpreadingNetwork};

/// Environment variable naming the dataset cache directory.
pub const DATA_DIR_ENV: &str = "DMP_DATA_DIR";

const MANIFEST: &str = include_str!("../../data/datasets.json");

/// One public benchmark network. `nodes` and `edges` are the expected counts
/// after dropping self-loops and repeated pairs; `url` is `None` when there
/// is no stable direct download and the file has to be placed by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub description: String,
    pub url: Option<String>,
    /// `"gz"` or `"tar.bz2"`.
    pub archive: Option<String>,
    /// Path of the edge list inside a tar archive.
    pub member: Option<String>,
    pub nodes: usize,
    pub edges: usize,
}

impl DatasetEntry {
    pub fn builtin() -> Vec<DatasetEntry> {
        serde_json::from_str(MANIFEST).expect("bundled dataset manifest parses")
    }

    pub fn find(name: &str) -> Result<DatasetEntry> {
        Self::builtin()
            .into_iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::Invalid(format!("unknown dataset {name:?}")))
    }

    /// Where the plain edge list is expected: `<data dir>/<name>.txt`.
    pub fn local_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.txt", self.name))
    }

    /// Loads the cached copy as an undirected network with uniform `alpha`.
    pub fn load(&self, dir: &Path, alpha: f64) -> Result<SpreadingNetwork> {
        let path = self.local_path(dir);
        let f = std::fs::File::open(&path)
            .map_err(|e| Error::Invalid(format!("dataset {} not found at {}: {e}", self.name, path.display())))?;
        let dialect = EdgeListDialect {
            undirected: true,
            default_alpha: Some(alpha),
            lenient: true,
        };
        load_edge_list(std::io::BufReader::new(f), &dialect)
    }
}

/// `$DMP_DATA_DIR`, or `data` under the working directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCheck {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub expected_nodes: usize,
    pub expected_edges: usize,
    pub ok: bool,
}

/// Compares node and undirected-edge counts of the cached copy with the manifest.
pub fn verify_dataset(entry: &DatasetEntry, dir: &Path) -> Result<DatasetCheck> {
    let net = entry.load(dir, 0.5)?;
    let nodes = net.node_count();
    let edges = net.undirected_edge_count();
    Ok(DatasetCheck {
        name: entry.name.clone(),
        nodes,
        edges,
        expected_nodes: entry.nodes,
        expected_edges: entry.edges,
        ok: nodes == entry.nodes && edges == entry.edges,
    })
}

fn run(cmd: &mut Command) -> Result<()> {
    let status = cmd.status()?;
    if !status.success() {
        return Err(Error::Io(std::io::Error::other(format!("{cmd:?} exited with {status}"))));
    }
    Ok(())
}

/// Downloads with `curl`, unpacks with `gzip` or `tar`, and verifies counts.
pub fn fetch_dataset(entry: &DatasetEntry, dir: &Path) -> Result<DatasetCheck> {
    let url = entry.url.as_ref().ok_or_else(|| {
        Error::Invalid(format!(
            "dataset {} has no direct download; place an edge list at {}",
            entry.name,
            entry.local_path(dir).display()
        ))
    })?;
    std::fs::create_dir_all(dir)?;
    let target = entry.local_path(dir);
    let download = dir.join(format!("{}.download", entry.name));
    run(Command::new("curl").args(["-L", "--fail", "-sS", "-o"]).arg(&download).arg(url))?;
    match entry.archive.as_deref() {
        None => std::fs::rename(&download, &target)?,
        Some("gz") => {
            let out = std::fs::File::create(&target)?;
            run(Command::new("gzip").arg("-dc").arg(&download).stdout(out))?;
            std::fs::remove_file(&download)?;
        }
        Some("tar.bz2") => {
            let member = entry
                .member
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("dataset {} lacks an archive member", entry.name)))?;
            let out = std::fs::File::create(&target)?;
            run(Command::new("tar").arg("-xjOf").arg(&download).arg(member).stdout(out))?;
            std::fs::remove_file(&download)?;
        }
        Some(other) => return Err(Error::Invalid(format!("unsupported archive type {other:?}"))),
    }
    verify_dataset(entry, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_benchmark_counts() {
        let all = DatasetEntry::builtin();
        assert_eq!(all.len(), 6);
        let grid = DatasetEntry::find("us-power-grid").unwrap();
        assert_eq!((grid.nodes, grid.edges), (4941, 6594));
        assert!(DatasetEntry::find("nope").is_err());
    }

    #[test]
    fn verification_counts_undirected_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let entry = DatasetEntry {
            name: "toy".into(),
            description: String::new(),
            url: None,
            archive: None,
            member: None,
            nodes: 3,
            edges: 2,
        };
        std::fs::write(entry.local_path(dir.path()), "% header\n1 2\n2 1\n2 3\n3 3\n").unwrap();
        let check = verify_dataset(&entry, dir.path()).unwrap();
        assert!(check.ok, "{check:?}");
        assert!(fetch_dataset(&entry, dir.path()).is_err());
    }
}
