use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub threads: usize,
    /// Flags as given, with defaults filled in.
    pub config: Value,
    /// Values derived from the flags and inputs, such as fitted grids.
    pub resolved: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub timings_ms: Timings,
    pub result: Value,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total: f64,
}

pub fn digest(path: &Path) -> std::io::Result<InputDigest> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    let sha256 = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(InputDigest {
        path: path.to_path_buf(),
        bytes,
        sha256,
    })
}

/// `<dir>/<primary output name>.manifest.json`, or `<dir>/<command>.manifest.json`
/// when the command wrote no file.
pub fn manifest_path(out_dir: Option<&Path>, primary: Option<&Path>, command: &str) -> PathBuf {
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| primary.and_then(Path::parent).map(Path::to_path_buf))
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = primary
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| command.to_string());
    dir.join(format!("{stem}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc");
        std::fs::write(&path, b"abc").unwrap();
        let d = digest(&path).unwrap();
        assert_eq!(d.bytes, 3);
        assert_eq!(
            d.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_location() {
        let p = manifest_path(None, Some(Path::new("out/U.bin")), "solve-pde");
        assert_eq!(p, PathBuf::from("out/U.bin.manifest.json"));
        let p = manifest_path(Some(Path::new("runs")), None, "eval-accuracy");
        assert_eq!(p, PathBuf::from("runs/eval-accuracy.manifest.json"));
        assert_eq!(
            manifest_path(None, None, "x"),
            PathBuf::from("./x.manifest.json")
        );
    }
}
