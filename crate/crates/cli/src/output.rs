use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Provenance stamped into every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn csv_header(&self) -> String {
        format!(
            "# rpdc {} seed={} config_hash={}\n",
            self.command, self.seed, self.config_hash
        )
    }
}

/// Stable digest of the resolved inputs of a run.
pub fn config_hash(resolved: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(resolved).expect("JSON values always serialize");
    hex::encode(&Sha256::digest(bytes)[..8])
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn csv(
        name: &str,
        meta: &Meta,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Self {
        let mut s = meta.csv_header();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        Self {
            name: name.to_owned(),
            contents: s,
        }
    }

    pub fn json<T: Serialize>(name: &str, meta: &Meta, payload: &T) -> Result<Self, CliError> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            meta: &'a Meta,
            #[serde(flatten)]
            payload: &'a T,
        }
        let mut contents = serde_json::to_string_pretty(&Wrapped { meta, payload })
            .map_err(|e| CliError::Internal(format!("serializing {name}: {e}")))?;
        contents.push('\n');
        Ok(Self {
            name: name.to_owned(),
            contents,
        })
    }

    /// Write through a temporary file in the same directory, then rename.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let internal =
            |e: std::io::Error| CliError::Internal(format!("writing {}: {e}", self.name));
        std::fs::create_dir_all(dir).map_err(internal)?;
        let target = dir.join(&self.name);
        let tmp = dir.join(format!(".{}.tmp", self.name));
        {
            let mut f = std::fs::File::create(&tmp).map_err(internal)?;
            f.write_all(self.contents.as_bytes()).map_err(internal)?;
            f.sync_all().map_err(internal)?;
        }
        std::fs::rename(&tmp, &target).map_err(internal)?;
        Ok(target)
    }
}

/// Round to 0.01 for dB reporting.
pub fn centi(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Meta {
        Meta {
            command: "test".into(),
            seed: 9,
            config_hash: "abcd".into(),
        }
    }

    #[test]
    fn csv_has_provenance_line() {
        let a = Artifact::csv(
            "x.csv",
            &meta(),
            &["a", "b"],
            vec![vec!["1".into(), "2".into()]],
        );
        assert_eq!(
            a.contents,
            "# rpdc test seed=9 config_hash=abcd\na,b\n1,2\n"
        );
    }

    #[test]
    fn json_embeds_meta() {
        #[derive(Serialize)]
        struct P {
            value: f64,
        }
        let a = Artifact::json("x.json", &meta(), &P { value: 1.5 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&a.contents).unwrap();
        assert_eq!(v["meta"]["seed"], 9);
        assert_eq!(v["value"], 1.5);
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let a = Artifact::csv("y.csv", &meta(), &["a"], Vec::<Vec<String>>::new());
        let p = a.write_to(dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), a.contents);
        assert!(!dir.path().join(".y.csv.tmp").exists());
    }

    #[test]
    fn hash_is_stable() {
        let v = serde_json::json!({"a": 1, "b": [1.5, 2.0]});
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 16);
        assert_eq!(centi(16.004), 16.0);
    }
}
