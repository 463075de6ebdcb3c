use std::path::{Path, PathBuf};
use std::process::ExitCode;

use critical_otto::analysis::AnalysisError;
use critical_otto::cycle::CycleError;
use critical_otto::io::manifest::{parse_manifest, OutputDigest, RunManifest, MANIFEST_FILE};
use critical_otto::io::ParseError;

pub const THREADS_ENV: &str = "CRITICAL_OTTO_THREADS";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Contradiction(String),
    Numerical(String),
    Io(String),
    Verify(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Contradiction(_) => 3,
            Failure::Numerical(_) => 4,
            Failure::Io(_) | Failure::Verify(_) => 1,
        })
    }

    pub fn report(&self) {
        match self {
            Failure::Usage(m) => eprintln!("error: {m}"),
            Failure::Contradiction(m) => eprintln!("error: inconsistent configuration: {m}"),
            Failure::Numerical(m) => eprintln!("error: numerical failure: {m}"),
            Failure::Io(m) => eprintln!("error: {m}"),
            Failure::Verify(problems) => {
                for p in problems {
                    eprintln!("mismatch: {p}");
                }
            }
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CycleError> for Failure {
    fn from(e: CycleError) -> Self {
        if e.is_config() {
            Failure::Contradiction(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Cycle(c) => c.into(),
            AnalysisError::Grid(_) | AnalysisError::Argument(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Threads to use and where that number came from.
pub fn thread_count(flag: Option<usize>) -> Result<(usize, &'static str), Failure> {
    if let Some(n) = flag {
        return if n == 0 { Err(Failure::Usage("--threads must be at least 1".into())) } else { Ok((n, "flag")) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok((n, "env")),
            _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok((rayon::current_num_threads(), "default")),
    }
}

/// Files produced by one run, all in one directory, written together.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

fn split(path: &Path) -> Result<(PathBuf, String), Failure> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Failure::Usage(format!("not a file path: {}", path.display())))?
        .to_string();
    if name == MANIFEST_FILE {
        return Err(Failure::Usage(format!("{MANIFEST_FILE} is reserved for the run manifest")));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((dir, name))
}

impl OutputSet {
    pub fn new(primary: &Path) -> Result<Self, Failure> {
        let (dir, _) = split(primary)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Adds a file; it must live in the same directory as the primary output.
    pub fn add(&mut self, path: &Path, bytes: impl Into<Vec<u8>>) -> Result<(), Failure> {
        let (dir, name) = split(path)?;
        if dir != self.dir {
            return Err(Failure::Usage(format!(
                "{} must be in the same directory as the other outputs ({})",
                path.display(),
                self.dir.display()
            )));
        }
        if self.files.iter().any(|(n, _)| *n == name) {
            return Err(Failure::Usage(format!("output {name} given twice")));
        }
        self.files.push((name, bytes.into()));
        Ok(())
    }

    pub fn digests(&self) -> Vec<OutputDigest> {
        self.files.iter().map(|(n, b)| OutputDigest::of(n, b)).collect()
    }

    /// Writes every file plus the manifest; on any failure the files written
    /// so far are removed again.
    pub fn commit(self, manifest: &RunManifest) -> Result<(), Failure> {
        std::fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let all = self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice()));
        let text = manifest.render();
        for (name, bytes) in all.chain(std::iter::once((MANIFEST_FILE, text.as_bytes()))) {
            let path = self.dir.join(name);
            if let Err(e) = std::fs::write(&path, bytes) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                let _ = std::fs::remove_file(&path);
                return Err(io_err(&path, e));
            }
            written.push(path);
        }
        Ok(())
    }
}

pub fn read_manifest(dir: &Path) -> Result<Option<RunManifest>, Failure> {
    let path = dir.join(MANIFEST_FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => parse_manifest(&text).map(Some).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&path, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use critical_otto::quantum::QuantumError;

    fn code(f: Failure) -> ExitCode {
        f.exit_code()
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(code(Failure::Usage(String::new())), ExitCode::from(2));
        assert_eq!(code(CycleError::Config("T_C".into()).into()), ExitCode::from(3));
        assert_eq!(code(CycleError::from(QuantumError::NonFinite).into()), ExitCode::from(4));
        assert_eq!(code(AnalysisError::Grid("empty".into()).into()), ExitCode::from(2));
        assert_eq!(code(AnalysisError::Cycle(CycleError::from(QuantumError::NonFinite)).into()), ExitCode::from(4));
    }

    #[test]
    fn outputs_share_one_directory() {
        let mut set = OutputSet::new(Path::new("out/a.csv")).unwrap();
        assert!(set.add(Path::new("out/a.csv"), "x").is_ok());
        assert!(set.add(Path::new("elsewhere/b.svg"), "y").is_err());
        assert!(set.add(Path::new("out/a.csv"), "x").is_err());
        assert!(set.add(Path::new("out/manifest.toml"), "x").is_err());
        assert_eq!(OutputSet::new(Path::new("a.csv")).unwrap().dir(), Path::new("."));
    }

    #[test]
    fn zero_threads_rejected() {
        assert!(thread_count(Some(0)).is_err());
        assert_eq!(thread_count(Some(3)).unwrap(), (3, "flag"));
    }
}
