use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Train,
    ProbeGenuine,
    ProbeImpostor,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::ProbeGenuine => "probe-genuine",
            Role::ProbeImpostor => "probe-impostor",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Role::Train),
            "probe-genuine" => Ok(Role::ProbeGenuine),
            "probe-impostor" => Ok(Role::ProbeImpostor),
            other => Err(format!(
                "unknown role `{other}` (expected train, probe-genuine or probe-impostor)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    /// For `probe-impostor` entries this is the claimed identity.
    pub class_id: usize,
    pub role: Role,
}

/// Labeled image list. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    base_dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(base_dir: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        validate(&entries)?;
        Ok(Self {
            base_dir: base_dir.into(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = parse(path, &text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(base_dir, entries)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.role == role)
    }

    /// Number of distinct class ids (ids are contiguous, so this is max + 1).
    pub fn num_classes(&self) -> usize {
        self.entries.iter().map(|e| e.class_id + 1).max().unwrap_or(0)
    }

    /// Training images per class, indexed by class id.
    pub fn train_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for e in self.with_role(Role::Train) {
            counts[e.class_id] += 1;
        }
        counts
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# path,class_id,role\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.path.display(), e.class_id, e.role));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn parse(path: &Path, text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // the path may itself contain commas, so split from the right
        let fields: Vec<&str> = line.rsplitn(3, ',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected `<path>,<class_id>,<role>`, got {} field(s)", fields.len()),
            ));
        }
        let (role, class, file) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        let role: Role = role.parse().map_err(|e| Error::parse(path, lineno, e))?;
        let class_id = class
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("bad class id `{class}`: {e}")))?;
        if file.is_empty() {
            return Err(Error::parse(path, lineno, "empty path"));
        }
        entries.push(ManifestEntry {
            path: PathBuf::from(file),
            class_id,
            role,
        });
    }
    Ok(entries)
}

fn validate(entries: &[ManifestEntry]) -> Result<()> {
    let mut train: BTreeMap<usize, usize> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for e in entries {
        seen.insert(e.class_id);
        if e.role == Role::Train {
            *train.entry(e.class_id).or_default() += 1;
        }
    }
    if let Some(missing) = (0..seen.len()).find(|id| !seen.contains(id)) {
        return Err(Error::Dataset(format!(
            "class ids must be contiguous from 0; id {missing} is missing (ids present: {:?})",
            seen
        )));
    }
    if let Some((class, n)) = train.iter().find(|(_, &n)| n < 2) {
        return Err(Error::Dataset(format!(
            "class {class} has {n} training image(s); at least 2 are required"
        )));
    }
    Ok(())
}

const IMAGE_EXTENSIONS: [&str; 2] = ["pgm", "png"];

/// Build a manifest from a directory-per-class layout.
///
/// Class directories and the files inside them are ordered lexicographically;
/// class ids follow directory order. The first `k` files of each class become
/// training images and the rest genuine probes.
pub fn first_k_split(root: impl AsRef<Path>, k: usize) -> Result<DatasetManifest> {
    let root = root.as_ref();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k = {k}; at least 2 training images per class are required"
        )));
    }
    let mut class_dirs = read_sorted(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect::<Vec<_>>();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Dataset(format!(
            "{}: no class directories found",
            root.display()
        )));
    }
    let mut entries = Vec::new();
    for (class_id, dir) in class_dirs.iter().enumerate() {
        let files: Vec<PathBuf> = read_sorted(dir)?
            .into_iter()
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        if files.len() <= k {
            return Err(Error::Dataset(format!(
                "{}: {} image(s), need more than k = {k} to leave probes",
                dir.display(),
                files.len()
            )));
        }
        for (i, file) in files.into_iter().enumerate() {
            let rel = file.strip_prefix(root).map(Path::to_path_buf).unwrap_or(file);
            entries.push(ManifestEntry {
                path: rel,
                class_id,
                role: if i < k { Role::Train } else { Role::ProbeGenuine },
            });
        }
    }
    DatasetManifest::new(root, entries)
}

fn read_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    paths.sort();
    Ok(paths)
}
