use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 4] = ["video_id", "path", "label", "subgroup"];

/// Ground-truth class of a video. Positive means "unwanted".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Label {
        if sign > 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "pos",
            Label::Negative => "neg",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub path: PathBuf,
    pub label: Label,
    pub subgroup: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Builds a manifest, rejecting duplicate ids.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate video_id \"{}\" in manifest",
                    e.video_id
                )));
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }

    /// (positive, negative) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .entries
            .iter()
            .filter(|e| e.label == Label::Positive)
            .count();
        (pos, self.entries.len() - pos)
    }

    /// Errors unless both classes are present, as training requires.
    pub fn require_both_labels(&self) -> Result<()> {
        match self.class_counts() {
            (0, _) => Err(Error::Validation("manifest has no positive videos".into())),
            (_, 0) => Err(Error::Validation("manifest has no negative videos".into())),
            _ => Ok(()),
        }
    }

    /// Manifest restricted to the entries accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&ManifestEntry) -> bool) -> DatasetManifest {
        DatasetManifest {
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    /// Renders the CSV form. Paths are written as given.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER).expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                e.video_id.as_str(),
                &e.path.to_string_lossy(),
                e.label.as_str(),
                e.subgroup.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Loads a manifest CSV. Relative video paths resolve against the
/// manifest's own directory.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().map(str::trim).ne(MANIFEST_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", MANIFEST_HEADER.join(",")),
        });
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let video_id = record[0].trim();
        if video_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty video_id".into(),
            });
        }
        let label = match record[2].trim() {
            "pos" => Label::Positive,
            "neg" => Label::Negative,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("label must be `pos` or `neg`, found `{other}`"),
                })
            }
        };
        let raw_path = PathBuf::from(record[1].trim());
        let path = if raw_path.is_absolute() {
            raw_path
        } else {
            base.join(raw_path)
        };
        let subgroup = Some(record[3].trim())
            .filter(|s| !s.is_empty())
            .map(str::to_owned);
        entries.push(ManifestEntry {
            video_id: video_id.to_owned(),
            path,
            label,
            subgroup,
        });
    }
    DatasetManifest::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_in_order() {
        let text = "video_id,path,label,subgroup\na,a.y4m,pos,\nb,b.y4m,neg,easy\nc,/abs/c,neg,difficult\n";
        let m = parse_manifest(text, Path::new("/data")).unwrap();
        let ids: Vec<_> = m.entries().iter().map(|e| e.video_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(m.entries()[0].path, PathBuf::from("/data/a.y4m"));
        assert_eq!(m.entries()[1].subgroup.as_deref(), Some("easy"));
        assert_eq!(m.entries()[0].subgroup, None);
        assert_eq!(m.entries()[2].path, PathBuf::from("/abs/c"));
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = "video_id,path,label,subgroup\na,x,pos,\nb,y,neg,\na,z,neg,\n";
        match parse_manifest(text, Path::new(".")) {
            Err(Error::Validation(msg)) => assert!(msg.contains("\"a\""), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "video_id,path,label,subgroup\na,x,pos,\nb,y,maybe,\n";
        match parse_manifest(text, Path::new(".")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "video_id,path,label,subgroup\na,x,pos\n";
        assert!(matches!(
            parse_manifest(text, Path::new(".")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_manifest("id,path\n", Path::new(".")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn eight_hundred_rows_count_by_class() {
        let mut text = String::from("video_id,path,label,subgroup\n");
        for i in 0..400 {
            text.push_str(&format!("p{i},p{i}.y4m,pos,\n"));
        }
        for i in 0..400 {
            let sub = if i < 200 { "easy" } else { "difficult" };
            text.push_str(&format!("n{i},n{i}.y4m,neg,{sub}\n"));
        }
        let m = parse_manifest(&text, Path::new(".")).unwrap();
        assert_eq!(m.class_counts(), (400, 400));
        m.require_both_labels().unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let text = "video_id,path,label,subgroup\na,/v/a,pos,\nb,/v/b,neg,easy\n";
        let m = parse_manifest(text, Path::new(".")).unwrap();
        assert_eq!(parse_manifest(&m.to_csv(), Path::new(".")).unwrap(), m);
    }

    #[test]
    fn single_class_fails_training_check() {
        let text = "video_id,path,label,subgroup\na,x,pos,\n";
        let m = parse_manifest(text, Path::new(".")).unwrap();
        assert!(m.require_both_labels().is_err());
    }
}
