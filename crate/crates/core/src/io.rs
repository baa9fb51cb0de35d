//! JSON file formats.
//!
//! Systems: `{"points": [...], "blocks": [[a, b, c], ...]}`. Instance files
//! add `"inner": [...]`. Output is canonical: points sorted, each block sorted,
//! blocks sorted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::PartialSts;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemFile {
    pub points: Vec<String>,
    pub blocks: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Vec<String>>,
}

impl SystemFile {
    pub fn into_system(self) -> Result<PartialSts> {
        PartialSts::from_raw(self.points, self.blocks)
    }

    pub fn from_system(s: &PartialSts) -> Self {
        let mut blocks: Vec<Vec<String>> = s
            .named_blocks()
            .into_iter()
            .map(|b| {
                let mut b = b.to_vec();
                b.sort();
                b
            })
            .collect();
        blocks.sort();
        Self {
            points: s.names().to_vec(),
            blocks,
            inner: None,
        }
    }
}

pub fn parse_system(text: &str) -> Result<PartialSts> {
    parse_file(text)?.into_system()
}

pub fn parse_file(text: &str) -> Result<SystemFile> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn to_json(s: &PartialSts) -> String {
    to_json_file(&SystemFile::from_system(s))
}

pub fn to_json_file(f: &SystemFile) -> String {
    let mut out = serde_json::to_string_pretty(f).expect("plain data serializes");
    out.push('\n');
    out
}
