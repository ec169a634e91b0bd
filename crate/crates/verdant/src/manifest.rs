//! Run manifests: every artifact the tool writes records how it was
//! produced, so a run can be replayed from the artifact alone.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = "verdant";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Canonical argument string; re-running the tool with these arguments
    /// reproduces the numeric body of the artifact exactly.
    pub command: String,
    pub seed: Option<u64>,
    /// Input files as given on the command line (config, workload, library).
    pub inputs: Vec<String>,
    /// Wall-clock creation time; the only field excluded from
    /// reproducibility comparisons.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: String, seed: Option<u64>, inputs: Vec<String>) -> Self {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            seed,
            inputs,
            created_unix,
        }
    }

    /// Renders the manifest as `# key: value` comment lines for text and
    /// CSV artifacts.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: {}\n", self.tool));
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# command: {}\n", self.command));
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        for input in &self.inputs {
            out.push_str(&format!("# input: {input}\n"));
        }
        out.push_str(&format!("# created_unix: {}\n", self.created_unix));
        out
    }

    pub fn is_comment_line(line: &str) -> bool {
        line.starts_with('#')
    }
}

/// Strips manifest comment lines, leaving only the numeric body. Two runs
/// with identical arguments must agree on this byte-for-byte.
pub fn strip_comment_lines(text: &str) -> String {
    text.lines()
        .filter(|line| !RunManifest::is_comment_line(line))
        .collect::<Vec<_>>()
        .join("\n")
}
