use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
    EvalOnly,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::EvalOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::EvalOnly => "eval_only",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?} (expected train, dev, test or eval_only)"))
    }
}

/// 128-bit hex id of a link occurrence: SHA-256 over the unit-separated
/// `(source_id, begin, end, target_id)`, truncated.
pub fn example_id(source_id: &str, begin: usize, end: usize, target_id: &str) -> String {
    let key = format!("{source_id}\u{1f}{begin}\u{1f}{end}\u{1f}{target_id}");
    hex::encode(&Sha256::digest(key.as_bytes())[..16])
}

/// Stable 80/10/10 bucket for an example id.
pub fn assign_split(example_id: &str) -> Split {
    let digest = Sha256::digest(example_id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    match u64::from_be_bytes(head) % 100 {
        0..=79 => Split::Train,
        80..=89 => Split::Dev,
        _ => Split::Test,
    }
}
