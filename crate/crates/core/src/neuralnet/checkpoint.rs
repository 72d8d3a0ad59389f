//! Text checkpoints of Q-network parameters.
//!
//! Layout (one item per line, `\n` separated):
//!
//! ```text
//! hyprl-qnetwork
//! format_version=1
//! n_hidden=<N_h>
//! n_input=<N_x>
//! n_layer=<N_layer>
//! n_actions=<|A|>
//! n_meta=<metafeature dim>
//! <name> <len>
//! <len space-separated values>
//! ... (13 arrays in ARRAY_NAMES order, matrices row-major)
//! end
//! ```
//!
//! Values use the shortest decimal form that parses back to the identical
//! float, so reading a written checkpoint reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::network::{NetworkShape, QNetworkParams, ARRAY_NAMES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "hyprl-qnetwork";

pub fn render_checkpoint<T: Scalar>(p: &QNetworkParams<T>) -> String {
    let s = p.shape();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "format_version={CHECKPOINT_VERSION}").unwrap();
    writeln!(out, "n_hidden={}", s.n_hidden).unwrap();
    writeln!(out, "n_input={}", s.n_input).unwrap();
    writeln!(out, "n_layer={}", s.n_layer).unwrap();
    writeln!(out, "n_actions={}", s.n_actions).unwrap();
    writeln!(out, "n_meta={}", s.n_meta).unwrap();
    for (name, arr) in ARRAY_NAMES.iter().zip(p.arrays()) {
        writeln!(out, "{name} {}", arr.len()).unwrap();
        let line: Vec<String> = arr.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out.push_str("end\n");
    out
}

pub fn parse_checkpoint<T: Scalar>(text: &str) -> Result<QNetworkParams<T>> {
    let bad = |line: usize, msg: String| Error::Checkpoint(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Checkpoint(format!("truncated before {what}")));

    let (n, magic) = next("header")?;
    if magic != MAGIC {
        return Err(bad(n, format!("expected {MAGIC:?}")));
    }
    let mut header = |key: &str| -> Result<usize> {
        let (n, line) = next(key)?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| bad(n, format!("expected {key}=<value>")))?;
        value.parse().map_err(|_| bad(n, format!("invalid {key} {value:?}")))
    };
    let version = header("format_version")?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported format_version {version}")));
    }
    let shape = NetworkShape {
        n_hidden: header("n_hidden")?,
        n_input: header("n_input")?,
        n_layer: header("n_layer")?,
        n_actions: header("n_actions")?,
        n_meta: header("n_meta")?,
    };
    let mut params = QNetworkParams::<T>::zeros(shape)?;
    for (name, arr) in ARRAY_NAMES.iter().zip(params.arrays_mut()) {
        let (n, line) = next(name)?;
        let expected = format!("{name} {}", arr.len());
        if line != expected {
            return Err(bad(n, format!("expected {expected:?}, found {line:?}")));
        }
        let (n, values) = next(name)?;
        let mut count = 0;
        for (slot, tok) in arr.iter_mut().zip(values.split_ascii_whitespace()) {
            *slot = tok.parse::<T>().map_err(|_| bad(n, format!("invalid value {tok:?} in {name}")))?;
            count += 1;
        }
        if count != arr.len() || values.split_ascii_whitespace().count() != arr.len() {
            return Err(bad(n, format!("{name} needs {} values", arr.len())));
        }
    }
    match next("end")? {
        (_, "end") => Ok(params),
        (n, other) => Err(bad(n, format!("expected end, found {other:?}"))),
    }
}

pub fn write_checkpoint<T: Scalar>(p: &QNetworkParams<T>, path: &Path) -> Result<()> {
    fs::write(path, render_checkpoint(p)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<QNetworkParams<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}
