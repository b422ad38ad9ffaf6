use std::io::{BufRead, Write};

use super::{AugmentError, DesignPair};

/// One pair per line; blank lines are skipped.
pub fn read_pairs_jsonl(reader: impl BufRead) -> Result<Vec<DesignPair>, AugmentError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: DesignPair =
            serde_json::from_str(&line).map_err(|source| AugmentError::Corpus { line: i + 1, source })?;
        out.push(pair);
    }
    Ok(out)
}

pub fn write_pairs_jsonl(mut writer: impl Write, pairs: &[DesignPair]) -> Result<(), AugmentError> {
    for p in pairs {
        let line = serde_json::to_string(p).map_err(|source| AugmentError::Corpus { line: 0, source })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
