use std::path::PathBuf;

use crate::geometry::GeometryError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("unknown label {name:?}; valid labels are: {valid}")]
    UnknownLabel { name: String, valid: String },

    #[error("{source_name}: JSON parse error at byte {offset}: {message}")]
    Parse {
        source_name: String,
        offset: usize,
        message: String,
    },

    #[error("referential integrity: {0}")]
    ReferentialIntegrity(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("all {total} samples were skipped")]
    AllSkipped { total: usize },

    #[error("overlay source {0:?} is not available")]
    MissingSource(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Maps a serde_json error to [`Error::Parse`], converting its
    /// line/column position into a byte offset within `text`.
    pub(crate) fn from_json(source_name: &str, text: &str, err: &serde_json::Error) -> Self {
        let offset = byte_offset(text, err.line(), err.column());
        Error::Parse {
            source_name: source_name.to_string(),
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_points_at_the_failing_byte() {
        let text = "{\n  \"a\": [1, 2,,]\n}";
        let err = serde_json::from_str::<serde_json::Value>(text).unwrap_err();
        match Error::from_json("inline", text, &err) {
            Error::Parse { offset, .. } => assert_eq!(&text[offset..offset + 1], ","),
            other => panic!("unexpected {other:?}"),
        }
    }
}
