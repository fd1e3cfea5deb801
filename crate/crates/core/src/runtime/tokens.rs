use crate::error::{Error, Result};

/// Parses token ids separated by whitespace and/or commas; surrounding
/// brackets are ignored.
pub fn parse_token_ids(text: &str) -> Result<Vec<usize>> {
    let body = text.trim().trim_start_matches('[').trim_end_matches(']');
    body.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| Error::TokenParse(format!("'{s}' is not a token id"))))
        .collect()
}
