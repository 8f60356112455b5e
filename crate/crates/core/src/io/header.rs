//! Whitespace/comment tokenizer shared by the PNM-family headers.

use crate::error::{Error, Result};

pub(crate) struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> HeaderCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Next whitespace-delimited token; `#` comments are skipped before it.
    pub(crate) fn token(&mut self, what: &str) -> Result<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::format(start, format!("{what} is not ASCII")))
    }

    pub(crate) fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let start = self.pos;
        let tok = self.token(what)?;
        tok.parse()
            .map_err(|_| Error::format(start, format!("bad {what}: {tok:?}")))
    }

    /// Consumes the single whitespace byte that separates the header from the payload.
    pub(crate) fn end_of_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            Some(_) => Err(Error::format(self.pos, "header not terminated by whitespace")),
            None => Err(Error::Truncated("no payload after header".into())),
        }
    }
}
