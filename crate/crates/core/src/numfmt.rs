//! Decimal formatting for the files this crate writes.
//!
//! 17 significant digits uniquely identify an `f64`, so every number written
//! through here parses back to the exact same bits.

use std::io;

/// Format `value` with 17 significant digits (scientific notation).
pub fn f64_17sig(value: f64) -> String {
    format!("{value:.16e}")
}

/// JSON formatter that writes every float via [`f64_17sig`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SigFig17Formatter;

impl serde_json::ser::Formatter for SigFig17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(f64_17sig(value).as_bytes())
    }
}
