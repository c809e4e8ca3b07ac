pub mod beltrami;
pub mod counterexample;
pub mod diophantine;
pub mod snorm;
pub mod split;
pub mod tower;

use std::fmt::Write;

/// CSV text from a header and rows of already formatted cells.
pub(crate) fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    writeln!(out, "{header}").expect("string write");
    for row in rows {
        writeln!(out, "{}", row.join(",")).expect("string write");
    }
    out
}
