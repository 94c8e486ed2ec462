//! MatrixMarket coordinate dumps for offline inspection.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::CsrMatrix;

pub fn to_matrix_market(a: &CsrMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v);
        }
    }
    s
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    std::fs::write(path, to_matrix_market(a)).map_err(|e| Error::io(path, e))
}
