//! Turn a 3-column parameter matrix into a pipeline.

use resonant_sr::pipeline::{import_parameter_matrix, parse_matrix_rows, serialize};

const MATRIX: &str = "\
135 & 10 & 20
255 & 255 & 255
2.25 & 13 & 105°
DVC & DO & 100%
1 & 5 & 5
DVC & LO & 150%
135 & 10 & 20
255 & 255 & 255
255 & 255 & 255
";

fn main() -> resonant_sr::Result<()> {
    let rows = parse_matrix_rows(MATRIX)?;
    println!("{} rows", rows.len());
    let spec = import_parameter_matrix("from-matrix", &rows)?;
    print!("{}", serialize(&spec));

    let broken = parse_matrix_rows("135, 10\n")
        .and_then(|rows| import_parameter_matrix("broken", &rows));
    println!("short row: {}", broken.unwrap_err());
    Ok(())
}
