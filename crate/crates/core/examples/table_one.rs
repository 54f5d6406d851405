//! Robustness table for the composite mirror catalog.
//!
//! ```text
//! cargo run --release --example table_one
//! ```

use mirror_grape::analysis::{format_table, table_one_report};

fn main() -> mirror_grape::error::Result<()> {
    let rows = table_one_report(&[])?;
    print!("{}", format_table(&rows));
    Ok(())
}
