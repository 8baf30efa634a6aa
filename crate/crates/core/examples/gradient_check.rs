//! Finite-difference check of the full backward pass for every activation
//! variant on tiny random networks.
//!
//! ```text
//! cargo run --release --example gradient_check [seeds]
//! ```

use wlkaf::experiment::cmd_gradcheck;
use wlkaf::Result;

fn main() -> Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse()).unwrap_or(3);
    let seeds: Vec<u64> = (0..n).collect();
    match cmd_gradcheck(None, &seeds) {
        Ok(reports) => {
            for r in &reports {
                println!("{r}");
            }
            println!("all {} checks passed", reports.len());
            Ok(())
        }
        Err(e) => {
            eprintln!("{e}");
            Err(e)
        }
    }
}
