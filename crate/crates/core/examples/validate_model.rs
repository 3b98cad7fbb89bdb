//! Load the shipped model, then break it on purpose and print the
//! validation report.
//!
//! ```sh
//! cargo run --example validate_model
//! ```

use isac::model::{validate_model, ModelFile};
use isac::ProblemInstance;

const SC1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1.json");

pub fn run() -> isac::Result<()> {
    let instance = ProblemInstance::load(SC1)?;
    println!("sc1.json: {}", validate_model(&instance));

    let mut file: ModelFile = serde_json::from_str(&std::fs::read_to_string(SC1)?)?;
    file.channel[0][1][0][0] += 0.2;
    file.p_s = vec![0.7, 0.7];
    match file.into_instance() {
        Ok(_) => println!("unexpectedly valid"),
        Err(isac::Error::InvalidModel(report)) => println!("broken copy, {} violations:\n{report}", report.len()),
        Err(e) => return Err(e),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
