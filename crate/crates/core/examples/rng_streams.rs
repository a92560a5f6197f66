//! Derived random streams: every path from the root seed is an independent,
//! reproducible generator, so parallel work never shares state.

use bootlin::prng::{purpose, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = RngStream::new(42);
    let rep3 = root.derive(0).derive(3);
    let data = rep3.derive(purpose::DATA).standard_normal(5);
    println!("path {:?}: {data:.4?}", rep3.derive(purpose::DATA).path());

    // Same path, same numbers.
    assert_eq!(data, root.derive(0).derive(3).derive(purpose::DATA).standard_normal(5));

    let idx = rep3.derive(purpose::RESAMPLE_INDEX).categorical_uniform(8, 5)?;
    println!("resample indices {idx:?}");
    println!("uniforms {:.4?}", root.derive(1).uniform01(4));
    Ok(())
}
