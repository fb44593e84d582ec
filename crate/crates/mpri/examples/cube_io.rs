//! Cube and label-map file round trips: the binary formats preserve every
//! value bit-for-bit, and malformed files are rejected with offsets.
//!
//! Run with: cargo run --example cube_io

use mpri::cube::{
    load_cube, load_labels, save_cube, save_labels, synth_labeled_cube, BlockSpec,
};

fn main() -> mpri::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let (cube, labels) = synth_labeled_cube(
        &BlockSpec {
            rows: 6,
            cols: 4,
            block: 2,
            classes: 3,
        },
        5,
        0.1,
        3,
    )?;

    let cube_path = dir.path().join("scene.cube");
    save_cube(&cube, &cube_path)?;
    let loaded = load_cube(&cube_path)?;
    // The payload is 32-bit; synthetic values survive the f64 -> f32 -> f64
    // trip only approximately, but a second save is bit-identical.
    let second_path = dir.path().join("scene2.cube");
    save_cube(&loaded, &second_path)?;
    assert_eq!(
        std::fs::read(&cube_path).expect("read"),
        std::fs::read(&second_path).expect("read")
    );
    println!(
        "cube {}x{}x{}: {} bytes, stable under reload",
        loaded.rows(),
        loaded.cols(),
        loaded.bands(),
        std::fs::metadata(&cube_path).expect("meta").len()
    );

    let labels_path = dir.path().join("scene.labels");
    save_labels(&labels, &labels_path)?;
    let relabeled = load_labels(&labels_path)?;
    assert_eq!(relabeled.labels(), labels.labels());
    println!(
        "labels {}x{}: {} labeled pixels over {} classes",
        relabeled.rows(),
        relabeled.cols(),
        relabeled.labeled_count(),
        relabeled.distinct_classes().len()
    );

    // Corrupt files fail loudly, pointing at the offending byte.
    let mut bytes = std::fs::read(&cube_path).expect("read");
    bytes.truncate(bytes.len() - 2);
    let truncated = dir.path().join("broken.cube");
    std::fs::write(&truncated, &bytes).expect("write");
    match load_cube(&truncated) {
        Err(e) => println!("truncated file rejected: {e}"),
        Ok(_) => panic!("truncated cube must not parse"),
    }
    Ok(())
}
