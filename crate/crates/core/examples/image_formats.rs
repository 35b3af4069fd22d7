//! Round trips through the three on-disk formats: IDX image and label files,
//! binary PGM and the text network checkpoint.
//!
//! ```text
//! cargo run --example image_formats
//! ```

use deep_transform::mnist::{encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, read_pgm, write_pgm};
use deep_transform::net::{classifier_specs, init_network, load_checkpoint, save_checkpoint};
use deep_transform::synthetic::synthetic_digits;
use deep_transform::Result;

/// Sizes in bytes of the IDX image file, one PGM and the checkpoint.
pub fn run_example() -> Result<(usize, usize, usize)> {
    let data = synthetic_digits(12, 4);

    // IDX stores bytes, so compare on the 256-level grid.
    let idx = encode_idx_images(data.images());
    let images = parse_idx_images(&idx)?;
    assert_eq!(parse_idx_labels(&encode_idx_labels(data.labels()))?, data.labels());
    for (a, b) in images.iter().zip(data.images()) {
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    let pgm = write_pgm(&images[0]);
    assert_eq!(read_pgm(&pgm)?, images[0]);

    let net = init_network(&classifier_specs(), 1)?;
    let ckpt = save_checkpoint(&net);
    assert_eq!(load_checkpoint(&ckpt)?, net);

    Ok((idx.len(), pgm.len(), ckpt.len()))
}

fn main() -> Result<()> {
    let (idx, pgm, ckpt) = run_example()?;
    println!("IDX images: {idx} bytes for 12 images");
    println!("PGM: {pgm} bytes");
    println!("classifier checkpoint: {ckpt} bytes");
    Ok(())
}
