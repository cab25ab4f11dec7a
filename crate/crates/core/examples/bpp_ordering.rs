//! Bits-per-pixel of synthetic images at several JPEG settings.
//!
//!     cargo run --example bpp_ordering [-- IMAGE...]
//!
//! Extra arguments are scored as well (PNG or JPEG, 8-bit gray or RGB).

use entropy_coreset::{bpp_reencode, load_image, BppConfig, ChromaSubsampling, PixelBuffer, SampleRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(kind: &str, side: u32) -> PixelBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut data = Vec::with_capacity((side * side * 3) as usize);
    for y in 0..side {
        for x in 0..side {
            let px = match kind {
                "constant" => [128, 128, 128],
                "gradient" => [(x * 255 / (side - 1)) as u8, (y * 255 / (side - 1)) as u8, 96],
                _ => rng.random(),
            };
            data.extend_from_slice(&px);
        }
    }
    PixelBuffer::new(side, side, 3, data).unwrap()
}

fn main() -> entropy_coreset::Result<()> {
    let settings = [
        (100, ChromaSubsampling::None),
        (90, ChromaSubsampling::None),
        (75, ChromaSubsampling::Quarter),
    ];
    print!("{:<10}", "image");
    for (q, c) in settings {
        print!("{:>12}", format!("q{q}/{}", c.as_str()));
    }
    println!();
    for kind in ["constant", "gradient", "noise"] {
        let px = synthetic(kind, 128);
        print!("{kind:<10}");
        for (q, c) in settings {
            let cfg = BppConfig::new(q, c, false)?;
            print!("{:>12.4}", bpp_reencode(&px, &cfg)?);
        }
        println!();
    }

    for path in std::env::args().skip(1) {
        let rec = SampleRecord {
            id: path.clone(),
            image_path: path.clone().into(),
            mask_path: None,
            feature_row: None,
        };
        let px = load_image(&rec)?;
        println!("{path}: {:.4} bpp", bpp_reencode(&px, &BppConfig::default())?);
    }
    Ok(())
}
