//! Regenerates the bundled synthetic corpora under `data/`.
//!
//!     cargo run -p claimrl --example gen_synth

use std::path::Path;

fn main() -> std::io::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for (dir, files) in claimrl::synth::corpus::bundled() {
        for (rel, contents) in files {
            let path = root.join(dir).join(rel);
            std::fs::create_dir_all(path.parent().expect("file has a parent"))?;
            claimrl::io::write_atomic(&path, contents.as_bytes()).map_err(std::io::Error::other)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
