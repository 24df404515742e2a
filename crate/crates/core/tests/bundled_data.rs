use std::path::Path;

#[test]
fn bundled_corpora_match_generator() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for (dir, files) in claimrl::synth::corpus::bundled() {
        for (rel, expected) in files {
            let path = root.join(dir).join(&rel);
            let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(
                on_disk == expected,
                "{} is stale; rerun the gen_synth example",
                path.display()
            );
        }
    }
}
