//! Regenerates the checked-in fixture corpora.

fn main() -> std::io::Result<()> {
    let dir = nlpkit_cli::fixtures::default_fixture_dir();
    nlpkit_cli::fixtures::write_all(&dir)?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
