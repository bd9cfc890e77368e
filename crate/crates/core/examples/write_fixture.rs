//! Regenerates the bundled fixture: `cargo run -p capmkt-core --example write_fixture [dir]`.

use capmkt::io::fixture::{bundled_fixture_dir, write_fixture, FIXTURE_SEED};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(bundled_fixture_dir);
    match write_fixture(&dir, FIXTURE_SEED) {
        Ok(path) => println!("{}", path.display()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
