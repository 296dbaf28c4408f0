use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let out_dir = PathBuf::from(env::var("OUT_DIR").unwrap());

    let bindings = cbindgen::generate(&crate_dir).expect("cbindgen failed");
    bindings.write_to_file(out_dir.join("kirchhoff_fiber.h"));
    // Keep a copy in the crate so downstream builds can include it directly.
    let include_dir = crate_dir.join("include");
    let _ = std::fs::create_dir_all(&include_dir);
    bindings.write_to_file(include_dir.join("kirchhoff_fiber.h"));

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
