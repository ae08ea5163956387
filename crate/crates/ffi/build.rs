fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR set by cargo");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(format!("{crate_dir}/cbindgen.toml")).unwrap_or_default();
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            let include = std::path::Path::new(&crate_dir).join("include");
            std::fs::create_dir_all(&include).expect("create include/");
            bindings.write_to_file(include.join("thetaforge.h"));
        }
        Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
    }
}
