//! Builds a first reconstruction from posed photographs with the command-line
//! tool's `init` path, then renders it from a new viewpoint.
//!
//! cargo run --release --example init_scene -- [out_dir]

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/init".into());
    let run = |args: &[&str]| {
        let argv = std::iter::once("clsplat").chain(args.iter().copied());
        let code = clsplat::cli::run(argv.map(std::ffi::OsString::from));
        assert_eq!(code, 0, "clsplat {args:?} exited with {code}");
    };
    let bench = format!("{out}/bench");
    run(&["gen", "--out", &bench, "--op", "none", "--width", "96", "--height", "72"]);
    run(&[
        "init", "--images", &format!("{bench}/update"), "--out", &format!("{out}/scene.bin"), "--points", "800",
        "--iterations", "300",
    ]);
    run(&[
        "render", "--scene", &format!("{out}/scene.bin"), "--cameras", &format!("{bench}/test_cameras.json"), "--out",
        &format!("{out}/renders"),
    ]);
    println!("renders written to {out}/renders");
}
