#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use lrlab_core::imaging::save_image;
use lrlab_core::GrayImage;

/// The `lrlab` binary with a clean thread environment.
pub fn lrlab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrlab"));
    cmd.env_remove("LRLAB_THREADS").env("RUST_LOG", "error");
    cmd
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    lrlab().args(args).output().expect("spawn lrlab")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Panics with stderr attached unless the run succeeded.
pub fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn write_image(img: &GrayImage, path: &Path) {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).unwrap();
    }
    save_image(img, path).unwrap();
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// `A (rows x rank) * B (rank x cols)` with standard normal factors, plus
/// +-1 at `fraction` of the entries drawn without replacement. Returns the
/// observation and the low-rank part.
pub fn planted(
    rows: usize,
    cols: usize,
    rank: usize,
    fraction: f64,
    seed: u64,
) -> (lrlab_core::Matrix, nalgebra::DMatrix<f64>) {
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    let mut r = rng(seed ^ 0x5eed);
    let a = DMatrix::<f64>::from_fn(rows, rank, |_, _| r.sample(StandardNormal));
    let b = DMatrix::<f64>::from_fn(rank, cols, |_, _| r.sample(StandardNormal));
    let low = &a * &b;
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    let count = (fraction * (rows * cols) as f64).round() as usize;
    let mut sparse = DMatrix::<f64>::zeros(rows, cols);
    for k in 0..count {
        let j = r.random_range(k..cells.len());
        cells.swap(k, j);
        let idx = cells[k];
        sparse[(idx % rows, idx / rows)] = if r.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    (lrlab_core::Matrix::from_dmatrix(&low + &sparse).unwrap(), low)
}
