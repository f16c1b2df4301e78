#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;
use sparse_mclass::data::{write_labeled_csv, write_matrix_csv};
use sparse_mclass::Dataset;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sparse-mclass"));
    c.env_remove("SPARSE_MCLASS_SEED");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

pub fn write_dataset(dir: &Path, name: &str, data: &Dataset) -> PathBuf {
    let path = dir.join(name);
    write_labeled_csv(BufWriter::new(File::create(&path).unwrap()), data).unwrap();
    path
}

pub fn write_matrix(dir: &Path, name: &str, m: &Array2<f64>) -> PathBuf {
    let path = dir.join(name);
    write_matrix_csv(BufWriter::new(File::create(&path).unwrap()), m).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
