#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn keed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keed"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn keed_ok(args: &[&str]) -> Output {
    let out = keed(args);
    assert!(
        out.status.success(),
        "keed {args:?} failed with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// A small, fast network so training-based tests stay quick.
pub const TINY_MODEL: &str =
    "[model]\nwidth = 8\ndepth = 2\nn_blocks = 1\nlength = 64\n\n[train]\nbatch_size = 16\nval_fraction = 0.2\n";
