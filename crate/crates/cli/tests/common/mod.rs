#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};

pub fn attwarp() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_attwarp"));
    cmd.env_remove("ATTWARP_OUT_DIR").env_remove("RUST_LOG");
    cmd
}

pub fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn attwarp");
    eprintln!("stdout:\n{}", String::from_utf8_lossy(&out.stdout));
    eprintln!("stderr:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// ATW1 bytes written field by field: magic, height, width, dtype 0, f32 payload.
pub fn write_atw(path: &Path, h: usize, w: usize, values: &[f32]) {
    assert_eq!(values.len(), h * w);
    let mut bytes = b"ATW1".to_vec();
    for v in [h as u32, w as u32, 0u32] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).unwrap();
}

pub fn read_atw(path: &Path) -> (usize, usize, Vec<f32>) {
    let bytes = fs::read(path).unwrap();
    assert_eq!(&bytes[..4], b"ATW1");
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (h, w) = (word(4) as usize, word(8) as usize);
    assert_eq!(word(12), 0);
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect::<Vec<_>>();
    assert_eq!(values.len(), h * w);
    (h, w, values)
}

pub fn write_map(path: &Path, h: usize, w: usize, f: impl Fn(usize, usize) -> f32) {
    let values: Vec<f32> = (0..h * w).map(|k| f(k / w, k % w)).collect();
    write_atw(path, h, w, &values);
}

pub fn pattern_image(w: u32, h: u32, seed: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let v = x.wrapping_mul(31).wrapping_add(y.wrapping_mul(17)).wrapping_add(seed * 53);
        Rgb([(v % 251) as u8, ((v / 3) % 241) as u8, ((x * y + seed) % 256) as u8])
    })
}

pub fn save_png(img: &RgbImage, path: &Path) -> PathBuf {
    img.save(path).unwrap();
    path.to_path_buf()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Gaussian bump over a small floor.
pub fn bump(i: usize, j: usize, ci: f64, cj: f64, sigma: f64) -> f32 {
    let d2 = (i as f64 - ci).powi(2) + (j as f64 - cj).powi(2);
    (0.02 + (-d2 / (2.0 * sigma * sigma)).exp()) as f32
}
