//! Artifact serialization: CSV tables, content digests, and the binary
//! operator dump.
//!
//! Output formatting is deliberately boring and deterministic — floats are
//! printed with the shortest round-trip representation, rows in input
//! order — so identical runs produce byte-identical artifacts and a
//! content digest is meaningful.

use std::io::{Read, Write};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::kernels::WaveNumber;
use crate::linalg::ComplexMat;
use crate::vec3::Vec3;
use crate::{Error, Result};

/// SHA-256 of raw bytes as lowercase hex.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        use std::fmt::Write as _;
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// Far-field (or any per-direction) table: `dir_x,dir_y,dir_z,re,im`.
pub fn direction_csv(dirs: &[Vec3], values: &[Complex64]) -> String {
    let mut s = String::from("dir_x,dir_y,dir_z,re,im\n");
    for (d, v) in dirs.iter().zip(values) {
        use std::fmt::Write as _;
        let _ = writeln!(s, "{},{},{},{},{}", d[0], d[1], d[2], v.re, v.im);
    }
    s
}

/// Boundary trace table, same columns with the collocation points in the
/// direction slots.
pub fn trace_csv(points: &[Vec3], values: &[Complex64]) -> String {
    direction_csv(points, values)
}

/// Parameter sweep table: `t,re,im`.
pub fn sweep_csv(ts: &[f64], values: &[Complex64]) -> String {
    let mut s = String::from("t,re,im\n");
    for (t, v) in ts.iter().zip(values) {
        use std::fmt::Write as _;
        let _ = writeln!(s, "{},{},{}", t, v.re, v.im);
    }
    s
}

/// Kind tags of the binary dump.  1–3 match
/// [`crate::operators::OperatorKind::tag`]; 4 is the combined operator Λ
/// and 0 is reserved for matrices outside the catalog.
pub const TAG_CUSTOM: u8 = 0;
pub const TAG_SINGLE_LAYER: u8 = 1;
pub const TAG_DOUBLE_LAYER: u8 = 2;
pub const TAG_ADJOINT_DOUBLE_LAYER: u8 = 3;
pub const TAG_COMBINED: u8 = 4;

const DUMP_MAGIC: &[u8; 5] = b"HSOP1";

/// A matrix read back from a binary dump.
#[derive(Debug, Clone)]
pub struct OperatorDump {
    pub tag: u8,
    pub k: WaveNumber,
    pub matrix: ComplexMat,
}

/// Writes the binary dump: magic `HSOP1`, N as little-endian u64, the kind
/// tag byte, k as two little-endian f64, then the row-major entries as
/// little-endian (re, im) f64 pairs.
pub fn write_operator_dump(
    out: &mut impl Write,
    tag: u8,
    k: WaveNumber,
    matrix: &ComplexMat,
) -> Result<()> {
    if tag > TAG_COMBINED {
        return Err(Error::Invalid(format!("unknown operator tag {tag}")));
    }
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(matrix.n as u64).to_le_bytes())?;
    out.write_all(&[tag])?;
    out.write_all(&k.re().to_le_bytes())?;
    out.write_all(&k.im().to_le_bytes())?;
    for v in &matrix.data {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary dump written by [`write_operator_dump`].
pub fn read_operator_dump(input: &mut impl Read) -> Result<OperatorDump> {
    let mut magic = [0u8; 5];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Invalid(format!(
            "bad dump magic {magic:?}, expected {DUMP_MAGIC:?}"
        )));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8);
    if n > 1 << 20 {
        return Err(Error::Invalid(format!("dump size {n} is implausible")));
    }
    let n = n as usize;
    let mut tag = [0u8; 1];
    input.read_exact(&mut tag)?;
    let tag = tag[0];
    if tag > TAG_COMBINED {
        return Err(Error::Invalid(format!("unknown operator tag {tag}")));
    }
    input.read_exact(&mut b8)?;
    let kre = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let kim = f64::from_le_bytes(b8);
    let k = WaveNumber::new(kre, kim)?;
    let mut matrix = ComplexMat::zeros(n);
    for v in matrix.data.iter_mut() {
        input.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        *v = Complex64::new(re, im);
    }
    Ok(OperatorDump { tag, k, matrix })
}
