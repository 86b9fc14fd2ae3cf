//! Binary table files.
//!
//! Layout, little-endian throughout: magic `PBNLC\x01`, version `u16`, order
//! `u8`, window `u16`, μ `f64`, quantization step `f64`, parameter fingerprint
//! (8 bytes), entry count `u64`, then per entry the indices as `i16` (two for
//! first order, four otherwise) followed by the value as `f64` re, im.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::table::{CoefficientTable, TableEntry};
use super::{KernelParams, Order};
use crate::{Error, Result};

pub const LUT_MAGIC: [u8; 6] = *b"PBNLC\x01";
pub const LUT_VERSION: u16 = 1;

pub fn encode(table: &CoefficientTable) -> Vec<u8> {
    let dims = table.order.dims();
    let mut out = Vec::with_capacity(43 + table.len() * (2 * dims + 16));
    out.extend_from_slice(&LUT_MAGIC);
    out.extend_from_slice(&LUT_VERSION.to_le_bytes());
    out.push(table.order.code());
    out.extend_from_slice(&table.window.to_le_bytes());
    out.extend_from_slice(&table.mu_db.to_le_bytes());
    out.extend_from_slice(&table.quant_step.to_le_bytes());
    out.extend_from_slice(&table.fingerprint);
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for e in &table.entries {
        for i in &e.index[..dims] {
            out.extend_from_slice(&i.to_le_bytes());
        }
        out.extend_from_slice(&e.value.re.to_le_bytes());
        out.extend_from_slice(&e.value.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(Error::LutFormat(format!(
                "truncated file: {what} needs bytes {}..{end}, file has {}",
                self.pos,
                self.buf.len()
            )));
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(out)
    }
}

pub fn decode(buf: &[u8]) -> Result<CoefficientTable> {
    let mut r = Reader { buf, pos: 0 };
    if r.take::<6>("magic")? != LUT_MAGIC {
        return Err(Error::LutFormat("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take("version")?);
    if version != LUT_VERSION {
        return Err(Error::LutFormat(format!("unsupported version {version}")));
    }
    let order = Order::from_code(r.take::<1>("order")?[0])?;
    let window = u16::from_le_bytes(r.take("window")?);
    let mu_db = f64::from_le_bytes(r.take("mu")?);
    let quant_step = f64::from_le_bytes(r.take("quant step")?);
    let fingerprint = r.take::<8>("fingerprint")?;
    let count = u64::from_le_bytes(r.take("entry count")?);
    let dims = order.dims();
    let needed = count
        .checked_mul((2 * dims + 16) as u64)
        .filter(|n| *n == (buf.len() - r.pos) as u64);
    if needed.is_none() {
        return Err(Error::LutFormat(format!(
            "{count} entries do not match the {} payload bytes",
            buf.len() - r.pos
        )));
    }
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut index = [0i16; 4];
        for slot in index.iter_mut().take(dims) {
            *slot = i16::from_le_bytes(r.take("index")?);
        }
        let re = f64::from_le_bytes(r.take("value")?);
        let im = f64::from_le_bytes(r.take("value")?);
        entries.push(TableEntry {
            index,
            value: Complex64::new(re, im),
            cluster: 0,
        });
    }
    if entries.windows(2).any(|w| w[0].index >= w[1].index) {
        return Err(Error::LutFormat("entries are not strictly sorted".into()));
    }
    let mut table = CoefficientTable {
        order,
        window,
        mu_db,
        quant_step,
        fingerprint,
        entries,
    };
    table.renumber_clusters();
    Ok(table)
}

pub fn save_table(table: &CoefficientTable, path: &Path) -> Result<()> {
    let bytes = encode(table);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a table without checking which parameters it was built for.
pub fn read_table(path: &Path) -> Result<CoefficientTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Reads a table and checks it was built for `kp`.
pub fn load_table(path: &Path, kp: &KernelParams) -> Result<CoefficientTable> {
    let table = read_table(path)?;
    let expected = kp.fingerprint();
    if table.fingerprint != expected {
        return Err(Error::StaleLut {
            expected: u64::from_le_bytes(expected),
            found: u64::from_le_bytes(table.fingerprint),
        });
    }
    Ok(table)
}
