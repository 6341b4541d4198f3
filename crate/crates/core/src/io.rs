//! Matrix file I/O in the two shared formats.
//!
//! CSV: first line `rows,cols`, then one comma-separated line per row.
//! Binary: magic `CSKM`, 4-byte little-endian version (= 1), two 8-byte
//! little-endian unsigned dims, then rows*cols 8-byte little-endian IEEE-754
//! doubles in row-major order.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CSKM";
const VERSION: u32 = 1;

pub fn write_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},{}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let mut first = true;
        for v in m.row(i) {
            if !first {
                write!(w, ",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty csv matrix file".into()))??;
    let mut dims = header.trim().split(',');
    let rows: usize = parse_dim(dims.next(), "rows")?;
    let cols: usize = parse_dim(dims.next(), "cols")?;
    if dims.next().is_some() {
        return Err(Error::Format("csv header must be exactly rows,cols".into()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        for tok in t.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| {
                Error::Format(format!("bad number {tok:?} on data line {}", lineno + 1))
            })?;
            data.push(v);
        }
    }
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn write_binary(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic; not a CSKM matrix file".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut dim = [0u8; 8];
    r.read_exact(&mut dim)?;
    let rows = u64::from_le_bytes(dim) as usize;
    r.read_exact(&mut dim)?;
    let cols = u64::from_le_bytes(dim) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    // Reject trailing garbage.
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after matrix data".into()));
    }
    DenseMatrix::from_vec(rows, cols, data)
}

/// Reads either format, deciding by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut head = [0u8; 4];
    let n = File::open(path)?.read(&mut head)?;
    if n == 4 && &head == MAGIC {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

/// Writes CSV when the extension is `.csv` (case-insensitive), binary
/// otherwise.
pub fn write_matrix(m: &DenseMatrix, path: &Path) -> Result<()> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        write_csv(m, path)
    } else {
        write_binary(m, path)
    }
}

fn parse_dim(tok: Option<&str>, name: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Format(format!("missing {name} in header")))?
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {name} in header")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("l1sketch-io-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn csv_round_trip_exact() {
        let mut rng = RngStream::new(2, 0);
        let m = DenseMatrix::from_vec(5, 3, rng.fill_cauchy(15)).unwrap();
        let p = tmp("rt.csv");
        write_csv(&m, &p).unwrap();
        let back = read_csv(&p).unwrap();
        assert_eq!(m, back);
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn binary_round_trip_exact() {
        let mut rng = RngStream::new(3, 0);
        let m = DenseMatrix::from_vec(7, 2, rng.fill_gaussian(14)).unwrap();
        let p = tmp("rt.bin");
        write_binary(&m, &p).unwrap();
        let back = read_binary(&p).unwrap();
        assert_eq!(m, back);
        std::fs::remove_file(&p).unwrap();
    }

    #[test]
    fn sniffing_picks_format() {
        let m = DenseMatrix::identity(3);
        let pc = tmp("sniff.csv");
        let pb = tmp("sniff.bin");
        write_matrix(&m, &pc).unwrap();
        write_matrix(&m, &pb).unwrap();
        assert_eq!(read_matrix(&pc).unwrap(), m);
        assert_eq!(read_matrix(&pb).unwrap(), m);
        // The csv file must actually be text.
        let text = std::fs::read_to_string(&pc).unwrap();
        assert!(text.starts_with("3,3"));
        std::fs::remove_file(&pc).unwrap();
        std::fs::remove_file(&pb).unwrap();
    }

    #[test]
    fn rejects_corrupt_files() {
        let p = tmp("bad.bin");
        std::fs::write(&p, b"CSKMxxxx").unwrap();
        assert!(read_matrix(&p).is_err());
        std::fs::remove_file(&p).unwrap();
        let p2 = tmp("bad.csv");
        std::fs::write(&p2, "2,2\n1,2\n3,oops\n").unwrap();
        assert!(read_matrix(&p2).is_err());
        std::fs::remove_file(&p2).unwrap();
    }
}
