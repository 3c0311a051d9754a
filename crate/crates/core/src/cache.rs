//! Binary persistence of local spectra.
//!
//! Layout, all little-endian:
//!
//! ```text
//! header : magic "LCMSPEC\0", version u64, sigma f64, tau f64, floor f64, count u64
//! record : p f64, K f64, len f64, eigenvalues f64 x len, overlap f64
//! ```

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::arith::SpectralParams;
use crate::error::{Error, Result};
use crate::global::GlobalSpectrumTable;
use crate::local::{truncation_tail_bound, LocalSpectrum};

const MAGIC: &[u8; 8] = b"LCMSPEC\0";
pub const FORMAT_VERSION: u64 = 1;

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "LCM_SPECTRA_CACHE_DIR";

fn io_err(e: io::Error) -> Error {
    Error::Cache(e.to_string())
}

pub fn write_spectra(path: &Path, params: &SpectralParams, floor: f64, spectra: &[LocalSpectrum]) -> Result<()> {
    if let Some(bad) = spectra.iter().find(|s| s.params != *params || s.floor != floor) {
        return Err(Error::Cache(format!("spectrum at p = {} has different parameters", bad.p)));
    }
    let mut out = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    let mut put = |bytes: [u8; 8]| out.write_all(&bytes).map_err(io_err);
    put(*MAGIC)?;
    put(FORMAT_VERSION.to_le_bytes())?;
    put(params.sigma().to_le_bytes())?;
    put(params.tau().to_le_bytes())?;
    put(floor.to_le_bytes())?;
    put((spectra.len() as u64).to_le_bytes())?;
    for s in spectra {
        put(s.p.to_le_bytes())?;
        put((s.truncation_order as f64).to_le_bytes())?;
        put((s.eigenvalues.len() as f64).to_le_bytes())?;
        for v in &s.eigenvalues {
            put(v.to_le_bytes())?;
        }
        put(s.top_overlap.to_le_bytes())?;
    }
    out.flush().map_err(io_err)
}

pub fn read_spectra(path: &Path) -> Result<(SpectralParams, f64, Vec<LocalSpectrum>)> {
    let mut input = BufReader::new(fs::File::open(path).map_err(io_err)?);
    let mut word = || -> Result<[u8; 8]> {
        let mut buf = [0u8; 8];
        input.read_exact(&mut buf).map_err(io_err)?;
        Ok(buf)
    };
    if &word()? != MAGIC {
        return Err(Error::Cache(format!("{} is not a local-spectrum cache", path.display())));
    }
    let version = u64::from_le_bytes(word()?);
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let sigma = f64::from_le_bytes(word()?);
    let tau = f64::from_le_bytes(word()?);
    let params = SpectralParams::new(sigma, tau)?;
    let floor = f64::from_le_bytes(word()?);
    let count = u64::from_le_bytes(word()?);
    let mut spectra = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let p = f64::from_le_bytes(word()?);
        let order = f64::from_le_bytes(word()?) as usize;
        let len = f64::from_le_bytes(word()?) as usize;
        if len > order {
            return Err(Error::Cache(format!("record at p = {p} holds {len} values for order {order}")));
        }
        let eigenvalues = (0..len).map(|_| word().map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
        let top_overlap = f64::from_le_bytes(word()?);
        spectra.push(LocalSpectrum {
            p,
            params,
            truncation_order: order,
            floor,
            eigenvalues,
            top_overlap,
            tail_bound: truncation_tail_bound(p, &params, order),
        });
    }
    Ok((params, floor, spectra))
}

/// File name keyed by `(sigma, tau, floor, p_max)`, using the exact bit patterns.
pub fn cache_file_name(params: &SpectralParams, floor: f64, p_max: u64) -> String {
    format!(
        "local-{:016x}-{:016x}-{:016x}-{p_max}.bin",
        params.sigma().to_bits(),
        params.tau().to_bits(),
        floor.to_bits()
    )
}

/// Loads the table from `dir` when a matching file exists, otherwise builds it
/// and writes the file. Without a directory this is [`GlobalSpectrumTable::build`].
pub fn load_or_build(dir: Option<&Path>, params: &SpectralParams, p_max: u64, floor: f64) -> Result<GlobalSpectrumTable> {
    let Some(dir) = dir else {
        return GlobalSpectrumTable::build(params, p_max, floor);
    };
    let path: PathBuf = dir.join(cache_file_name(params, floor, p_max));
    if path.exists() {
        let (cached_params, cached_floor, spectra) = read_spectra(&path)?;
        if cached_params != *params || cached_floor != floor {
            return Err(Error::Cache(format!("{} holds a different parameter set", path.display())));
        }
        return GlobalSpectrumTable::from_locals(params, p_max, floor, spectra);
    }
    let table = GlobalSpectrumTable::build(params, p_max, floor)?;
    fs::create_dir_all(dir).map_err(io_err)?;
    // write to a temporary name first so concurrent readers never see a partial file
    let tmp = dir.join(format!("{}.tmp{}", cache_file_name(params, floor, p_max), std::process::id()));
    write_spectra(&tmp, params, floor, table.locals())?;
    fs::rename(&tmp, &path).map_err(io_err)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::{local_spectrum, DEFAULT_FLOOR};

    fn scratch_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("lcm-spectra-cache-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = scratch_dir("roundtrip");
        let params = SpectralParams::new(0.25, 1.5).unwrap();
        let spectra: Vec<LocalSpectrum> =
            [2.0, 3.0, 5.0].iter().map(|&p| local_spectrum(p, &params, DEFAULT_FLOOR).unwrap()).collect();
        let path = dir.join("s.bin");
        write_spectra(&path, &params, DEFAULT_FLOOR, &spectra).unwrap();
        let (p2, floor, back) = read_spectra(&path).unwrap();
        assert_eq!(p2, params);
        assert_eq!(floor, DEFAULT_FLOOR);
        assert_eq!(back, spectra);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn rejects_foreign_and_truncated_files() {
        let dir = scratch_dir("reject");
        let junk = dir.join("junk.bin");
        fs::write(&junk, b"not a cache file at all").unwrap();
        assert!(matches!(read_spectra(&junk), Err(Error::Cache(_))));
        let params = SpectralParams::new(0.25, 1.5).unwrap();
        let s = local_spectrum(2.0, &params, DEFAULT_FLOOR).unwrap();
        let path = dir.join("t.bin");
        write_spectra(&path, &params, DEFAULT_FLOOR, &[s]).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_spectra(&path), Err(Error::Cache(_))));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn load_or_build_reuses_file() {
        let dir = scratch_dir("reuse");
        let params = SpectralParams::new(0.25, 1.5).unwrap();
        let built = load_or_build(Some(&dir), &params, 200, DEFAULT_FLOOR).unwrap();
        let file = dir.join(cache_file_name(&params, DEFAULT_FLOOR, 200));
        assert!(file.exists());
        let loaded = load_or_build(Some(&dir), &params, 200, DEFAULT_FLOOR).unwrap();
        assert_eq!(built.lambda0(), loaded.lambda0());
        assert_eq!(built.locals(), loaded.locals());
        fs::remove_dir_all(dir).unwrap();
    }
}
