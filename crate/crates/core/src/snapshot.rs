//! The "ASCL" binary container.
//!
//! Every file starts with the magic `ASCL`, then little-endian `u32` format
//! version, dimension and points per axis. Coefficient arrays are stored over
//! the half-spectrum: the last axis runs over FFT indices `0..=n/2`, the other
//! axes over all `n` indices, row-major; each coefficient is an `(re, im)`
//! pair of little-endian `f64`. The remaining modes follow from conjugate
//! symmetry.
//!
//! * snapshot: header, coefficients.
//! * symbol table: header, 8-byte kind tag, `nu`, then three coefficients per
//!   stored mode.
//! * checkpoint: header, `CHKP`, `lambda`, `kappa`, `gamma`, transport flag
//!   (`u8`), kind tag, `nu`, `dt`, step count (`u64`), the symbol triples for
//!   custom symbols only, forcing coefficients, state coefficients.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::constitutive::{MultiplierSymbol, SymbolKind, SymbolTable};
use crate::dynamics::{ForcingSpec, ModelParams, SimulationState};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"ASCL";
pub const FORMAT_VERSION: u32 = 1;
const CHECKPOINT_MAGIC: &[u8; 4] = b"CHKP";

fn stored_indices(grid: Grid) -> impl Iterator<Item = usize> {
    let n = grid.n();
    let outer = grid.len() / n;
    (0..outer).flat_map(move |o| (0..=n / 2).map(move |c| o * n + c))
}

fn write_header<W: Write>(w: &mut W, grid: Grid) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::Format("truncated data".into())
        } else {
            e.into()
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R) -> Result<Grid> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing ASCL magic".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let dim = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    Grid::new(dim, n).map_err(|e| Error::Format(e.to_string()))
}

fn expect_end<R: Read>(r: &mut R) -> Result<()> {
    let mut b = [0u8; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes".into())),
    }
}

fn write_complex<W: Write>(w: &mut W, z: Complex64) -> Result<()> {
    w.write_all(&z.re.to_le_bytes())?;
    w.write_all(&z.im.to_le_bytes())?;
    Ok(())
}

fn read_complex<R: Read>(r: &mut R) -> Result<Complex64> {
    Ok(Complex64::new(read_f64(r)?, read_f64(r)?))
}

fn write_tag<W: Write>(w: &mut W, kind: SymbolKind) -> Result<()> {
    let mut tag = [0u8; 8];
    let t = kind.tag().as_bytes();
    tag[..t.len()].copy_from_slice(t);
    w.write_all(&tag)?;
    Ok(())
}

fn read_tag<R: Read>(r: &mut R) -> Result<SymbolKind> {
    let mut tag = [0u8; 8];
    read_exact(r, &mut tag)?;
    let end = tag.iter().position(|&b| b == 0).unwrap_or(8);
    std::str::from_utf8(&tag[..end])
        .ok()
        .and_then(SymbolKind::from_tag)
        .ok_or_else(|| Error::Format(format!("unknown symbol tag {tag:?}")))
}

fn write_coeffs<W: Write>(w: &mut W, f: &SpectralField) -> Result<()> {
    for i in stored_indices(f.grid()) {
        write_complex(w, f.coeffs()[i])?;
    }
    Ok(())
}

fn read_coeffs<R: Read>(r: &mut R, grid: Grid) -> Result<SpectralField> {
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut stored = vec![false; grid.len()];
    for i in stored_indices(grid) {
        c[i] = read_complex(r)?;
        stored[i] = true;
    }
    for i in 0..grid.len() {
        if !stored[i] {
            c[i] = c[grid.neg_index(i)].conj();
        }
    }
    SpectralField::from_coeffs(grid, c).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_snapshot<W: Write>(f: &SpectralField, mut w: W) -> Result<()> {
    write_header(&mut w, f.grid())?;
    write_coeffs(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpectralField> {
    let grid = read_header(&mut r)?;
    let f = read_coeffs(&mut r, grid)?;
    expect_end(&mut r)?;
    Ok(f)
}

pub fn save_snapshot(f: &SpectralField, path: &Path) -> Result<()> {
    write_snapshot(f, BufWriter::new(File::create(path)?))
}

pub fn load_snapshot(path: &Path) -> Result<SpectralField> {
    read_snapshot(BufReader::new(File::open(path)?))
}

fn write_table_values<W: Write>(w: &mut W, t: &SymbolTable) -> Result<()> {
    for i in stored_indices(t.grid()) {
        for z in t.values()[i] {
            write_complex(w, z)?;
        }
    }
    Ok(())
}

fn read_table_values<R: Read>(r: &mut R, grid: Grid) -> Result<Vec<[Complex64; 3]>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut v = vec![[zero; 3]; grid.len()];
    let mut stored = vec![false; grid.len()];
    for i in stored_indices(grid) {
        for z in v[i].iter_mut() {
            *z = read_complex(r)?;
        }
        stored[i] = true;
    }
    for i in 0..grid.len() {
        if !stored[i] {
            let m = v[grid.neg_index(i)];
            v[i] = [m[0].conj(), m[1].conj(), m[2].conj()];
        }
    }
    Ok(v)
}

pub fn write_symbol_table<W: Write>(t: &SymbolTable, mut w: W) -> Result<()> {
    write_header(&mut w, t.grid())?;
    write_tag(&mut w, t.kind())?;
    w.write_all(&t.nu().to_le_bytes())?;
    write_table_values(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn read_symbol_table<R: Read>(mut r: R) -> Result<SymbolTable> {
    let grid = read_header(&mut r)?;
    let kind = read_tag(&mut r)?;
    let nu = read_f64(&mut r)?;
    let values = read_table_values(&mut r, grid)?;
    expect_end(&mut r)?;
    SymbolTable::from_parts(grid, kind, nu, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_symbol_table(t: &SymbolTable, path: &Path) -> Result<()> {
    write_symbol_table(t, BufWriter::new(File::create(path)?))
}

pub fn load_symbol_table(path: &Path) -> Result<SymbolTable> {
    read_symbol_table(BufReader::new(File::open(path)?))
}

pub fn write_checkpoint<W: Write>(state: &SimulationState, mut w: W) -> Result<()> {
    let grid = state.grid();
    let p = &state.params;
    write_header(&mut w, grid)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    for v in [p.lambda, p.kappa, p.gamma] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[p.nonlinear as u8])?;
    write_tag(&mut w, p.symbol.kind())?;
    w.write_all(&p.symbol.nu().to_le_bytes())?;
    w.write_all(&state.dt.to_le_bytes())?;
    w.write_all(&state.step.to_le_bytes())?;
    if let MultiplierSymbol::Custom(t) = &p.symbol {
        write_table_values(&mut w, t)?;
    }
    write_coeffs(&mut w, state.forcing.field())?;
    write_coeffs(&mut w, &state.theta)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SimulationState> {
    let grid = read_header(&mut r)?;
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint".into()));
    }
    let lambda = read_f64(&mut r)?;
    let kappa = read_f64(&mut r)?;
    let gamma = read_f64(&mut r)?;
    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag)?;
    let kind = read_tag(&mut r)?;
    let nu = read_f64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let step = read_u64(&mut r)?;
    let symbol = match kind {
        SymbolKind::Sqg => MultiplierSymbol::Sqg,
        SymbolKind::Mg => MultiplierSymbol::mg(nu)?,
        SymbolKind::Custom => {
            let values = read_table_values(&mut r, grid)?;
            MultiplierSymbol::Custom(Arc::new(SymbolTable::custom(grid, nu, values)?))
        }
    };
    let mut params = ModelParams::new(lambda, kappa, gamma, symbol)?;
    params.nonlinear = match flag[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad transport flag {b}"))),
    };
    let forcing = read_coeffs(&mut r, grid)?;
    let theta = read_coeffs(&mut r, grid)?;
    expect_end(&mut r)?;
    let forcing = ForcingSpec::new(forcing, &params.symbol)?;
    SimulationState::restore(params, forcing, theta, dt, step)
}

pub fn save_checkpoint(state: &SimulationState, path: &Path) -> Result<()> {
    write_checkpoint(state, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<SimulationState> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::random_smooth;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        for dim in [2, 3] {
            let g = Grid::new(dim, 8).unwrap();
            let f = random_smooth(g, 9, 1.5, 1.0).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&f, &mut buf).unwrap();
            let stored = if dim == 2 { 8 * 5 } else { 64 * 5 };
            assert_eq!(buf.len(), 16 + 16 * stored);
            assert_eq!(&buf[..4], b"ASCL");
            let back = read_snapshot(&buf[..]).unwrap();
            for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_data() {
        let g = Grid::new(2, 8).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&SpectralField::zeros(g), &mut buf).unwrap();
        assert!(matches!(read_snapshot(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&bad[..]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot(&long[..]).is_err());
        let mut v2 = buf;
        v2[4] = 2;
        assert!(read_snapshot(&v2[..]).is_err());
    }

    #[test]
    fn symbol_tables_round_trip() {
        let g3 = Grid::new(3, 8).unwrap();
        let mg = SymbolTable::build(&MultiplierSymbol::mg(0.5).unwrap(), g3).unwrap();
        let mut buf = Vec::new();
        write_symbol_table(&mg, &mut buf).unwrap();
        assert_eq!(&buf[16..18], b"MG");
        assert_eq!(read_symbol_table(&buf[..]).unwrap(), mg);
        let g2 = Grid::new(2, 8).unwrap();
        let sqg = SymbolTable::build(&MultiplierSymbol::Sqg, g2).unwrap();
        let custom = SymbolTable::custom(g2, 0.0, sqg.values().to_vec()).unwrap();
        let mut buf = Vec::new();
        write_symbol_table(&custom, &mut buf).unwrap();
        assert_eq!(read_symbol_table(&buf[..]).unwrap(), custom);
    }
}
