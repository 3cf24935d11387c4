//! Little-endian binary dump of channel realizations.
//!
//! Layout: three `u32` values `M`, `K`, `F`, followed by `M * K * F` complex
//! entries in row-major `[m][k][f]` order, each stored as two `f32` (real,
//! imaginary), i.e. numpy `complex64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::ChannelRealization;
use crate::linalg::CMat;
use crate::{Error, Result};

pub fn write_matrix_file(path: &Path, channel: &ChannelRealization) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let (m, k, f) = (channel.antennas(), channel.ues(), channel.frequency_units());
    for dim in [m, k, f] {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::InvalidArgument(format!("dimension {dim} exceeds u32")))?;
        out.write_all(&dim.to_le_bytes()).map_err(io)?;
    }
    for a in 0..m {
        for b in 0..k {
            for unit in &channel.units {
                let z = unit[(a, b)];
                out.write_all(&(z.re as f32).to_le_bytes()).map_err(io)?;
                out.write_all(&(z.im as f32).to_le_bytes()).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn read_matrix_file(path: &Path) -> Result<ChannelRealization> {
    let io = |e| Error::io(path, e);
    let mut input = BufReader::new(File::open(path).map_err(io)?);
    let mut word = [0u8; 4];
    let mut next = |input: &mut BufReader<File>| -> Result<[u8; 4]> {
        input.read_exact(&mut word).map_err(io)?;
        Ok(word)
    };
    let m = u32::from_le_bytes(next(&mut input)?) as usize;
    let k = u32::from_le_bytes(next(&mut input)?) as usize;
    let f = u32::from_le_bytes(next(&mut input)?) as usize;
    let mut units = vec![CMat::zeros(m, k); f];
    for a in 0..m {
        for b in 0..k {
            for unit in units.iter_mut() {
                let re = f32::from_le_bytes(next(&mut input)?);
                let im = f32::from_le_bytes(next(&mut input)?);
                unit[(a, b)] = Complex64::new(re as f64, im as f64);
            }
        }
    }
    Ok(ChannelRealization { units })
}
