//! The `TGF1` binary grid format and CSV export.
//!
//! Layout (little-endian): magic `b"TGF1"`, `u32 n`, `n × u32` sizes,
//! `n × f64` box half-widths, `u8` domain tag, then interleaved `f64`
//! `(re, im)` pairs in row-major order. Tag bit `0x80` marks the
//! multi-channel extension: a `u32` channel count follows the tag and
//! each sample stores its channels consecutively.

use super::{Domain, GridFunction, GridSpec};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"TGF1";
const MULTI_CHANNEL: u8 = 0x80;
/// Refuse headers that would allocate more than this many samples.
const MAX_SAMPLES: usize = 1 << 28;

/// Decoded contents of a TGF1 stream (any channel count).
#[derive(Debug, Clone, PartialEq)]
pub struct TgfData {
    pub spec: GridSpec,
    pub domain: Domain,
    pub channels: usize,
    /// Sample-major values: `values[sample * channels + c]`.
    pub values: Vec<Complex64>,
}

fn domain_tag(d: Domain) -> u8 {
    match d {
        Domain::Space => 0,
        Domain::Frequency => 1,
    }
}

/// Writes a single-channel grid function.
pub fn write_tgf<W: Write>(w: &mut W, f: &GridFunction) -> Result<()> {
    write_header(w, &f.spec, f.domain, None)?;
    write_values(w, &f.values)
}

/// Writes a multi-channel grid (`values[sample * channels + c]`).
pub fn write_tgf_channels<W: Write>(
    w: &mut W,
    spec: &GridSpec,
    domain: Domain,
    channels: usize,
    values: &[Complex64],
) -> Result<()> {
    if values.len() != spec.len() * channels {
        return Err(Error::ShapeMismatch("channel data length mismatch".into()));
    }
    write_header(w, spec, domain, Some(channels))?;
    write_values(w, values)
}

fn write_header<W: Write>(
    w: &mut W,
    spec: &GridSpec,
    domain: Domain,
    channels: Option<usize>,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    for &s in &spec.sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    for &l in &spec.box_half {
        w.write_all(&l.to_le_bytes())?;
    }
    match channels {
        None => w.write_all(&[domain_tag(domain)])?,
        Some(c) => {
            w.write_all(&[domain_tag(domain) | MULTI_CHANNEL])?;
            w.write_all(&(c as u32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_values<W: Write>(w: &mut W, values: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads any TGF1 stream.
pub fn read_tgf_data<R: Read>(r: &mut R) -> Result<TgfData> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad TGF1 magic".into()));
    }
    let n = read_u32(r)? as usize;
    if n == 0 || n > 8 {
        return Err(Error::Format(format!("implausible dimension {n}")));
    }
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        sizes.push(read_u32(r)? as usize);
    }
    let mut box_half = Vec::with_capacity(n);
    for _ in 0..n {
        box_half.push(read_f64(r)?);
    }
    let spec = GridSpec::new(sizes, box_half)
        .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let channels = if tag[0] & MULTI_CHANNEL != 0 {
        read_u32(r)? as usize
    } else {
        1
    };
    let domain = match tag[0] & !MULTI_CHANNEL {
        0 => Domain::Space,
        1 => Domain::Frequency,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let total = spec
        .len()
        .checked_mul(channels)
        .filter(|&t| t <= MAX_SAMPLES && channels > 0);
    let Some(total) = total else {
        return Err(Error::Format("sample count out of range".into()));
    };
    let mut bytes = vec![0u8; total * 16];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(TgfData {
        spec,
        domain,
        channels,
        values,
    })
}

/// Reads a single-channel grid function.
pub fn read_tgf<R: Read>(r: &mut R) -> Result<GridFunction> {
    let d = read_tgf_data(r)?;
    if d.channels != 1 {
        return Err(Error::Format(format!(
            "expected one channel, found {}",
            d.channels
        )));
    }
    GridFunction::from_values(&d.spec, d.values, d.domain)
}

/// CSV export: one row `x1,...,xn,re,im` per grid point.
pub fn write_csv<W: Write>(w: &mut W, f: &GridFunction) -> Result<()> {
    let n = f.spec.n();
    let header: Vec<String> = (1..=n)
        .map(|i| format!("x{i}"))
        .chain(["re".into(), "im".into()])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, v) in f.values.iter().enumerate() {
        let p = f.spec.point(i);
        let coords: Vec<String> = p.iter().map(|c| format!("{c:.17e}")).collect();
        writeln!(w, "{},{:.17e},{:.17e}", coords.join(","), v.re, v.im)?;
    }
    Ok(())
}
