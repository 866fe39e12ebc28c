//! Binary frame trace: a header (code id, R, SNR, seed) followed by frames of
//! packed bits and `f64` symbols, all little endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PASTRC01";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub code_id: String,
    pub se: f64,
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub index: u64,
    pub bits: Vec<u8>,
    pub symbols: Vec<f64>,
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> Result<Self> {
        out.write_all(MAGIC)?;
        out.write_all(&(header.code_id.len() as u32).to_le_bytes())?;
        out.write_all(header.code_id.as_bytes())?;
        out.write_all(&header.se.to_le_bytes())?;
        out.write_all(&header.snr_db.to_le_bytes())?;
        out.write_all(&header.seed.to_le_bytes())?;
        Ok(TraceWriter { out })
    }

    pub fn write(&mut self, frame: &FrameTrace) -> Result<()> {
        self.out.write_all(&frame.index.to_le_bytes())?;
        self.out
            .write_all(&(frame.bits.len() as u32).to_le_bytes())?;
        let mut packed = vec![0u8; frame.bits.len().div_ceil(8)];
        for (i, &b) in frame.bits.iter().enumerate() {
            packed[i / 8] |= (b & 1) << (i % 8);
        }
        self.out.write_all(&packed)?;
        self.out
            .write_all(&(frame.symbols.len() as u32).to_le_bytes())?;
        for s in &frame.symbols {
            self.out.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub struct TraceReader<R: Read> {
    input: R,
    pub header: TraceHeader,
}

fn read_array<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

impl<R: Read> TraceReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        if &read_array::<8>(&mut input)? != MAGIC {
            return Err(Error::Parse("not a frame trace".into()));
        }
        let len = u32::from_le_bytes(read_array(&mut input)?) as usize;
        let mut id = vec![0u8; len];
        input.read_exact(&mut id)?;
        let code_id =
            String::from_utf8(id).map_err(|_| Error::Parse("code id is not UTF-8".into()))?;
        let se = f64::from_le_bytes(read_array(&mut input)?);
        let snr_db = f64::from_le_bytes(read_array(&mut input)?);
        let seed = u64::from_le_bytes(read_array(&mut input)?);
        Ok(TraceReader {
            input,
            header: TraceHeader {
                code_id,
                se,
                snr_db,
                seed,
            },
        })
    }

    /// Next frame, or `None` at a clean end of input.
    pub fn next_frame(&mut self) -> Result<Option<FrameTrace>> {
        let mut first = [0u8; 8];
        match self.input.read(&mut first[..1])? {
            0 => return Ok(None),
            _ => self.input.read_exact(&mut first[1..])?,
        }
        let index = u64::from_le_bytes(first);
        let nbits = u32::from_le_bytes(read_array(&mut self.input)?) as usize;
        let mut packed = vec![0u8; nbits.div_ceil(8)];
        self.input.read_exact(&mut packed)?;
        let bits = (0..nbits).map(|i| (packed[i / 8] >> (i % 8)) & 1).collect();
        let nsym = u32::from_le_bytes(read_array(&mut self.input)?) as usize;
        let symbols = (0..nsym)
            .map(|_| read_array(&mut self.input).map(f64::from_le_bytes))
            .collect::<Result<_>>()?;
        Ok(Some(FrameTrace {
            index,
            bits,
            symbols,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let header = TraceHeader {
            code_id: "abc".into(),
            se: 2.1,
            snr_db: 13.5,
            seed: 9,
        };
        let frames = vec![
            FrameTrace {
                index: 0,
                bits: vec![1, 0, 1, 1, 0, 0, 0, 1, 1],
                symbols: vec![-3.5, 1.25],
            },
            FrameTrace {
                index: 7,
                bits: vec![],
                symbols: vec![],
            },
        ];
        let mut w = TraceWriter::new(Vec::new(), &header).unwrap();
        for f in &frames {
            w.write(f).unwrap();
        }
        let buf = w.finish().unwrap();
        let mut r = TraceReader::new(buf.as_slice()).unwrap();
        assert_eq!(r.header, header);
        assert_eq!(r.next_frame().unwrap().as_ref(), Some(&frames[0]));
        assert_eq!(r.next_frame().unwrap().as_ref(), Some(&frames[1]));
        assert_eq!(r.next_frame().unwrap(), None);
    }
}
