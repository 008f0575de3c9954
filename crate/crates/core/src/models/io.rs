//! Versioned binary model files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "ENVXMODL"
//! 8       4     u32 format version (= 1)
//! 12      1     u8 architecture tag: 1 = FCN, 2 = CNN
//! 13      4     u32 input length d
//! FCN:    4     u32 number of hidden layers H, then H × u32 widths
//! CNN:    4+4+4 u32 kernel, u32 stride, u32 pool
//!         4     u32 number of blocks B, then B × u32 channel counts
//! ...     8     u64 training seed
//! ...     4     u32 epochs
//! ...     8     f64 final training loss
//! ...     8     u64 parameter count P
//! ...     8·P   f64 parameters in network order
//! ```
//!
//! Parameter order: FCN layers input to output, each as a row-major
//! `out × in` weight matrix followed by its bias; CNN blocks as
//! `out × in × kernel` weights then biases, followed by the dense weights and
//! the dense bias.

use std::io::{Read, Write};
use std::path::Path;

use super::{Architecture, CnnSpec, FcnSpec, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 8] = b"ENVXMODL";
pub const VERSION: u32 = 1;

const TAG_FCN: u8 = 1;
const TAG_CNN: u8 = 2;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn to_bytes<T: Real>(model: &TrainedModel<T>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64 + 8 * model.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    match model.architecture() {
        Architecture::Fcn(s) => {
            out.push(TAG_FCN);
            put_u32(&mut out, s.input_len)?;
            put_u32(&mut out, s.hidden.len())?;
            for &h in &s.hidden {
                put_u32(&mut out, h)?;
            }
        }
        Architecture::Cnn(s) => {
            out.push(TAG_CNN);
            put_u32(&mut out, s.input_len)?;
            put_u32(&mut out, s.kernel)?;
            put_u32(&mut out, s.stride)?;
            put_u32(&mut out, s.pool)?;
            put_u32(&mut out, s.channels.len())?;
            for &c in &s.channels {
                put_u32(&mut out, c)?;
            }
        }
    }
    out.extend_from_slice(&model.meta.seed.to_le_bytes());
    put_u32(&mut out, model.meta.epochs)?;
    out.extend_from_slice(&model.meta.final_loss.to_le_bytes());
    out.extend_from_slice(&(model.params().len() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.as_f64().to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated model file at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn list(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()?;
        if n > 1024 {
            return Err(Error::Format(format!("implausible layer count {n}")));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

pub fn from_bytes<T: Real>(buf: &[u8]) -> Result<TrainedModel<T>> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = c.u32()? as u32;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model format version {version}")));
    }
    let arch = match c.u8()? {
        TAG_FCN => {
            let input_len = c.u32()?;
            Architecture::Fcn(FcnSpec { input_len, hidden: c.list()? })
        }
        TAG_CNN => {
            let input_len = c.u32()?;
            let kernel = c.u32()?;
            let stride = c.u32()?;
            let pool = c.u32()?;
            Architecture::Cnn(CnnSpec { input_len, channels: c.list()?, kernel, stride, pool })
        }
        t => return Err(Error::Format(format!("unknown architecture tag {t}"))),
    };
    let meta = TrainingMeta { seed: c.u64()?, epochs: c.u32()?, final_loss: c.f64()? };
    let n = c.u64()? as usize;
    if n.checked_mul(8).is_none_or(|b| b != buf.len() - c.pos) {
        return Err(Error::Format(format!("parameter count {n} does not match file size")));
    }
    let params = (0..n).map(|_| c.f64().map(T::of)).collect::<Result<Vec<T>>>()?;
    TrainedModel::from_params(&arch, params, meta)
}

pub fn write<T: Real, W: Write>(model: &TrainedModel<T>, mut out: W) -> Result<()> {
    out.write_all(&to_bytes(model)?)?;
    Ok(())
}

pub fn read<T: Real, R: Read>(mut input: R) -> Result<TrainedModel<T>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

pub fn save<T: Real>(model: &TrainedModel<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<TrainedModel<T>> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = TrainedModel::<f64>::init(&Architecture::Fcn(FcnSpec { input_len: 4, hidden: vec![3] }), 7).unwrap();
        let b = to_bytes(&m).unwrap();
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        assert_eq!(b[12], TAG_FCN);
        assert_eq!(u32::from_le_bytes(b[13..17].try_into().unwrap()), 4);
        // 4·3+3 + 3·1+1 parameters
        let n = m.params().len();
        assert_eq!(n, 19);
        assert_eq!(b.len(), 17 + 4 + 4 + 8 + 4 + 8 + 8 + 8 * n);
    }

    #[test]
    fn rejects_corruption() {
        let m = TrainedModel::<f64>::init(&Architecture::Cnn(CnnSpec::new(512)), 1).unwrap();
        let mut b = to_bytes(&m).unwrap();
        assert!(from_bytes::<f64>(&b[..b.len() - 3]).is_err());
        b[0] = b'X';
        assert!(from_bytes::<f64>(&b).is_err());
        let mut b = to_bytes(&m).unwrap();
        b[8] = 9;
        assert!(from_bytes::<f64>(&b).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip(seed in any::<u64>(), cnn in any::<bool>()) {
            let arch = if cnn { Architecture::Cnn(CnnSpec::new(512)) } else { Architecture::Fcn(FcnSpec::new(32)) };
            let mut m = TrainedModel::<f64>::init(&arch, seed).unwrap();
            m.meta = TrainingMeta { seed, epochs: 3, final_loss: 0.25 };
            let back: TrainedModel<f64> = from_bytes(&to_bytes(&m).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
