//! Model file format: a little-endian u32 length prefix, the architecture
//! as JSON, then every parameter tensor as raw little-endian f64 in
//! declaration order (per block: conv weight then bias; then FC weight and
//! bias).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::encoder::{ConvLayer, EncoderArch, EncoderParams};
use crate::error::{Error, Result};

pub fn save_model(path: impl AsRef<Path>, params: &EncoderParams) -> Result<()> {
    let path = path.as_ref();
    let header = serde_json::to_vec(&params.arch)?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header);
    for tensor in params.flat_tensors() {
        for v in tensor {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EncoderParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |message: &str| Error::ModelFile {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 4 {
        return Err(fail("file too short for a header"));
    }
    let header_len = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    if bytes.len() < 4 + header_len {
        return Err(fail("truncated header"));
    }
    let arch: EncoderArch = serde_json::from_slice(&bytes[4..4 + header_len])?;
    arch.validate()?;

    let mut offset = 4 + header_len;
    let mut take = |count: usize| -> Result<Vec<f64>> {
        let need = count * 8;
        if bytes.len() < offset + need {
            return Err(Error::ModelFile {
                path: path.to_path_buf(),
                message: "truncated parameter data".into(),
            });
        }
        let out = bytes[offset..offset + need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        offset += need;
        Ok(out)
    };

    let mut conv = Vec::with_capacity(arch.conv_blocks.len());
    for (i, block) in arch.conv_blocks.iter().enumerate() {
        let in_c = if i == 0 {
            1
        } else {
            arch.conv_blocks[i - 1].out_channels
        };
        let fan_in = in_c * block.kernel.0 * block.kernel.1;
        let weight = Array2::from_shape_vec(
            (block.out_channels, fan_in),
            take(block.out_channels * fan_in)?,
        )
        .expect("shape matches length");
        let bias = Array1::from(take(block.out_channels)?);
        conv.push(ConvLayer { weight, bias });
    }
    let fc_weight = Array2::from_shape_vec(
        (arch.embedding_dim, arch.last_channels()),
        take(arch.embedding_dim * arch.last_channels())?,
    )
    .expect("shape matches length");
    let fc_bias = Array1::from(take(arch.embedding_dim)?);
    if offset != bytes.len() {
        return Err(fail("trailing bytes after parameter data"));
    }

    Ok(EncoderParams {
        arch,
        conv,
        fc_weight,
        fc_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_params;

    #[test]
    fn roundtrip_is_exact_and_deterministic() {
        let arch = EncoderArch::reduced(&[4, 8], 8);
        let params = init_params(&arch, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.model");
        let p2 = dir.path().join("b.model");
        save_model(&p1, &params).unwrap();
        save_model(&p2, &params).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());

        let back = load_model(&p1).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.model");
        fs::write(&p, [1, 2, 3]).unwrap();
        assert!(load_model(&p).is_err());

        let arch = EncoderArch::reduced(&[2], 4);
        let params = init_params(&arch, 1).unwrap();
        save_model(&p, &params).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 5);
        fs::write(&p, bytes).unwrap();
        assert!(load_model(&p).is_err());
    }
}
