//! CVG1 checkpoint format.
//!
//! Layout: magic "CVG1", u32 tensor count, then per tensor: u16 name
//! length, UTF-8 name, u8 dtype tag (0 = f32, 1 = f64), u8 rank, rank x
//! u32 dims, row-major little-endian payload. Stores the config echo,
//! normalization statistics, every layer parameter, batch-normalization
//! ring buffers, and Adam moments with the step counter.

use std::collections::BTreeMap;
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};
use ndarray::Array1;

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::layers::{BatchStats, ComplexBatchNorm};

use super::adam::{AdamHyper, AdamState};
use super::discriminator::Discriminator;
use super::generator::Generator;
use super::train::TrainedModel;
use super::{TrainMode, TrainingConfig};

pub const CKPT_MAGIC: [u8; 4] = *b"CVG1";

const DTYPE_F32: u8 = 0;
const DTYPE_F64: u8 = 1;

struct Writer {
    buf: Vec<u8>,
    count: u32,
}

impl Writer {
    fn new() -> Self {
        Self {
            buf: Vec::new(),
            count: 0,
        }
    }

    fn tensor(&mut self, name: &str, shape: &[usize], data: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.buf
            .write_u16::<LittleEndian>(name.len() as u16)
            .unwrap();
        self.buf.extend_from_slice(name.as_bytes());
        self.buf.push(DTYPE_F64);
        self.buf.push(shape.len() as u8);
        for &d in shape {
            self.buf.write_u32::<LittleEndian>(d as u32).unwrap();
        }
        for &v in data {
            self.buf.write_f64::<LittleEndian>(v).unwrap();
        }
        self.count += 1;
    }

    fn scalar(&mut self, name: &str, v: f64) {
        self.tensor(name, &[], &[v]);
    }

    fn finish(self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.buf.len());
        out.extend_from_slice(&CKPT_MAGIC);
        out.write_u32::<LittleEndian>(self.count).unwrap();
        out.extend_from_slice(&self.buf);
        out
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn need(&self, n: usize) -> Result<()> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                expected: (self.pos + n) as u64,
                actual: self.bytes.len() as u64,
            });
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        self.need(n)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

type TensorMap = BTreeMap<String, (Vec<usize>, Vec<f64>)>;

fn bn_buffer_tensor(bn: &ComplexBatchNorm) -> (Vec<usize>, Vec<f64>) {
    let c = bn.channels();
    let n = bn.buffer_len();
    let mut data = Vec::with_capacity(n * c * 5);
    for stats in bn.buffered_stats() {
        for ch in 0..c {
            data.push(stats.mean_re[ch]);
            data.push(stats.mean_im[ch]);
            data.push(stats.v_rr[ch]);
            data.push(stats.v_ri[ch]);
            data.push(stats.v_ii[ch]);
        }
    }
    (vec![n, c, 5], data)
}

fn bn_buffer_restore(bn: &mut ComplexBatchNorm, shape: &[usize], data: &[f64]) -> Result<()> {
    if shape.len() != 3 || shape[1] != bn.channels() || shape[2] != 5 {
        return Err(Error::CheckpointInvalid {
            reason: format!("bad normalizer buffer shape {shape:?}"),
        });
    }
    let (n, c) = (shape[0], shape[1]);
    let mut entries = Vec::with_capacity(n);
    for e in 0..n {
        let mut stats = BatchStats {
            mean_re: Array1::zeros(c),
            mean_im: Array1::zeros(c),
            v_rr: Array1::zeros(c),
            v_ri: Array1::zeros(c),
            v_ii: Array1::zeros(c),
        };
        for ch in 0..c {
            let base = (e * c + ch) * 5;
            stats.mean_re[ch] = data[base];
            stats.mean_im[ch] = data[base + 1];
            stats.v_rr[ch] = data[base + 2];
            stats.v_ri[ch] = data[base + 3];
            stats.v_ii[ch] = data[base + 4];
        }
        entries.push(stats);
    }
    bn.restore_buffer(entries);
    Ok(())
}

fn write_adam(w: &mut Writer, prefix: &str, adam: &AdamState) {
    w.scalar(&format!("{prefix}.step"), adam.step as f64);
    for (i, m) in adam.m.iter().enumerate() {
        w.tensor(&format!("{prefix}.m.{i:03}"), &[m.len()], m);
    }
    for (i, v) in adam.v.iter().enumerate() {
        w.tensor(&format!("{prefix}.v.{i:03}"), &[v.len()], v);
    }
}

/// Serializes a trained model plus the input normalization it assumed.
pub fn encode(model: &TrainedModel, norm: &NormStats) -> Vec<u8> {
    let mut w = Writer::new();
    let c = &model.config;
    w.scalar("config.patch_size", c.patch_size as f64);
    w.scalar("config.lr", c.lr);
    w.scalar("config.beta1", c.beta1);
    w.scalar("config.beta2", c.beta2);
    w.scalar("config.batch_size", c.batch_size as f64);
    w.scalar("config.epochs", c.epochs as f64);
    w.scalar("config.m", c.m as f64);
    w.scalar("config.latent_width", c.latent_width as f64);
    w.scalar("config.seed", c.seed as f64);
    w.scalar(
        "config.mode",
        match c.mode {
            TrainMode::Semisup => 0.0,
            TrainMode::Supervised => 1.0,
        },
    );
    w.scalar("config.k", c.k as f64);
    w.scalar("config.in_channels", c.in_channels as f64);
    let gch: Vec<f64> = c.g_channels.iter().map(|&v| v as f64).collect();
    let dch: Vec<f64> = c.d_channels.iter().map(|&v| v as f64).collect();
    w.tensor("config.g_channels", &[gch.len()], &gch);
    w.tensor("config.d_channels", &[dch.len()], &dch);

    let flat_norm = |v: &Vec<[f64; 2]>| -> Vec<f64> { v.iter().flatten().cloned().collect() };
    w.tensor("norm.mean", &[norm.mean.len(), 2], &flat_norm(&norm.mean));
    w.tensor("norm.std", &[norm.std.len(), 2], &flat_norm(&norm.std));

    for (name, shape, data) in model.discriminator.named_params() {
        w.tensor(&name, &shape, data);
    }
    {
        // buffered statistics need a non-mut walk; named order mirrors stages
        let mut d_bn_idx = Vec::new();
        for (i, stage) in model.discriminator.stages.iter().enumerate() {
            if let Some(bn) = &stage.bn {
                d_bn_idx.push((i, bn));
            }
        }
        for (i, bn) in d_bn_idx {
            let (shape, data) = bn_buffer_tensor(bn);
            w.tensor(&format!("d.stage{i}.bn.buffer"), &shape, &data);
        }
    }
    write_adam(&mut w, "adam_d", &model.adam_d);

    if let Some(g) = &model.generator {
        for (name, shape, data) in g.named_params() {
            w.tensor(&name, &shape, data);
        }
        for (i, stage) in g.stages.iter().enumerate() {
            let (shape, data) = bn_buffer_tensor(&stage.bn);
            w.tensor(&format!("g.stage{i}.bn.buffer"), &shape, &data);
        }
        if let Some(adam_g) = &model.adam_g {
            write_adam(&mut w, "adam_g", adam_g);
        }
    }
    w.finish()
}

/// Parses a CVG1 byte stream into a name -> (shape, data) map.
pub fn decode(bytes: &[u8]) -> Result<TensorMap> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != CKPT_MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(magic);
        return Err(Error::BadMagic {
            expected: CKPT_MAGIC,
            found,
        });
    }
    let count = r.u32()?;
    let mut map = TensorMap::new();
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| {
            Error::CheckpointInvalid {
                reason: "tensor name is not UTF-8".into(),
            }
        })?;
        let dtype = r.u8()?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        match dtype {
            DTYPE_F64 => {
                for _ in 0..len {
                    data.push(r.f64()?);
                }
            }
            DTYPE_F32 => {
                for _ in 0..len {
                    data.push(r.f32()? as f64);
                }
            }
            other => {
                return Err(Error::CheckpointInvalid {
                    reason: format!("unknown dtype tag {other} for tensor {name:?}"),
                })
            }
        }
        map.insert(name, (shape, data));
    }
    Ok(map)
}

fn field(map: &TensorMap, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    map.get(name)
        .cloned()
        .ok_or_else(|| Error::CheckpointFieldMissing { name: name.into() })
}

fn scalar(map: &TensorMap, name: &str) -> Result<f64> {
    let (_, data) = field(map, name)?;
    data.first().copied().ok_or(Error::CheckpointInvalid {
        reason: format!("scalar {name:?} is empty"),
    })
}

fn usize_scalar(map: &TensorMap, name: &str) -> Result<usize> {
    Ok(scalar(map, name)? as usize)
}

fn load_params_into(
    map: &TensorMap,
    names: &[String],
    mut params: Vec<&mut [f64]>,
) -> Result<()> {
    for (name, slot) in names.iter().zip(params.iter_mut()) {
        let (_, data) = field(map, name)?;
        if data.len() != slot.len() {
            return Err(Error::CheckpointInvalid {
                reason: format!(
                    "tensor {name:?} has {} elements, expected {}",
                    data.len(),
                    slot.len()
                ),
            });
        }
        slot.copy_from_slice(&data);
    }
    Ok(())
}

fn load_adam(map: &TensorMap, prefix: &str, lens: &[usize], hyper: AdamHyper) -> Result<AdamState> {
    let mut adam = AdamState::new(hyper, lens);
    adam.step = scalar(map, &format!("{prefix}.step"))? as u64;
    for (i, m) in adam.m.iter_mut().enumerate() {
        let (_, data) = field(map, &format!("{prefix}.m.{i:03}"))?;
        if data.len() != m.len() {
            return Err(Error::CheckpointInvalid {
                reason: format!("{prefix}.m.{i:03} length mismatch"),
            });
        }
        m.copy_from_slice(&data);
    }
    for (i, v) in adam.v.iter_mut().enumerate() {
        let (_, data) = field(map, &format!("{prefix}.v.{i:03}"))?;
        if data.len() != v.len() {
            return Err(Error::CheckpointInvalid {
                reason: format!("{prefix}.v.{i:03} length mismatch"),
            });
        }
        v.copy_from_slice(&data);
    }
    Ok(adam)
}

/// Rebuilds the trained model and normalization statistics from CVG1 bytes.
pub fn decode_model(bytes: &[u8]) -> Result<(TrainedModel, NormStats)> {
    let map = decode(bytes)?;

    let mode = match scalar(&map, "config.mode")? as i64 {
        0 => TrainMode::Semisup,
        1 => TrainMode::Supervised,
        other => {
            return Err(Error::CheckpointInvalid {
                reason: format!("unknown mode tag {other}"),
            })
        }
    };
    let to_usize = |v: &f64| *v as usize;
    let config = TrainingConfig {
        patch_size: usize_scalar(&map, "config.patch_size")?,
        lr: scalar(&map, "config.lr")?,
        beta1: scalar(&map, "config.beta1")?,
        beta2: scalar(&map, "config.beta2")?,
        batch_size: usize_scalar(&map, "config.batch_size")?,
        epochs: usize_scalar(&map, "config.epochs")?,
        m: usize_scalar(&map, "config.m")?,
        latent_width: usize_scalar(&map, "config.latent_width")?,
        seed: scalar(&map, "config.seed")? as u64,
        mode,
        k: usize_scalar(&map, "config.k")?,
        in_channels: usize_scalar(&map, "config.in_channels")?,
        g_channels: field(&map, "config.g_channels")?.1.iter().map(to_usize).collect(),
        d_channels: field(&map, "config.d_channels")?.1.iter().map(to_usize).collect(),
    };
    config.validate()?;

    let (norm_shape, norm_mean) = field(&map, "norm.mean")?;
    let (_, norm_std) = field(&map, "norm.std")?;
    if norm_shape.len() != 2 || norm_shape[1] != 2 {
        return Err(Error::CheckpointInvalid {
            reason: format!("norm.mean has shape {norm_shape:?}"),
        });
    }
    let unflatten = |v: &[f64]| -> Vec<[f64; 2]> {
        v.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    };
    let norm = NormStats {
        mean: unflatten(&norm_mean),
        std: unflatten(&norm_std),
    };

    // Parameter layout is dictated by the architecture in the config echo;
    // the init RNG is immediately overwritten.
    let mut init_rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let mut discriminator = Discriminator::new(
        &mut init_rng,
        config.in_channels,
        &config.d_channels,
        config.k,
        config.patch_size,
        config.m,
    )?;
    let d_names: Vec<String> = discriminator
        .named_params()
        .into_iter()
        .map(|(n, _, _)| n)
        .collect();
    load_params_into(&map, &d_names, discriminator.params_mut())?;
    for (i, bn) in discriminator.batchnorms_mut() {
        let (shape, data) = field(&map, &format!("d.stage{i}.bn.buffer"))?;
        bn_buffer_restore(bn, &shape, &data)?;
    }
    let hyper = AdamHyper::new(config.lr, config.beta1, config.beta2);
    let adam_d = load_adam(&map, "adam_d", &discriminator.param_lens(), hyper)?;

    let (generator, adam_g) = if mode == TrainMode::Semisup {
        let mut g = Generator::new(
            &mut init_rng,
            config.latent_width,
            &config.g_channels,
            config.in_channels,
            config.patch_size,
            config.m,
        )?;
        let g_names: Vec<String> = g.named_params().into_iter().map(|(n, _, _)| n).collect();
        load_params_into(&map, &g_names, g.params_mut())?;
        for (i, bn) in g.batchnorms_mut() {
            let (shape, data) = field(&map, &format!("g.stage{i}.bn.buffer"))?;
            bn_buffer_restore(bn, &shape, &data)?;
        }
        let adam_g = load_adam(&map, "adam_g", &g.param_lens(), hyper)?;
        (Some(g), Some(adam_g))
    } else {
        (None, None)
    };

    Ok((
        TrainedModel {
            config,
            discriminator,
            generator,
            adam_d,
            adam_g,
            epoch_log: Vec::new(),
        },
        norm,
    ))
}

pub fn save(path: &Path, model: &TrainedModel, norm: &NormStats) -> Result<()> {
    std::fs::write(path, encode(model, norm))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(TrainedModel, NormStats)> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::train::{train, TrainInputs};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained_toy(mode: TrainMode) -> (TrainedModel, NormStats) {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let mut labeled = Vec::new();
        for class in 1..=2usize {
            for _ in 0..4 {
                let mut p = ComplexTensor::zeros(&[6, 8, 8]);
                for v in p.re.iter_mut().chain(p.im.iter_mut()) {
                    *v = class as f64 + rng.random_range(-0.4..0.4);
                }
                labeled.push((p, class));
            }
        }
        let unlabeled: Vec<ComplexTensor> = (0..4)
            .map(|_| {
                let mut p = ComplexTensor::zeros(&[6, 8, 8]);
                for v in p.re.iter_mut().chain(p.im.iter_mut()) {
                    *v = rng.random_range(-1.0..1.0);
                }
                p
            })
            .collect();
        let config = TrainingConfig {
            patch_size: 8,
            batch_size: 4,
            epochs: 1,
            m: 2,
            latent_width: 5,
            k: 2,
            mode,
            g_channels: vec![4],
            d_channels: vec![4],
            ..TrainingConfig::default()
        };
        let model = train(
            &config,
            &TrainInputs {
                labeled: &labeled,
                unlabeled: &unlabeled,
            },
        )
        .unwrap();
        let norm = NormStats {
            mean: vec![[0.1, -0.2]; 6],
            std: vec![[1.5, 0.9]; 6],
        };
        (model, norm)
    }

    #[test]
    fn round_trip_bytes_are_identical() {
        let (model, norm) = trained_toy(TrainMode::Semisup);
        let bytes = encode(&model, &norm);
        let (back, norm2) = decode_model(&bytes).unwrap();
        assert_eq!(norm, norm2);
        let bytes2 = encode(&back, &norm2);
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn supervised_checkpoint_has_no_generator() {
        let (model, norm) = trained_toy(TrainMode::Supervised);
        assert!(model.generator.is_none());
        let bytes = encode(&model, &norm);
        let (back, _) = decode_model(&bytes).unwrap();
        assert!(back.generator.is_none());
        assert_eq!(back.adam_d.step, model.adam_d.step);
    }

    #[test]
    fn corrupt_magic_and_truncation() {
        let (model, norm) = trained_toy(TrainMode::Supervised);
        let bytes = encode(&model, &norm);
        let mut bad = bytes.clone();
        bad[0] = b'Z';
        assert!(matches!(decode(&bad), Err(Error::BadMagic { .. })));
        assert!(matches!(
            decode(&bytes[..bytes.len() / 2]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn missing_field_is_named() {
        let (model, norm) = trained_toy(TrainMode::Supervised);
        let mut map = decode(&encode(&model, &norm)).unwrap();
        map.remove("norm.mean");
        // re-encode the map by hand
        let mut w = Writer::new();
        for (name, (shape, data)) in &map {
            w.tensor(name, shape, data);
        }
        let err = match decode_model(&w.finish()) {
            Err(e) => e,
            Ok(_) => panic!("expected a missing-field error"),
        };
        assert!(matches!(err, Error::CheckpointFieldMissing { ref name } if name == "norm.mean"));
    }

    use crate::ctensor::ComplexTensor;

    #[test]
    fn restored_model_predicts_identically() {
        let (mut model, norm) = trained_toy(TrainMode::Semisup);
        let bytes = encode(&model, &norm);
        let (mut back, _) = decode_model(&bytes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let patches: Vec<ComplexTensor> = (0..5)
            .map(|_| {
                let mut p = ComplexTensor::zeros(&[6, 8, 8]);
                for v in p.re.iter_mut().chain(p.im.iter_mut()) {
                    *v = rng.random_range(-1.0..1.0);
                }
                p
            })
            .collect();
        let a = crate::gan::predict_classes(&mut model.discriminator, &patches, 4).unwrap();
        let b = crate::gan::predict_classes(&mut back.discriminator, &patches, 4).unwrap();
        assert_eq!(a, b);
    }
}
