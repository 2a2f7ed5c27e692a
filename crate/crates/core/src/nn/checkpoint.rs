//! Parameter checkpoints: a JSON manifest line followed by flat
//! little-endian f64 planes (Re plane then Im plane for complex tensors),
//! in layer order. Batch-norm running statistics are included so a loaded
//! network is ready for inference.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::{BnState, Layer, Network};
use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};
use crate::grad::Value;

const MAGIC: &str = "CVNNCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    magic: String,
    version: u32,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    /// 1 for real tensors, 2 for complex (planes stored Re then Im).
    planes: u8,
}

enum Slot<'a> {
    C(&'a ComplexTensor),
    R(&'a RealTensor),
}

fn collect(net: &Network) -> Vec<(String, Slot<'_>)> {
    let mut out: Vec<(String, Slot<'_>)> = Vec::new();
    for (i, layer) in net.layers.iter().enumerate() {
        match layer {
            Layer::Dense(d) => {
                out.push((format!("layer{i}.weight"), slot(&d.w)));
                out.push((format!("layer{i}.bias"), slot(&d.b)));
            }
            Layer::Conv2d(c) => {
                out.push((format!("layer{i}.kernels"), slot(&c.k)));
                out.push((format!("layer{i}.bias"), slot(&c.b)));
            }
            Layer::BatchNorm(BnState::Complex(bn)) => {
                out.push((format!("layer{i}.scale_rr"), Slot::R(&bn.scale_rr)));
                out.push((format!("layer{i}.scale_ri"), Slot::R(&bn.scale_ri)));
                out.push((format!("layer{i}.scale_ir"), Slot::R(&bn.scale_ir)));
                out.push((format!("layer{i}.scale_ii"), Slot::R(&bn.scale_ii)));
                out.push((format!("layer{i}.shift"), Slot::C(&bn.shift)));
                out.push((format!("layer{i}.running_mean"), Slot::C(&bn.running_mean)));
                out.push((format!("layer{i}.run_cov_rr"), Slot::R(&bn.run_cov_rr)));
                out.push((format!("layer{i}.run_cov_ri"), Slot::R(&bn.run_cov_ri)));
                out.push((format!("layer{i}.run_cov_ii"), Slot::R(&bn.run_cov_ii)));
            }
            Layer::BatchNorm(BnState::Real(bn)) => {
                out.push((format!("layer{i}.scale"), Slot::R(&bn.scale)));
                out.push((format!("layer{i}.shift"), Slot::R(&bn.shift)));
                out.push((format!("layer{i}.running_mean"), Slot::R(&bn.running_mean)));
                out.push((format!("layer{i}.running_var"), Slot::R(&bn.running_var)));
            }
            _ => {}
        }
    }
    out
}

fn slot(v: &Value) -> Slot<'_> {
    match v {
        Value::C(t) => Slot::C(t),
        Value::R(t) => Slot::R(t),
    }
}

/// Saves all parameters and batch-norm state of a network.
pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    let slots = collect(net);
    let manifest = Manifest {
        magic: MAGIC.into(),
        version: VERSION,
        entries: slots
            .iter()
            .map(|(name, s)| Entry {
                name: name.clone(),
                shape: match s {
                    Slot::C(t) => t.shape().to_vec(),
                    Slot::R(t) => t.shape().to_vec(),
                },
                planes: match s {
                    Slot::C(_) => 2,
                    Slot::R(_) => 1,
                },
            })
            .collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &manifest)
        .map_err(|e| Error::Format(format!("manifest: {e}")))?;
    w.write_all(b"\n")?;
    for (_, s) in &slots {
        match s {
            Slot::C(t) => {
                for z in t.data() {
                    w.write_all(&z.re.to_le_bytes())?;
                }
                for z in t.data() {
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
            Slot::R(t) => {
                for v in t.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_plane(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("checkpoint payload truncated".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Loads a checkpoint into a structurally matching network.
pub fn load_checkpoint(net: &mut Network, path: &Path) -> Result<()> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)
            .map_err(|_| Error::Format("missing checkpoint header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
    }
    let manifest: Manifest = serde_json::from_slice(&header)
        .map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if manifest.magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", manifest.magic)));
    }
    if manifest.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            manifest.version
        )));
    }

    // Decode tensors in manifest order, then write them back into the
    // network by name.
    let mut tensors: Vec<(String, Value)> = Vec::new();
    for e in &manifest.entries {
        let n: usize = e.shape.iter().product();
        match e.planes {
            1 => {
                let data = read_plane(&mut r, n)?;
                tensors.push((e.name.clone(), Value::R(RealTensor::from_vec(&e.shape, data)?)));
            }
            2 => {
                let re = read_plane(&mut r, n)?;
                let im = read_plane(&mut r, n)?;
                let t = ComplexTensor::from_planes(
                    &RealTensor::from_vec(&e.shape, re)?,
                    &RealTensor::from_vec(&e.shape, im)?,
                )?;
                tensors.push((e.name.clone(), Value::C(t)));
            }
            p => return Err(Error::Format(format!("bad plane count {p}"))),
        }
    }
    if r.read(&mut byte)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }

    let expected: Vec<String> = collect(net).iter().map(|(n, _)| n.clone()).collect();
    if expected.len() != tensors.len()
        || expected
            .iter()
            .zip(&tensors)
            .any(|(want, (got, _))| want != got)
    {
        return Err(Error::Format(
            "checkpoint does not match the network structure".into(),
        ));
    }

    let mut iter = tensors.into_iter();
    for (i, layer) in net.layers.iter_mut().enumerate() {
        let mut take = |what: &str, shape: &[usize]| -> Result<Value> {
            let (name, v) = iter.next().expect("length checked");
            debug_assert_eq!(name, format!("layer{i}.{what}"));
            if v.shape() != shape {
                return Err(Error::Format(format!(
                    "{name}: shape {:?} does not match network {:?}",
                    v.shape(),
                    shape
                )));
            }
            Ok(v)
        };
        match layer {
            Layer::Dense(d) => {
                d.w = take("weight", d.w.shape())?;
                d.b = take("bias", d.b.shape())?;
            }
            Layer::Conv2d(c) => {
                c.k = take("kernels", c.k.shape())?;
                c.b = take("bias", c.b.shape())?;
            }
            Layer::BatchNorm(BnState::Complex(bn)) => {
                bn.scale_rr = take("scale_rr", bn.scale_rr.shape())?.as_real()?.clone();
                bn.scale_ri = take("scale_ri", bn.scale_ri.shape())?.as_real()?.clone();
                bn.scale_ir = take("scale_ir", bn.scale_ir.shape())?.as_real()?.clone();
                bn.scale_ii = take("scale_ii", bn.scale_ii.shape())?.as_real()?.clone();
                bn.shift = take("shift", bn.shift.shape())?.as_complex()?.clone();
                bn.running_mean = take("running_mean", bn.running_mean.shape())?
                    .as_complex()?
                    .clone();
                bn.run_cov_rr = take("run_cov_rr", bn.run_cov_rr.shape())?.as_real()?.clone();
                bn.run_cov_ri = take("run_cov_ri", bn.run_cov_ri.shape())?.as_real()?.clone();
                bn.run_cov_ii = take("run_cov_ii", bn.run_cov_ii.shape())?.as_real()?.clone();
            }
            Layer::BatchNorm(BnState::Real(bn)) => {
                bn.scale = take("scale", bn.scale.shape())?.as_real()?.clone();
                bn.shift = take("shift", bn.shift.shape())?.as_real()?.clone();
                bn.running_mean = take("running_mean", bn.running_mean.shape())?
                    .as_real()?
                    .clone();
                bn.running_var = take("running_var", bn.running_var.shape())?
                    .as_real()?
                    .clone();
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init::he_complex_init;
    use crate::nn::layer::{ActKind, DenseLayer, Domain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_net(seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Network::new(
            Domain::Complex,
            vec![
                Layer::Dense(DenseLayer {
                    w: Value::C(he_complex_init(4, &[4, 3], &mut rng).unwrap()),
                    b: Value::C(ComplexTensor::zeros(&[3])),
                }),
                Layer::Activation(ActKind::crelu()),
                Layer::BatchNorm(BnState::Complex(
                    crate::nn::batchnorm::BnComplex::new(3),
                )),
            ],
        )
    }

    #[test]
    fn round_trip_preserves_parameters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = small_net(1);
        save_checkpoint(&net, &path).unwrap();
        let mut other = small_net(2);
        load_checkpoint(&mut other, &path).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for layer in &net.layers {
            layer.for_each_param(&mut |v| a.push(format!("{v:?}")));
        }
        for layer in &other.layers {
            layer.for_each_param(&mut |v| b.push(format!("{v:?}")));
        }
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let net = small_net(1);
        save_checkpoint(&net, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        let mut other = small_net(2);
        assert!(load_checkpoint(&mut other, &path).is_err());
    }

    #[test]
    fn structure_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_checkpoint(&small_net(1), &path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut other = Network::new(
            Domain::Complex,
            vec![Layer::Dense(DenseLayer {
                w: Value::C(he_complex_init(5, &[5, 3], &mut rng).unwrap()),
                b: Value::C(ComplexTensor::zeros(&[3])),
            })],
        );
        assert!(load_checkpoint(&mut other, &path).is_err());
    }
}
