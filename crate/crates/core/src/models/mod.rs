//! Declarative builders for the six architectures (complex/real x
//! MLP/CNN/FCNN) and the real-equivalent dimensioning rule.
//!
//! A real twin is dimensioned by an exhaustive search over its first
//! width (or filter count) in [1, 8192], scaling the remaining layers by
//! the complex model's inter-layer ratios, to match the complex model's
//! real trainable-parameter count as closely as possible.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctensor::{ComplexTensor, Padding, RealTensor};
use crate::error::{Error, Result};
use crate::grad::Value;
use crate::nn::batchnorm::{BnComplex, BnReal};
use crate::nn::init::{he_complex_init, he_real_init};
use crate::nn::layer::{ActKind, BnState, ConvLayer, DenseLayer, Domain, Layer, Network, SoftmaxMode};
use crate::polsar::Representation;

/// Model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Mlp,
    Cnn,
    Fcnn,
}

/// Declarative architecture description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub domain: Domain,
    pub representation: Representation,
    /// Spatial size of the input patches (12 for MLP/CNN, 128 for FCNN).
    pub patch_size: usize,
    pub classes: usize,
    /// Hidden widths (MLP), filter counts (CNN), or the downsampling
    /// filter ladder (FCNN; the upsampling half mirrors it).
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Output softmax variant; plane-wise unless configured otherwise.
    #[serde(default)]
    pub softmax: SoftmaxMode,
}

impl ModelSpec {
    /// Canonical complex MLP: hidden layers of 96 and 180 neurons.
    pub fn cv_mlp(representation: Representation, classes: usize) -> Self {
        Self {
            family: Family::Mlp,
            domain: Domain::Complex,
            representation,
            patch_size: 12,
            classes,
            hidden: vec![96, 180],
            learning_rate: 1e-3,
            epochs: 100,
            softmax: SoftmaxMode::default(),
        }
    }

    /// Canonical complex CNN: two convolutional layers of 6 and 12 kernels.
    pub fn cv_cnn(representation: Representation, classes: usize) -> Self {
        Self {
            family: Family::Cnn,
            domain: Domain::Complex,
            representation,
            patch_size: 12,
            classes,
            hidden: vec![6, 12],
            learning_rate: 1e-3,
            epochs: 100,
            softmax: SoftmaxMode::default(),
        }
    }

    /// Canonical complex FCNN: 11 blocks, downsampling ladder doubling
    /// from 6 to 96, mirrored on the upsampling side. The bottleneck
    /// block keeps the last encoder width: its output feeds an unpool
    /// that reuses the fifth pool's argmax locations, so the channel
    /// counts must agree.
    pub fn cv_fcnn(representation: Representation, classes: usize) -> Self {
        Self {
            family: Family::Fcnn,
            domain: Domain::Complex,
            representation,
            patch_size: 128,
            classes,
            hidden: vec![6, 12, 24, 48, 96, 96],
            learning_rate: 1e-3,
            epochs: 200,
            softmax: SoftmaxMode::default(),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.representation.channels(self.domain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Contract("need at least two classes".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Contract(
                "widths and filter counts must be positive".into(),
            ));
        }
        match self.family {
            Family::Mlp => {
                if self.hidden.is_empty() {
                    return Err(Error::Contract("MLP needs hidden widths".into()));
                }
            }
            Family::Cnn => {
                if self.hidden.len() != 2 {
                    return Err(Error::Contract("CNN takes two filter counts".into()));
                }
                if self.patch_size < 8 {
                    return Err(Error::Contract(format!(
                        "CNN patch must be >= 8, got {}",
                        self.patch_size
                    )));
                }
            }
            Family::Fcnn => {
                if self.hidden.len() != 6 {
                    return Err(Error::Contract(
                        "FCNN takes a six-entry downsampling ladder".into(),
                    ));
                }
                if self.hidden[5] != self.hidden[4] {
                    return Err(Error::Contract(format!(
                        "FCNN bottleneck must keep the last encoder width \
                         ({} vs {}): its output is unpooled with the fifth \
                         pool's locations",
                        self.hidden[5], self.hidden[4]
                    )));
                }
                if !self.patch_size.is_multiple_of(32) || self.patch_size == 0 {
                    return Err(Error::Contract(format!(
                        "FCNN patch must be divisible by 32, got {}",
                        self.patch_size
                    )));
                }
            }
        }
        Ok(())
    }

    /// Filter count per block, B1..B11 (FCNN only): the downsampling
    /// ladder, then decoder widths stepping down so that every unpool
    /// input matches its mirrored pool's channel count, and a final
    /// block at the class count.
    pub fn fcnn_block_filters(&self) -> Vec<usize> {
        let mut fs = self.hidden.clone();
        for i in (0..self.hidden.len() - 2).rev() {
            fs.push(self.hidden[i]);
        }
        fs.push(self.classes);
        fs
    }

    /// Real trainable scalar count (complex parameters count twice).
    pub fn real_param_count(&self) -> usize {
        let cx = self.domain == Domain::Complex;
        let unit = if cx { 2 } else { 1 };
        let ch = self.in_channels();
        match self.family {
            Family::Mlp => {
                let mut inp = self.patch_size * self.patch_size * ch;
                let mut n = 0;
                for &w in &self.hidden {
                    n += inp * w + w;
                    inp = w;
                }
                n += inp * self.classes + self.classes;
                n * unit
            }
            Family::Cnn => {
                let (f1, f2) = (self.hidden[0], self.hidden[1]);
                let s1 = self.patch_size - 2;
                let s2 = s1.div_ceil(2);
                let s3 = s2 - 2;
                let flat = s3 * s3 * f2;
                let n = (9 * ch * f1 + f1) + (9 * f1 * f2 + f2) + (flat * self.classes
                    + self.classes);
                n * unit
            }
            Family::Fcnn => {
                // Conv + batch norm per block; complex BN has a 2x2 real
                // scale and a complex shift (6 real scalars per channel),
                // real BN a scale and shift (2 per channel).
                let bn_unit = if cx { 6 } else { 2 };
                let mut cin = ch;
                let mut n = 0;
                for f in self.fcnn_block_filters() {
                    n += (9 * cin * f + f) * unit + bn_unit * f;
                    cin = f;
                }
                n
            }
        }
    }
}

/// Builds the network for a spec; weights use the He scheme for the
/// spec's domain and all biases start at zero.
pub fn build(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
    spec.validate()?;
    match spec.family {
        Family::Mlp => build_mlp(spec, rng),
        Family::Cnn => build_cnn(spec, rng),
        Family::Fcnn => build_fcnn(spec, rng),
    }
}

fn dense(spec: &ModelSpec, fan_in: usize, out: usize, rng: &mut ChaCha8Rng) -> Result<Layer> {
    Ok(Layer::Dense(match spec.domain {
        Domain::Complex => DenseLayer {
            w: Value::C(he_complex_init(fan_in, &[fan_in, out], rng)?),
            b: Value::C(ComplexTensor::zeros(&[out])),
        },
        Domain::Real => DenseLayer {
            w: Value::R(he_real_init(fan_in, &[fan_in, out], rng)?),
            b: Value::R(RealTensor::zeros(&[out])),
        },
    }))
}

fn conv(
    spec: &ModelSpec,
    cin: usize,
    cout: usize,
    pad: Padding,
    rng: &mut ChaCha8Rng,
) -> Result<Layer> {
    let fan_in = 9 * cin;
    Ok(Layer::Conv2d(match spec.domain {
        Domain::Complex => ConvLayer {
            k: Value::C(he_complex_init(fan_in, &[3, 3, cin, cout], rng)?),
            b: Value::C(ComplexTensor::zeros(&[cout])),
            pad,
        },
        Domain::Real => ConvLayer {
            k: Value::R(he_real_init(fan_in, &[3, 3, cin, cout], rng)?),
            b: Value::R(RealTensor::zeros(&[cout])),
            pad,
        },
    }))
}

fn act(spec: &ModelSpec) -> Layer {
    Layer::Activation(match spec.domain {
        Domain::Complex => ActKind::crelu(),
        Domain::Real => ActKind::relu(),
    })
}

fn batchnorm(spec: &ModelSpec, channels: usize) -> Layer {
    Layer::BatchNorm(match spec.domain {
        Domain::Complex => BnState::Complex(BnComplex::new(channels)),
        Domain::Real => BnState::Real(BnReal::new(channels)),
    })
}

/// dense(h1) - act - dropout(0.5) - dense(h2) - act - dropout(0.5)
/// - dense(classes) - softmax, on flattened patches.
fn build_mlp(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
    let mut layers = vec![Layer::Flatten];
    let mut fan_in = spec.patch_size * spec.patch_size * spec.in_channels();
    for &width in &spec.hidden {
        layers.push(dense(spec, fan_in, width, rng)?);
        layers.push(act(spec));
        layers.push(Layer::Dropout { rate: 0.5 });
        fan_in = width;
    }
    layers.push(dense(spec, fan_in, spec.classes, rng)?);
    layers.push(Layer::Softmax(spec.softmax));
    Ok(Network::new(spec.domain, layers))
}

/// conv3x3(f1) - act - avgpool - conv3x3(f2) - act - flatten
/// - dense(classes) - softmax; valid padding.
fn build_cnn(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
    let (f1, f2) = (spec.hidden[0], spec.hidden[1]);
    let s3 = (spec.patch_size - 2).div_ceil(2) - 2;
    let flat = s3 * s3 * f2;
    let layers = vec![
        conv(spec, spec.in_channels(), f1, Padding::Valid, rng)?,
        act(spec),
        Layer::AvgPool,
        conv(spec, f1, f2, Padding::Valid, rng)?,
        act(spec),
        Layer::Flatten,
        dense(spec, flat, spec.classes, rng)?,
        Layer::Softmax(spec.softmax),
    ];
    Ok(Network::new(spec.domain, layers))
}

/// Encoder-decoder of 11 blocks: B1-B5 conv-BN-act + pool, B6 conv-BN-act,
/// B7-B10 unpool + conv-BN-act, B11 unpool + conv-BN-softmax. Convs are
/// same-padded so the unpool mirror shapes line up; no dropout.
fn build_fcnn(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
    let filters = spec.fcnn_block_filters();
    let mut layers = Vec::new();
    let mut cin = spec.in_channels();
    for (b, &f) in filters.iter().enumerate() {
        let down = b < 5;
        let up = b >= 6;
        let last = b == 10;
        if up {
            layers.push(Layer::MaxUnpool);
        }
        layers.push(conv(spec, cin, f, Padding::Same, rng)?);
        layers.push(batchnorm(spec, f));
        if last {
            layers.push(Layer::Softmax(spec.softmax));
        } else {
            layers.push(act(spec));
        }
        if down {
            layers.push(Layer::MaxPool);
        }
        cin = f;
    }
    Ok(Network::new(spec.domain, layers))
}

/// Dimensioned real twin: same family, real channel encoding, and hidden
/// widths preserving the complex spec's inter-layer ratios, chosen so the
/// real trainable-parameter count lands nearest the complex model's.
///
/// The exhaustive integer sweep in [1, 8192] runs over the widest layer
/// (the rest scaled by the ratios and rounded); anchoring on the widest
/// layer keeps the step granularity fine even when a ladder starts at a
/// handful of filters.
pub fn real_equivalent(spec: &ModelSpec) -> Result<ModelSpec> {
    if spec.domain != Domain::Complex {
        return Err(Error::Contract(
            "real_equivalent takes a complex spec".into(),
        ));
    }
    let target = spec.real_param_count() as i64;
    let widest = *spec.hidden.iter().max().expect("validated nonempty") as f64;
    let ratios: Vec<f64> = spec.hidden.iter().map(|&h| h as f64 / widest).collect();
    let mut best: Option<(i64, ModelSpec)> = None;
    for anchor in 1..=8192usize {
        let hidden: Vec<usize> = ratios
            .iter()
            .map(|r| ((anchor as f64 * r).round() as usize).max(1))
            .collect();
        let candidate = ModelSpec {
            domain: Domain::Real,
            hidden,
            ..spec.clone()
        };
        if candidate.validate().is_err() {
            continue;
        }
        let count = candidate.real_param_count() as i64;
        let diff = (count - target).abs();
        if best.as_ref().is_none_or(|(d, _)| diff < *d) {
            best = Some((diff, candidate));
        }
    }
    Ok(best.expect("nonempty search range").1)
}
