use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{invalid, Error, Result};
use crate::segment::DEFAULT_LENGTH;
use crate::types::NUM_KEYPOINTS;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Channels in every layer.
    pub width: usize,
    /// Encoder/decoder levels per hourglass block.
    pub depth: usize,
    /// Stacked hourglass blocks.
    pub n_blocks: usize,
    /// Input length.
    pub length: usize,
    /// Output channels.
    pub keypoints: usize,
    pub kernel_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            width: 48,
            depth: 4,
            n_blocks: 2,
            length: DEFAULT_LENGTH,
            keypoints: NUM_KEYPOINTS,
            kernel_size: 3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.depth == 0 || self.n_blocks == 0 || self.keypoints == 0 {
            return invalid("width, depth, n_blocks and keypoints must be at least 1");
        }
        if self.kernel_size.is_multiple_of(2) {
            return invalid(format!("kernel size {} must be odd", self.kernel_size));
        }
        if self.depth >= usize::BITS as usize
            || !self.length.is_multiple_of(1 << self.depth)
            || self.length >> self.depth == 0
        {
            return invalid(format!("length {} is not divisible by 2^{}", self.length, self.depth));
        }
        Ok(())
    }
}

/// Indices of one pre-activation residual unit's parameters.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ResUnitIdx {
    pub norm1: (usize, usize),
    pub conv1: (usize, usize),
    pub norm2: (usize, usize),
    pub conv2: (usize, usize),
    pub gate: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockIdx {
    pub enc: Vec<ResUnitIdx>,
    pub up: Vec<(usize, usize)>,
    pub skip_gate: Vec<usize>,
    pub dec: Vec<ResUnitIdx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    FanIn(usize),
    Zeros,
    Ones,
}

/// Where every parameter lives, derived from the config alone.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub stem: (usize, usize),
    pub blocks: Vec<BlockIdx>,
    pub head: (usize, usize),
    specs: Vec<(String, Vec<usize>, Init)>,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut specs: Vec<(String, Vec<usize>, Init)> = Vec::new();
        let mut push = |name: String, shape: Vec<usize>, init: Init| {
            specs.push((name, shape, init));
            specs.len() - 1
        };
        let (w, k) = (cfg.width, cfg.kernel_size);
        let conv = |push: &mut dyn FnMut(String, Vec<usize>, Init) -> usize,
                    name: &str,
                    c_out: usize,
                    c_in: usize,
                    k: usize| {
            (
                push(format!("{name}.weight"), vec![c_out, c_in, k], Init::FanIn(c_in * k)),
                push(format!("{name}.bias"), vec![c_out], Init::Zeros),
            )
        };
        let res_unit = |push: &mut dyn FnMut(String, Vec<usize>, Init) -> usize, name: &str| {
            let norm1 = (
                push(format!("{name}.norm1.scale"), vec![w], Init::Ones),
                push(format!("{name}.norm1.shift"), vec![w], Init::Zeros),
            );
            let conv1 = (
                push(format!("{name}.conv1.weight"), vec![w, w, k], Init::FanIn(w * k)),
                push(format!("{name}.conv1.bias"), vec![w], Init::Zeros),
            );
            let norm2 = (
                push(format!("{name}.norm2.scale"), vec![w], Init::Ones),
                push(format!("{name}.norm2.shift"), vec![w], Init::Zeros),
            );
            let conv2 = (
                push(format!("{name}.conv2.weight"), vec![w, w, k], Init::FanIn(w * k)),
                push(format!("{name}.conv2.bias"), vec![w], Init::Zeros),
            );
            let gate = push(format!("{name}.gate"), vec![1], Init::Ones);
            ResUnitIdx {
                norm1,
                conv1,
                norm2,
                conv2,
                gate,
            }
        };

        let stem = conv(&mut push, "stem", w, 1, k);
        let mut blocks = Vec::with_capacity(cfg.n_blocks);
        for b in 0..cfg.n_blocks {
            let enc = (0..cfg.depth)
                .map(|i| res_unit(&mut push, &format!("block{b}.enc{i}")))
                .collect();
            let mut up = Vec::with_capacity(cfg.depth);
            let mut skip_gate = Vec::with_capacity(cfg.depth);
            let mut dec = Vec::with_capacity(cfg.depth);
            for i in (0..cfg.depth).rev() {
                up.push(conv(&mut push, &format!("block{b}.up{i}"), w, w, k));
                skip_gate.push(push(format!("block{b}.skip{i}.gate"), vec![1], Init::Ones));
                dec.push(res_unit(&mut push, &format!("block{b}.dec{i}")));
            }
            // stored deepest-first; flip so index i addresses level i
            up.reverse();
            skip_gate.reverse();
            dec.reverse();
            blocks.push(BlockIdx {
                enc,
                up,
                skip_gate,
                dec,
            });
        }
        let head = conv(&mut push, "head", cfg.keypoints, w, 1);
        Self {
            stem,
            blocks,
            head,
            specs,
        }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }
}

/// Named parameter tensors in a fixed, config-determined order.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Parameters {
    /// Fan-in-scaled uniform kernels, zero biases and shifts, unit scales and
    /// gates, drawn from a seeded generator.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::with_capacity(layout.len());
        let mut tensors = Vec::with_capacity(layout.len());
        for (name, shape, init) in &layout.specs {
            let t = match *init {
                Init::Zeros => Tensor::zeros(shape),
                Init::Ones => Tensor::filled(shape, 1.0),
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let n: usize = shape.iter().product();
                    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
                    Tensor::from_vec(shape, data)?
                }
            };
            names.push(name.clone());
            tensors.push(t);
        }
        Ok(Self { names, tensors })
    }

    /// Every parameter set to zero.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        Ok(Self {
            names: layout.specs.iter().map(|s| s.0.clone()).collect(),
            tensors: layout.specs.iter().map(|s| Tensor::zeros(&s.1)).collect(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect(),
        }
    }

    /// Builds parameters from explicit named tensors, checking them against
    /// the layout implied by `cfg`.
    pub fn from_named(cfg: &ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        if named.len() != layout.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, got {}",
                layout.len(),
                named.len()
            )));
        }
        for ((name, t), (want, shape, _)) in named.iter().zip(&layout.specs) {
            if name != want || &t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!(
                    "tensor `{name}` {:?} does not match `{want}` {shape:?}",
                    t.shape
                )));
            }
        }
        let (names, tensors) = named.into_iter().unzip();
        Ok(Self { names, tensors })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.tensors[i]
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&mut self.tensors[i])
    }

    pub(crate) fn split_at_mut(&mut self, mid: usize) -> (&mut [Tensor], &mut [Tensor]) {
        self.tensors.split_at_mut(mid)
    }

    pub(crate) fn data(&self, i: usize) -> &[f64] {
        &self.tensors[i].data
    }

    pub(crate) fn scalar(&self, i: usize) -> f64 {
        self.tensors[i].data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// `self += other`, element-wise.
    pub fn add_assign(&mut self, other: &Parameters) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v *= factor;
            }
        }
    }

    pub(crate) fn same_layout(&self, other: &Parameters) -> bool {
        self.names == other.names && self.tensors.iter().zip(&other.tensors).all(|(a, b)| a.shape == b.shape)
    }

    /// Flat view of scalar `flat` as (tensor index, element index).
    pub fn locate(&self, mut flat: usize) -> Option<(usize, usize)> {
        for (i, t) in self.tensors.iter().enumerate() {
            if flat < t.len() {
                return Some((i, flat));
            }
            flat -= t.len();
        }
        None
    }
}
