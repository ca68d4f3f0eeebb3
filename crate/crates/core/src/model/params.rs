use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::ndiff::{Graph, Tensor, Var};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearIx {
    pub w: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIx {
    pub ln1_gain: usize,
    pub ln1_bias: usize,
    pub qkv: LinearIx,
    pub attn_out: LinearIx,
    pub ln2_gain: usize,
    pub ln2_bias: usize,
    pub ff1: LinearIx,
    pub ff2: LinearIx,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackIx {
    pub input: LinearIx,
    pub blocks: Vec<BlockIx>,
    pub ln_gain: usize,
    pub ln_bias: usize,
    pub head: LinearIx,
}

/// Positions of every named tensor in the flat parameter list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub encoder: StackIx,
    pub decoder: StackIx,
}

#[derive(Clone, Copy)]
enum Init {
    /// Uniform with variance 1/fan_in.
    Scaled(usize),
    Zeros,
    Ones,
}

struct Builder {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    inits: Vec<Init>,
}

impl Builder {
    fn add(&mut self, name: String, shape: &[usize], init: Init) -> usize {
        self.names.push(name);
        self.shapes.push(shape.to_vec());
        self.inits.push(init);
        self.names.len() - 1
    }

    fn linear(&mut self, prefix: &str, d_in: usize, d_out: usize) -> LinearIx {
        LinearIx {
            w: self.add(format!("{prefix}.w"), &[d_in, d_out], Init::Scaled(d_in)),
            b: self.add(format!("{prefix}.b"), &[d_out], Init::Zeros),
        }
    }

    fn norm(&mut self, prefix: &str, d: usize) -> (usize, usize) {
        (
            self.add(format!("{prefix}.gain"), &[d], Init::Ones),
            self.add(format!("{prefix}.bias"), &[d], Init::Zeros),
        )
    }

    fn stack(&mut self, prefix: &str, cfg: &ModelConfig, d_in: usize, d_out: usize) -> StackIx {
        let d = cfg.d_model;
        let input = self.linear(&format!("{prefix}.input"), d_in, d);
        let mut blocks = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let p = format!("{prefix}.block{l}");
            let (ln1_gain, ln1_bias) = self.norm(&format!("{p}.ln1"), d);
            let qkv = self.linear(&format!("{p}.attn.qkv"), d, 3 * d);
            let attn_out = self.linear(&format!("{p}.attn.out"), d, d);
            let (ln2_gain, ln2_bias) = self.norm(&format!("{p}.ln2"), d);
            let ff1 = self.linear(&format!("{p}.ffn.up"), d, cfg.ffn_width);
            let ff2 = self.linear(&format!("{p}.ffn.down"), cfg.ffn_width, d);
            blocks.push(BlockIx {
                ln1_gain,
                ln1_bias,
                qkv,
                attn_out,
                ln2_gain,
                ln2_bias,
                ff1,
                ff2,
            });
        }
        let (ln_gain, ln_bias) = self.norm(&format!("{prefix}.ln_final"), d);
        let head = self.linear(&format!("{prefix}.head"), d, d_out);
        StackIx {
            input,
            blocks,
            ln_gain,
            ln_bias,
            head,
        }
    }
}

fn plan(cfg: &ModelConfig) -> (Builder, Layout) {
    let mut b = Builder {
        names: Vec::new(),
        shapes: Vec::new(),
        inits: Vec::new(),
    };
    let encoder = b.stack("encoder", cfg, cfg.n_bins, cfg.csi_dim);
    let decoder = b.stack("decoder", cfg, cfg.csi_dim, cfg.n_bins);
    (b, Layout { encoder, decoder })
}

/// Encoder and decoder parameters in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct C2sParameters<T> {
    pub config: ModelConfig,
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    layout: Layout,
}

impl<T: Real> C2sParameters<T> {
    /// Seeded variance-preserving uniform initialization; biases zero,
    /// layer-norm gains one.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (b, layout) = plan(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let tensors = b
            .shapes
            .iter()
            .zip(&b.inits)
            .map(|(shape, init)| match *init {
                Init::Zeros => Tensor::zeros(shape),
                Init::Ones => Tensor::full(shape, T::one()),
                Init::Scaled(fan_in) => {
                    let a = libm::sqrt(3.0 / fan_in as f64);
                    let n: usize = shape.iter().product();
                    let data = (0..n).map(|_| T::of(rng.gen_range(-a..a))).collect();
                    Tensor::new(shape, data).expect("shape")
                }
            })
            .collect();
        Ok(Self {
            config,
            names: b.names,
            tensors,
            layout,
        })
    }

    /// Rebuilds parameters from stored tensors, checking names and shapes
    /// against `config`.
    pub fn from_tensors(config: ModelConfig, names: Vec<String>, tensors: Vec<Tensor<T>>) -> Result<Self> {
        config.validate()?;
        let (b, layout) = plan(&config);
        if names.len() != b.names.len() || tensors.len() != b.names.len() {
            return Err(Error::CheckpointMismatch(format!(
                "expected {} tensors, found {}",
                b.names.len(),
                tensors.len()
            )));
        }
        for i in 0..names.len() {
            if names[i] != b.names[i] || tensors[i].shape() != b.shapes[i].as_slice() {
                return Err(Error::CheckpointMismatch(format!(
                    "tensor {i}: expected {} {:?}, found {} {:?}",
                    b.names[i],
                    b.shapes[i],
                    names[i],
                    tensors[i].shape()
                )));
            }
            if !tensors[i].is_finite() {
                return Err(Error::NonFinite("checkpoint parameters"));
            }
        }
        Ok(Self {
            config,
            names,
            tensors,
            layout,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Real>(&self) -> C2sParameters<U> {
        C2sParameters {
            config: self.config,
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            layout: self.layout.clone(),
        }
    }

    /// Adds every tensor to `g` as a trainable leaf.
    pub fn bind(&self, g: &mut Graph<T>) -> Vec<Var> {
        self.tensors.iter().map(|t| g.param(t)).collect()
    }

    /// Adds every tensor to `g` as a constant.
    pub fn bind_frozen(&self, g: &mut Graph<T>) -> Vec<Var> {
        self.tensors.iter().map(|t| g.constant(t.clone())).collect()
    }
}
