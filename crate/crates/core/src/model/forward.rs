use super::config::ModelConfig;
use super::params::{C2sParameters, Layout, StackIx};
use crate::error::{shape_mismatch, Error, Result};
use crate::ndiff::{Graph, Tensor, Var};
use crate::real::Real;

/// Pre-norm transformer stack: input projection, `n_layers` residual blocks
/// (self-attention, GELU feed-forward), final layer norm, output head.
fn stack_forward<T: Real>(
    g: &mut Graph<T>,
    vars: &[Var],
    stack: &StackIx,
    cfg: &ModelConfig,
    x: Var,
    seq_len: usize,
) -> Result<Var> {
    let eps = cfg.ln_eps;
    let mut h = g.linear(x, vars[stack.input.w], vars[stack.input.b])?;
    for b in &stack.blocks {
        let a = g.layer_norm(h, vars[b.ln1_gain], vars[b.ln1_bias], eps)?;
        let a = g.self_attention(
            a,
            vars[b.qkv.w],
            vars[b.qkv.b],
            vars[b.attn_out.w],
            vars[b.attn_out.b],
            cfg.n_heads,
            seq_len,
        )?;
        h = g.add(h, a)?;
        let f = g.layer_norm(h, vars[b.ln2_gain], vars[b.ln2_bias], eps)?;
        let f = g.linear(f, vars[b.ff1.w], vars[b.ff1.b])?;
        let f = g.gelu(f);
        let f = g.linear(f, vars[b.ff2.w], vars[b.ff2.b])?;
        h = g.add(h, f)?;
    }
    let h = g.layer_norm(h, vars[stack.ln_gain], vars[stack.ln_bias], eps)?;
    g.linear(h, vars[stack.head.w], vars[stack.head.b])
}

fn check_input<T: Real>(g: &Graph<T>, x: Var, width: usize, seq_len: usize, what: &'static str) -> Result<()> {
    let s = g.shape(x);
    if s.len() != 2 || s[1] != width {
        return Err(shape_mismatch(what, s, &[seq_len, width]));
    }
    if seq_len == 0 || !s[0].is_multiple_of(seq_len) {
        return Err(Error::Config(alloc::format!(
            "{what}: {} rows do not split into sequences of {seq_len}",
            s[0]
        )));
    }
    if g.value(x).iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// Encoder on a bound graph: `[n_seq·seq_len, n_bins]` → `[n_seq·seq_len, csi_dim]`.
pub fn encode_graph<T: Real>(
    g: &mut Graph<T>,
    vars: &[Var],
    layout: &Layout,
    cfg: &ModelConfig,
    dps: Var,
    seq_len: usize,
) -> Result<Var> {
    check_input(g, dps, cfg.n_bins, seq_len, "encode")?;
    stack_forward(g, vars, &layout.encoder, cfg, dps, seq_len)
}

/// Decoder on a bound graph: `[n_seq·seq_len, csi_dim]` → `[n_seq·seq_len, n_bins]`.
pub fn decode_graph<T: Real>(
    g: &mut Graph<T>,
    vars: &[Var],
    layout: &Layout,
    cfg: &ModelConfig,
    csi: Var,
    seq_len: usize,
) -> Result<Var> {
    check_input(g, csi, cfg.csi_dim, seq_len, "decode")?;
    stack_forward(g, vars, &layout.decoder, cfg, csi, seq_len)
}

#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub total: Var,
    pub recon: Var,
    pub latent: Var,
}

/// `mse(P, decode(encode(P))) + λ·mse(C, encode(P))`.
pub fn joint_loss_graph<T: Real>(
    g: &mut Graph<T>,
    vars: &[Var],
    layout: &Layout,
    cfg: &ModelConfig,
    dps: Var,
    csi: Var,
    seq_len: usize,
) -> Result<LossVars> {
    if g.shape(dps)[0] != g.shape(csi)[0] {
        return Err(shape_mismatch("joint_loss", g.shape(dps), g.shape(csi)));
    }
    let z = encode_graph(g, vars, layout, cfg, dps, seq_len)?;
    let latent = g.mse(csi, z, cfg.reduction)?;
    let p_hat = stack_forward(g, vars, &layout.decoder, cfg, z, seq_len)?;
    let recon = g.mse(dps, p_hat, cfg.reduction)?;
    let weighted = g.scale(latent, cfg.latent_weight);
    let total = g.add(recon, weighted)?;
    Ok(LossVars { total, recon, latent })
}

/// Decoder-only objective `mse(P, decode(C))`.
pub fn baseline_loss_graph<T: Real>(
    g: &mut Graph<T>,
    vars: &[Var],
    layout: &Layout,
    cfg: &ModelConfig,
    dps: Var,
    csi: Var,
    seq_len: usize,
) -> Result<Var> {
    if g.shape(dps)[0] != g.shape(csi)[0] {
        return Err(shape_mismatch("baseline_loss", g.shape(dps), g.shape(csi)));
    }
    let p_hat = decode_graph(g, vars, layout, cfg, csi, seq_len)?;
    g.mse(dps, p_hat, cfg.reduction)
}

/// Encodes one sequence; `dps` is `[N_p, n_bins]` in normalized units.
pub fn encode<T: Real>(params: &C2sParameters<T>, dps: &Tensor<T>) -> Result<Tensor<T>> {
    encode_batch(params, dps, dps.rows())
}

/// Encodes consecutive sequences of `seq_len` rows.
pub fn encode_batch<T: Real>(params: &C2sParameters<T>, dps: &Tensor<T>, seq_len: usize) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let vars = params.bind_frozen(&mut g);
    let x = g.constant(dps.clone());
    let z = encode_graph(&mut g, &vars, params.layout(), &params.config, x, seq_len)?;
    Ok(g.tensor(z))
}

/// Decodes one sequence; `csi` is `[N_p, csi_dim]` in normalized units.
pub fn decode<T: Real>(params: &C2sParameters<T>, csi: &Tensor<T>) -> Result<Tensor<T>> {
    decode_batch(params, csi, csi.rows())
}

pub fn decode_batch<T: Real>(params: &C2sParameters<T>, csi: &Tensor<T>, seq_len: usize) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let vars = params.bind_frozen(&mut g);
    let x = g.constant(csi.clone());
    let p = decode_graph(&mut g, &vars, params.layout(), &params.config, x, seq_len)?;
    Ok(g.tensor(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub recon: f64,
    pub latent: f64,
}

/// Joint loss values for a batch of sequences of `seq_len` rows.
pub fn joint_loss<T: Real>(
    params: &C2sParameters<T>,
    dps: &Tensor<T>,
    csi: &Tensor<T>,
    seq_len: usize,
) -> Result<LossTerms> {
    let mut g = Graph::new();
    let vars = params.bind_frozen(&mut g);
    let p = g.constant(dps.clone());
    let c = g.constant(csi.clone());
    let l = joint_loss_graph(&mut g, &vars, params.layout(), &params.config, p, c, seq_len)?;
    Ok(LossTerms {
        total: g.scalar(l.total).as_f64(),
        recon: g.scalar(l.recon).as_f64(),
        latent: g.scalar(l.latent).as_f64(),
    })
}

pub fn baseline_loss<T: Real>(
    params: &C2sParameters<T>,
    dps: &Tensor<T>,
    csi: &Tensor<T>,
    seq_len: usize,
) -> Result<f64> {
    let mut g = Graph::new();
    let vars = params.bind_frozen(&mut g);
    let p = g.constant(dps.clone());
    let c = g.constant(csi.clone());
    let l = baseline_loss_graph(&mut g, &vars, params.layout(), &params.config, p, c, seq_len)?;
    Ok(g.scalar(l).as_f64())
}
