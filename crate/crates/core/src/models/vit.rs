use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::params::Init;
use super::tape::{Tape, Var};
use super::{bind_params, param, ModelParams, Tensor};
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-6;

/// Encoder-only vision transformer over a single-channel time-frequency grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViTConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub n_classes: usize,
}

impl ViTConfig {
    /// Full-size model: 6 layers of width 512 over 8x8 patches of a 64x144 grid.
    pub fn new(n_classes: usize) -> Self {
        Self {
            grid_rows: 64,
            grid_cols: 144,
            patch_rows: 8,
            patch_cols: 8,
            d_model: 512,
            n_layers: 6,
            n_heads: 8,
            d_ff: 2048,
            n_classes,
        }
    }

    /// Desk-scale model: width 32, 2 layers, 2 heads, 16x16 patches.
    pub fn tiny(n_classes: usize) -> Self {
        Self {
            patch_rows: 16,
            patch_cols: 16,
            d_model: 32,
            n_layers: 2,
            n_heads: 2,
            d_ff: 128,
            ..Self::new(n_classes)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.grid_rows,
            self.grid_cols,
            self.patch_rows,
            self.patch_cols,
            self.d_model,
            self.n_layers,
            self.n_heads,
            self.d_ff,
        ];
        if dims.contains(&0) || self.n_classes < 2 {
            return Err(Error::invalid("ViT dimensions must be positive with at least 2 classes"));
        }
        if self.grid_rows % self.patch_rows != 0 || self.grid_cols % self.patch_cols != 0 {
            return Err(Error::invalid(format!(
                "{}x{} grid is not divisible into {}x{} patches",
                self.grid_rows, self.grid_cols, self.patch_rows, self.patch_cols
            )));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::invalid(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    pub fn n_patches(&self) -> usize {
        (self.grid_rows / self.patch_rows) * (self.grid_cols / self.patch_cols)
    }

    pub fn patch_len(&self) -> usize {
        self.patch_rows * self.patch_cols
    }

    pub(crate) fn param_specs(&self) -> Vec<(String, Vec<usize>, Init)> {
        let d = self.d_model;
        let xavier = |i, o| Init::Xavier { fan_in: i, fan_out: o };
        let mut s = vec![
            ("patch_embed.w".into(), vec![self.patch_len(), d], xavier(self.patch_len(), d)),
            ("patch_embed.b".into(), vec![d], Init::Zeros),
            ("cls_token".into(), vec![1, d], Init::Zeros),
            ("pos_embed".into(), vec![self.n_patches() + 1, d], Init::Normal { std: 0.02 }),
        ];
        for l in 0..self.n_layers {
            let p = |n: &str| format!("layers.{l}.{n}");
            for m in ["q", "k", "v", "o"] {
                s.push((p(&format!("attn.w{m}")), vec![d, d], xavier(d, d)));
                s.push((p(&format!("attn.b{m}")), vec![d], Init::Zeros));
            }
            s.push((p("ln1.gamma"), vec![d], Init::Ones));
            s.push((p("ln1.beta"), vec![d], Init::Zeros));
            s.push((p("ff1.w"), vec![d, self.d_ff], xavier(d, self.d_ff)));
            s.push((p("ff1.b"), vec![self.d_ff], Init::Zeros));
            s.push((p("ff2.w"), vec![self.d_ff, d], xavier(self.d_ff, d)));
            s.push((p("ff2.b"), vec![d], Init::Zeros));
            s.push((p("ln2.gamma"), vec![d], Init::Ones));
            s.push((p("ln2.beta"), vec![d], Init::Zeros));
        }
        s.push(("head.w".into(), vec![d, self.n_classes], xavier(d, self.n_classes)));
        s.push(("head.b".into(), vec![self.n_classes], Init::Zeros));
        s
    }
}

/// Non-overlapping patches in row-major patch order, each flattened row-major.
pub fn patchify(grid: &Tensor, patch_rows: usize, patch_cols: usize) -> Result<Tensor> {
    let (rows, cols) = match grid.shape() {
        &[r, c] => (r, c),
        s => return Err(Error::invalid(format!("patchify needs a 2-D grid, got {s:?}"))),
    };
    if patch_rows == 0 || patch_cols == 0 || rows % patch_rows != 0 || cols % patch_cols != 0 {
        return Err(Error::invalid(format!(
            "{rows}x{cols} grid is not divisible into {patch_rows}x{patch_cols} patches"
        )));
    }
    let (pr_n, pc_n) = (rows / patch_rows, cols / patch_cols);
    let plen = patch_rows * patch_cols;
    let mut out = Vec::with_capacity(rows * cols);
    for pr in 0..pr_n {
        for pc in 0..pc_n {
            for i in 0..patch_rows {
                let start = (pr * patch_rows + i) * cols + pc * patch_cols;
                out.extend_from_slice(&grid.data()[start..start + patch_cols]);
            }
        }
    }
    Tensor::new(vec![pr_n * pc_n, plen], out)
}

/// Inverse of [`patchify`].
pub fn unpatchify(patches: &Tensor, rows: usize, cols: usize, patch_rows: usize, patch_cols: usize) -> Result<Tensor> {
    if rows % patch_rows != 0 || cols % patch_cols != 0 || patches.len() != rows * cols {
        return Err(Error::invalid("patch layout does not match the grid"));
    }
    let pc_n = cols / patch_cols;
    let mut grid = vec![0.0; rows * cols];
    for (p, patch) in patches.data().chunks(patch_rows * patch_cols).enumerate() {
        let (pr, pc) = (p / pc_n, p % pc_n);
        for i in 0..patch_rows {
            let start = (pr * patch_rows + i) * cols + pc * patch_cols;
            grid[start..start + patch_cols].copy_from_slice(&patch[i * patch_cols..(i + 1) * patch_cols]);
        }
    }
    Tensor::new(vec![rows, cols], grid)
}

fn linear(tape: &mut Tape, x: Var, vars: &BTreeMap<String, Var>, w: &str, b: &str) -> Result<Var> {
    let y = tape.matmul(x, param(vars, w)?)?;
    tape.add_bias(y, param(vars, b)?)
}

pub(crate) fn attention_block(
    tape: &mut Tape,
    x: Var,
    vars: &BTreeMap<String, Var>,
    layer: usize,
    heads: usize,
) -> Result<Var> {
    let p = |n: &str| format!("layers.{layer}.attn.{n}");
    let q = linear(tape, x, vars, &p("wq"), &p("bq"))?;
    let k = linear(tape, x, vars, &p("wk"), &p("bk"))?;
    let v = linear(tape, x, vars, &p("wv"), &p("bv"))?;
    let a = tape.attention(q, k, v, heads)?;
    linear(tape, a, vars, &p("wo"), &p("bo"))
}

/// Multi-head self-attention of layer `layer` applied to `T x d_model` tokens.
pub fn multi_head_self_attention(tokens: &Tensor, params: &ModelParams, layer: usize, cfg: &ViTConfig) -> Result<Tensor> {
    if tokens.dims2()?.1 != cfg.d_model {
        return Err(Error::invalid(format!(
            "tokens of width {} for d_model {}",
            tokens.dims2()?.1,
            cfg.d_model
        )));
    }
    let mut tape = Tape::new();
    let vars = bind_params(&mut tape, params);
    let x = tape.leaf(tokens.clone());
    let out = attention_block(&mut tape, x, &vars, layer, cfg.n_heads)?;
    Ok(tape.value(out).clone())
}

/// Records the forward pass and returns the logits variable.
pub(crate) fn vit_graph(tape: &mut Tape, grid: &Tensor, vars: &BTreeMap<String, Var>, cfg: &ViTConfig) -> Result<Var> {
    if grid.shape() != [cfg.grid_rows, cfg.grid_cols] {
        return Err(Error::invalid(format!(
            "grid {:?} does not match configured {}x{}",
            grid.shape(),
            cfg.grid_rows,
            cfg.grid_cols
        )));
    }
    let patches = tape.leaf(patchify(grid, cfg.patch_rows, cfg.patch_cols)?);
    let emb = linear(tape, patches, vars, "patch_embed.w", "patch_embed.b")?;
    let tokens = tape.prepend_row(param(vars, "cls_token")?, emb)?;
    let mut x = tape.add(tokens, param(vars, "pos_embed")?)?;
    tape.check(|| "patch embedding".into())?;
    for l in 0..cfg.n_layers {
        let p = |n: &str| format!("layers.{l}.{n}");
        let a = attention_block(tape, x, vars, l, cfg.n_heads)?;
        let r = tape.add(x, a)?;
        x = tape.layer_norm(r, param(vars, &p("ln1.gamma"))?, param(vars, &p("ln1.beta"))?, LAYER_NORM_EPS)?;
        let h = linear(tape, x, vars, &p("ff1.w"), &p("ff1.b"))?;
        let h = tape.gelu(h);
        let f = linear(tape, h, vars, &p("ff2.w"), &p("ff2.b"))?;
        let r = tape.add(x, f)?;
        x = tape.layer_norm(r, param(vars, &p("ln2.gamma"))?, param(vars, &p("ln2.beta"))?, LAYER_NORM_EPS)?;
        tape.check(|| format!("encoder layer {l}"))?;
    }
    let cls = tape.row(x, 0)?;
    let logits = linear(tape, cls, vars, "head.w", "head.b")?;
    tape.check(|| "classifier head".into())?;
    Ok(logits)
}

pub fn vit_forward(grid: &Tensor, params: &ModelParams, cfg: &ViTConfig) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = bind_params(&mut tape, params);
    let logits = vit_graph(&mut tape, grid, &vars, cfg)?;
    Ok(tape.value(logits).data().to_vec())
}
