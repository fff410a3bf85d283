//! Single GRU cell: forward step and the matching backward step.
//!
//! Gate convention: the update gate `z` blends the previous hidden state
//! with the candidate, `h = (1-z) * h_prev + z * h_tilde`, and the reset
//! gate `r` masks the previous state inside the candidate. Tests pin this
//! convention; changing it silently would invalidate every frozen value.

use crate::error::{Error, Result};
use crate::numerics::{matvec, matvec_transpose_acc, sigmoid_scalar, Tensor};

/// Borrowed view of one GRU layer's nine parameter tensors.
///
/// Input weights `w_*` are `H x D`, recurrent weights `u_*` are `H x H`,
/// biases `b_*` are `H x 1`.
#[derive(Debug, Clone, Copy)]
pub struct GruLayerParams<'a> {
    pub w_z: &'a Tensor,
    pub u_z: &'a Tensor,
    pub b_z: &'a Tensor,
    pub w_r: &'a Tensor,
    pub u_r: &'a Tensor,
    pub b_r: &'a Tensor,
    pub w_h: &'a Tensor,
    pub u_h: &'a Tensor,
    pub b_h: &'a Tensor,
}

impl GruLayerParams<'_> {
    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }
}

/// Intermediates retained for the backward step. Owns copies so the
/// backward pass can run against the parameter store without aliasing.
#[derive(Debug, Clone)]
pub struct GruCellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_tilde: Vec<f64>,
    /// `r ⊙ h_prev`, the masked state fed to the candidate.
    pub rh: Vec<f64>,
}

/// One GRU step:
///
/// ```text
/// z = sigma(W_z x + U_z h_prev + b_z)
/// r = sigma(W_r x + U_r h_prev + b_r)
/// h_tilde = tanh(W_h x + U_h (r ⊙ h_prev) + b_h)
/// h = (1 - z) ⊙ h_prev + z ⊙ h_tilde
/// ```
pub fn gru_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    p: &GruLayerParams,
) -> Result<(Vec<f64>, GruCellCache)> {
    let d = p.input_dim();
    let h = p.hidden_dim();
    if x.len() != d {
        return Err(Error::shape(format!(
            "gru cell: input has {} components, layer expects {d}",
            x.len()
        )));
    }
    if h_prev.len() != h {
        return Err(Error::shape(format!(
            "gru cell: hidden state has {} components, layer expects {h}",
            h_prev.len()
        )));
    }

    let mut a_z = matvec(p.w_z, x);
    matvec_transpose_add(&mut a_z, p.u_z, h_prev);
    add_bias(&mut a_z, p.b_z);
    let z: Vec<f64> = a_z.iter().map(|&v| sigmoid_scalar(v)).collect();

    let mut a_r = matvec(p.w_r, x);
    matvec_transpose_add(&mut a_r, p.u_r, h_prev);
    add_bias(&mut a_r, p.b_r);
    let r: Vec<f64> = a_r.iter().map(|&v| sigmoid_scalar(v)).collect();

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(ri, hi)| ri * hi).collect();

    let mut a_h = matvec(p.w_h, x);
    matvec_transpose_add(&mut a_h, p.u_h, &rh);
    add_bias(&mut a_h, p.b_h);
    let h_tilde: Vec<f64> = a_h.iter().map(|&v| v.tanh()).collect();

    let h_new: Vec<f64> = z
        .iter()
        .zip(h_prev)
        .zip(&h_tilde)
        .map(|((zi, hp), ht)| (1.0 - zi) * hp + zi * ht)
        .collect();

    let cache = GruCellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        h_tilde,
        rh,
    };
    Ok((h_new, cache))
}

/// Pre-activation and carry gradients for one cell step. The weight
/// gradients themselves are rank-one updates from these vectors and the
/// cached inputs; the model applies them into its parameter store.
#[derive(Debug)]
pub(crate) struct GruCellGrads {
    pub da_z: Vec<f64>,
    pub da_r: Vec<f64>,
    pub da_h: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dx: Vec<f64>,
}

pub(crate) fn gru_cell_backward(
    dh: &[f64],
    cache: &GruCellCache,
    p: &GruLayerParams,
) -> GruCellGrads {
    let hidden = p.hidden_dim();
    debug_assert_eq!(dh.len(), hidden);

    // h = (1-z) h_prev + z h_tilde
    let mut dh_prev: Vec<f64> = dh
        .iter()
        .zip(&cache.z)
        .map(|(d, z)| d * (1.0 - z))
        .collect();
    let dz: Vec<f64> = dh
        .iter()
        .zip(&cache.h_tilde)
        .zip(&cache.h_prev)
        .map(|((d, ht), hp)| d * (ht - hp))
        .collect();
    let dh_tilde: Vec<f64> = dh.iter().zip(&cache.z).map(|(d, z)| d * z).collect();

    // Candidate branch: h_tilde = tanh(a_h), a_h = W_h x + U_h rh + b_h.
    let da_h: Vec<f64> = dh_tilde
        .iter()
        .zip(&cache.h_tilde)
        .map(|(d, ht)| d * (1.0 - ht * ht))
        .collect();
    let mut drh = vec![0.0; hidden];
    matvec_transpose_acc(p.u_h, &da_h, &mut drh);
    let dr: Vec<f64> = drh.iter().zip(&cache.h_prev).map(|(d, hp)| d * hp).collect();
    for ((dp, d), r) in dh_prev.iter_mut().zip(&drh).zip(&cache.r) {
        *dp += d * r;
    }

    // Gate branches through the sigmoid derivative.
    let da_z: Vec<f64> = dz
        .iter()
        .zip(&cache.z)
        .map(|(d, z)| d * z * (1.0 - z))
        .collect();
    let da_r: Vec<f64> = dr
        .iter()
        .zip(&cache.r)
        .map(|(d, r)| d * r * (1.0 - r))
        .collect();
    matvec_transpose_acc(p.u_z, &da_z, &mut dh_prev);
    matvec_transpose_acc(p.u_r, &da_r, &mut dh_prev);

    let mut dx = vec![0.0; p.input_dim()];
    matvec_transpose_acc(p.w_z, &da_z, &mut dx);
    matvec_transpose_acc(p.w_r, &da_r, &mut dx);
    matvec_transpose_acc(p.w_h, &da_h, &mut dx);

    GruCellGrads {
        da_z,
        da_r,
        da_h,
        dh_prev,
        dx,
    }
}

fn matvec_transpose_add(acc: &mut [f64], m: &Tensor, v: &[f64]) {
    let extra = matvec(m, v);
    for (a, e) in acc.iter_mut().zip(extra) {
        *a += e;
    }
}

fn add_bias(acc: &mut [f64], b: &Tensor) {
    debug_assert_eq!(b.cols(), 1);
    for (a, &bv) in acc.iter_mut().zip(b.data()) {
        *a += bv;
    }
}
