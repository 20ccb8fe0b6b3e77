//! VLAD aggregation of local descriptors.

use serde::{Deserialize, Serialize};

use super::{Codebook, DescriptorSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VladOptions {
    /// L2-normalize each cluster block before the power map.
    pub intra_norm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VladVector {
    pub image_id: String,
    pub values: Vec<f64>,
    /// Set when the aggregate is all zero (no descriptors or zero residuals).
    pub degenerate: bool,
}

impl VladVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Unnormalized residual sums, `k * d` values. Descriptors are visited in a
/// canonical (sorted) order so the float result does not depend on input order.
pub fn vlad_aggregate(desc: &DescriptorSet, cb: &Codebook) -> Result<Vec<f64>> {
    if desc.d != cb.d {
        return Err(Error::DimensionMismatch { left: (desc.d, 1), right: (cb.d, 1) });
    }
    let mut rows: Vec<&[f32]> = desc.rows().collect();
    rows.sort_by(|a, b| a.iter().zip(*b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let d = cb.d;
    let mut v = vec![0f64; cb.k * d];
    for x in rows {
        let (j, _) = cb.nearest(x);
        for (i, &xi) in x.iter().enumerate() {
            v[j * d + i] += xi as f64 - cb.centroids[j][i];
        }
    }
    Ok(v)
}

fn l2(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n > 0.0
}

/// Residual aggregation, signed square-root, global L2 normalization.
pub fn vlad_encode(desc: &DescriptorSet, cb: &Codebook, opts: VladOptions) -> Result<VladVector> {
    let mut v = vlad_aggregate(desc, cb)?;
    if opts.intra_norm {
        v.chunks_mut(cb.d).for_each(|b| {
            l2(b);
        });
    }
    v.iter_mut().for_each(|z| *z = z.signum() * z.abs().sqrt());
    let nonzero = l2(&mut v);
    if !nonzero {
        v.iter_mut().for_each(|z| *z = 0.0);
    }
    Ok(VladVector { image_id: desc.image_id.clone(), values: v, degenerate: !nonzero })
}
