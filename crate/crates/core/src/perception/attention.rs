//! Per-cell scaled dot-product attention across CAV feature vectors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::features::BevFeatureMap;
use crate::error::{Error, Result};

/// Numerically stable softmax. Panics on an empty slice.
pub fn softmax_stable(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "softmax of an empty vector");
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub query: DMatrix<f64>,
    pub key: DMatrix<f64>,
    pub value: DMatrix<f64>,
    pub temperature: f64,
    /// Leave CAVs whose vector at a cell is all zero out of that cell's
    /// softmax, so an unobserved cell does not dilute an observed one. The
    /// ego still supplies the query. A cell empty for everyone stays zero.
    pub mask_empty: bool,
}

impl AttentionParams {
    /// Identity projections with temperature sqrt(C).
    pub fn identity(channels: usize) -> Self {
        let eye = DMatrix::identity(channels, channels);
        Self {
            query: eye.clone(),
            key: eye.clone(),
            value: eye,
            temperature: (channels as f64).sqrt(),
            mask_empty: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.query.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        let square = [&self.query, &self.key, &self.value]
            .iter()
            .all(|m| m.nrows() == c && m.ncols() == c && m.iter().all(|v| v.is_finite()));
        if !square || !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidInput(
                "attention params must be finite CxC with positive temperature".into(),
            ));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        let eye = DMatrix::identity(self.channels(), self.channels());
        self.query == eye && self.key == eye && self.value == eye
    }
}

struct CellAttention<'a> {
    params: &'a AttentionParams,
    identity: bool,
}

impl CellAttention<'_> {
    fn project(&self, m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        if self.identity {
            return x.to_vec();
        }
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * x[c]).sum())
            .collect()
    }

    /// Attention weights of the ego's `query` vector over `vectors` and the
    /// fused output.
    fn fuse(&self, query: &[f64], vectors: &[Vec<f64>], out: &mut [f64]) -> Vec<f64> {
        let p = self.params;
        let q = self.project(&p.query, query);
        let scores: Vec<f64> = vectors
            .iter()
            .map(|x| {
                let k = self.project(&p.key, x);
                q.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() / p.temperature
            })
            .collect();
        let w = softmax_stable(&scores);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (wi, x) in w.iter().zip(vectors) {
            let v = self.project(&p.value, x);
            for (o, vc) in out.iter_mut().zip(&v) {
                *o += wi * vc;
            }
        }
        w
    }
}

fn check_inputs(
    maps: &BTreeMap<u32, BevFeatureMap>,
    ego_id: u32,
    params: &AttentionParams,
) -> Result<usize> {
    params.validate()?;
    let ego = maps.get(&ego_id).ok_or(Error::UnknownCav(ego_id))?;
    for (id, m) in maps {
        if m.shape() != ego.shape() || m.grid != ego.grid {
            return Err(Error::ShapeMismatch(format!(
                "map of CAV {id} is {:?}, ego map is {:?}",
                m.shape(),
                ego.shape()
            )));
        }
    }
    if ego.channels != params.channels() {
        return Err(Error::ShapeMismatch(format!(
            "{} channels but {}x{} projections",
            ego.channels,
            params.channels(),
            params.channels()
        )));
    }
    Ok(maps.keys().position(|k| *k == ego_id).expect("ego present"))
}

fn for_each_cell(
    maps: &BTreeMap<u32, BevFeatureMap>,
    ego_id: u32,
    params: &AttentionParams,
    mut visit: impl FnMut(usize, &[f64], &[u32], &[f64]),
) -> Result<()> {
    let ego_idx = check_inputs(maps, ego_id, params)?;
    let att = CellAttention {
        params,
        identity: params.is_identity(),
    };
    let ids: Vec<u32> = maps.keys().copied().collect();
    let list: Vec<&BevFeatureMap> = maps.values().collect();
    let c = list[0].channels;
    let mut out = vec![0.0; c];
    for k in 0..list[0].cells() {
        let cell = |n: usize| &list[n].data[k * c..(k + 1) * c];
        let query: Vec<f64> = cell(ego_idx).iter().map(|v| *v as f64).collect();
        let observed: Vec<bool> = (0..list.len())
            .map(|n| cell(n).iter().any(|v| *v != 0.0))
            .collect();
        let masking = params.mask_empty && observed.contains(&true);
        let mut vectors = Vec::with_capacity(list.len());
        let mut members = Vec::with_capacity(list.len());
        for n in 0..list.len() {
            if masking && !observed[n] {
                continue;
            }
            members.push(ids[n]);
            vectors.push(cell(n).iter().map(|v| *v as f64).collect::<Vec<f64>>());
        }
        let w = att.fuse(&query, &vectors, &mut out);
        visit(k, &out, &members, &w);
    }
    Ok(())
}

/// Fuses aligned per-CAV maps into the ego map. Contributions are reduced in
/// ascending CAV id order, so the result does not depend on insertion order.
pub fn attentive_fuse(
    maps: &BTreeMap<u32, BevFeatureMap>,
    ego_id: u32,
    params: &AttentionParams,
) -> Result<BevFeatureMap> {
    let template = maps.get(&ego_id).ok_or(Error::UnknownCav(ego_id))?;
    let mut fused = BevFeatureMap::zeros(template.grid, template.channels);
    let c = template.channels;
    for_each_cell(maps, ego_id, params, |k, out, _, _| {
        for (d, o) in fused.data[k * c..(k + 1) * c].iter_mut().zip(out) {
            *d = *o as f32;
        }
    })?;
    Ok(fused)
}

/// Per-cell attention weights keyed by CAV id, for inspection and tests.
pub fn attention_weights(
    maps: &BTreeMap<u32, BevFeatureMap>,
    ego_id: u32,
    params: &AttentionParams,
) -> Result<Vec<Vec<(u32, f64)>>> {
    let mut all = Vec::new();
    for_each_cell(maps, ego_id, params, |_, _, ids, w| {
        all.push(ids.iter().copied().zip(w.iter().copied()).collect());
    })?;
    Ok(all)
}
