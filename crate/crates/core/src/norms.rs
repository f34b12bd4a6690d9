//! Sobolev, Lebesgue and Hölder norms of spectral fields.

use crate::error::{Error, Result};
use crate::fft::Transformer;
use crate::field::SpectralField;
use crate::grid::Grid;

/// Upper bound on the number of point pairs visited by the Hölder estimator.
pub const HOLDER_PAIR_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    /// `(s, ||Λ^s f||)` in request order.
    pub hs: Vec<(f64, f64)>,
    /// `(p, ||f||_p)` in request order; `p = inf` is allowed.
    pub lp: Vec<(f64, f64)>,
    pub linf: f64,
    /// `(alpha, estimate)`; a lower bound of the true seminorm.
    pub holder: Vec<(f64, f64)>,
}

impl NormReport {
    pub fn hs(&self, s: f64) -> Option<f64> {
        lookup(&self.hs, s)
    }

    pub fn lp(&self, p: f64) -> Option<f64> {
        lookup(&self.lp, p)
    }

    pub fn holder(&self, alpha: f64) -> Option<f64> {
        lookup(&self.holder, alpha)
    }
}

fn lookup(v: &[(f64, f64)], key: f64) -> Option<f64> {
    v.iter().find(|(k, _)| *k == key).map(|(_, x)| *x)
}

pub fn norms(
    f: &SpectralField,
    s_list: &[f64],
    p_list: &[f64],
    alpha_list: &[f64],
) -> Result<NormReport> {
    norms_with(&mut Transformer::new(f.grid()), f, s_list, p_list, alpha_list)
}

/// [`norms`] reusing an existing transform plan.
pub fn norms_with(
    transformer: &mut Transformer,
    f: &SpectralField,
    s_list: &[f64],
    p_list: &[f64],
    alpha_list: &[f64],
) -> Result<NormReport> {
    for &p in p_list {
        if ![1.0, 2.0, 3.0, 4.0, f64::INFINITY].contains(&p) {
            return Err(Error::InvalidParameter(format!("unsupported L^p exponent {p}")));
        }
    }
    for &a in alpha_list {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidParameter(format!("Hölder exponent {a} outside (0, 1]")));
        }
    }
    let grid = f.grid();
    let samples = transformer.backward(f)?;
    let hs = s_list.iter().map(|&s| (s, f.norm_hs(s))).collect();
    let lp = p_list
        .iter()
        .map(|&p| (p, lp_from_samples(grid, &samples, p)))
        .collect();
    let holder = holder_from_samples(grid, &samples, alpha_list);
    Ok(NormReport {
        l2: f.norm_l2(),
        hs,
        lp,
        linf: linf_from_samples(&samples),
        holder: alpha_list.iter().copied().zip(holder).collect(),
    })
}

pub fn linf_from_samples(samples: &[f64]) -> f64 {
    samples.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Equal-weight quadrature `(h^d sum |f|^p)^{1/p}`.
pub fn lp_from_samples(grid: Grid, samples: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return linf_from_samples(samples);
    }
    let w = grid.volume() / grid.len() as f64;
    let sum: f64 = if p == 2.0 {
        samples.iter().map(|v| v * v).sum()
    } else {
        samples.iter().map(|v| v.abs().powf(p)).sum()
    };
    (w * sum).powf(1.0 / p)
}

/// Pair-maximum estimate of `[f]_{C^alpha}` for each alpha.
///
/// Separations are drawn from the positive half of the periodic offset
/// lattice: half of the offset budget goes to the shortest separations (which
/// dominate for smooth fields) and half is spread evenly over the rest.
/// Separations are at least one grid cell.
pub fn holder_from_samples(grid: Grid, samples: &[f64], alphas: &[f64]) -> Vec<f64> {
    if alphas.is_empty() {
        return Vec::new();
    }
    let offsets = holder_offsets(grid);
    let n_points = grid.len();
    let stride = (n_points * offsets.len()).div_ceil(HOLDER_PAIR_BUDGET).max(1);
    let n = grid.n() as i64;
    let h = grid.spacing();
    let mut best = vec![0.0f64; alphas.len()];
    for off in &offsets {
        let dist = h * ((off[0] * off[0] + off[1] * off[1] + off[2] * off[2]) as f64).sqrt();
        let weights: Vec<f64> = alphas.iter().map(|&a| dist.powf(-a)).collect();
        let mut diff_max = 0.0f64;
        for i in (0..n_points).step_by(stride) {
            let a = grid.axes(i);
            let mut j = 0usize;
            for (ax, &o) in a.iter().zip(off).take(grid.dim()) {
                j = j * grid.n() + ((*ax as i64 + o).rem_euclid(n)) as usize;
            }
            diff_max = diff_max.max((samples[i] - samples[j]).abs());
        }
        for (b, w) in best.iter_mut().zip(&weights) {
            *b = b.max(diff_max * w);
        }
    }
    best
}

fn holder_offsets(grid: Grid) -> Vec<[i64; 3]> {
    let n = grid.n() as i64;
    let half = n / 2;
    let range: Vec<i64> = (-half + 1..=half).collect();
    let third: &[i64] = if grid.dim() == 3 { &range } else { &[0] };
    let mut all = Vec::new();
    for &a in &range {
        for &b in &range {
            for &c in third {
                let o = [a, b, c];
                // strict lexicographic positivity picks one of each ±o pair
                let first = o.iter().find(|&&v| v != 0);
                if matches!(first, Some(&v) if v > 0) {
                    all.push(o);
                }
            }
        }
    }
    all.sort_by_key(|o| (o[0] * o[0] + o[1] * o[1] + o[2] * o[2], *o));
    let budget = (HOLDER_PAIR_BUDGET / grid.len()).max(2 * grid.dim());
    if all.len() <= budget {
        return all;
    }
    let near = budget / 2;
    let far = budget - near;
    let mut chosen: Vec<[i64; 3]> = all[..near].to_vec();
    let rest = &all[near..];
    for i in 0..far {
        chosen.push(rest[i * rest.len() / far]);
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::transform_forward;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cosine(n: usize) -> SpectralField {
        let g = Grid::new(2, n).unwrap();
        transform_forward(g, &g.sample(|x| x[0].cos())).unwrap()
    }

    #[test]
    fn cosine_l2_matches_parseval() {
        let r = norms(&cosine(32), &[0.0, 1.0], &[2.0], &[]).unwrap();
        assert_relative_eq!(r.l2, PI * 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(r.hs(0.0).unwrap(), r.l2, max_relative = 1e-15);
        assert_relative_eq!(r.hs(1.0).unwrap(), r.l2, max_relative = 1e-14);
        assert_relative_eq!(r.lp(2.0).unwrap(), r.l2, max_relative = 1e-12);
    }

    #[test]
    fn cosine_sup_and_lipschitz() {
        let r = norms(&cosine(64), &[], &[f64::INFINITY, 1.0], &[1.0, 0.5]).unwrap();
        assert!((r.linf - 1.0).abs() < 1e-8);
        assert_eq!(r.lp(f64::INFINITY), Some(r.linf));
        // int |cos x| over the 2-torus = 4 * 2 pi
        assert_relative_eq!(r.lp(1.0).unwrap(), 8.0 * PI, max_relative = 1e-3);
        let lip = r.holder(1.0).unwrap();
        assert!((lip - 1.0).abs() < 0.05, "holder(1) = {lip}");
        assert!(r.holder(0.5).unwrap() > 0.0);
    }

    #[test]
    fn rejects_unsupported_exponents() {
        let f = cosine(16);
        assert!(norms(&f, &[], &[5.0], &[]).is_err());
        assert!(norms(&f, &[], &[], &[0.0]).is_err());
        assert!(norms(&f, &[], &[], &[1.5]).is_err());
    }

    #[test]
    fn offsets_respect_budget() {
        let g = Grid::new(3, 64).unwrap();
        let offs = holder_offsets(g);
        assert!(offs.len() >= 3);
        assert!(offs.contains(&[0, 0, 1]) && offs.contains(&[1, 0, 0]));
        let g2 = Grid::new(2, 16).unwrap();
        // 16^2 points leave room for every half-space offset
        let all = holder_offsets(g2);
        assert!(all.len() > 127 && all.len() < 255);
    }
}
