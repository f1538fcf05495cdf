//! Adaptive composite Simpson integration with a midpoint-rule fallback.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes of the initial uniform partition on each smooth piece (>= 2).
    pub nodes: usize,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Slice count for the midpoint fallback used when adaptive refinement
    /// runs out of depth.
    pub fallback_slices: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 9,
            rel_tol: 1e-9,
            max_depth: 40,
            fallback_slices: 1_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.rel_tol > 0.0) || self.fallback_slices == 0 {
            return Err(Error::InvalidArgument(
                "quadrature tolerance and fallback slices must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How a quadrature result was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    AdaptiveSimpson,
    MidpointFallback,
}

/// Integrate `f` over `[a, b]`, splitting first at every interior point of
/// `breaks`. Each piece is assumed smooth. `f` returning a non-finite value
/// aborts with [`Error::Evaluation`].
pub fn integrate<F>(f: F, a: f64, b: f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<(f64, Method)>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if a == b {
        return Ok((0.0, Method::AdaptiveSimpson));
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation { x })
        }
    };

    // Coarse pass sets the absolute tolerance from the magnitude of the
    // integral itself.
    let panels = spec.nodes - 1;
    let mut coarse = Vec::new();
    let mut scale = 0.0;
    for w in cuts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let lo = w[0] + h * k as f64;
            let hi = if k + 1 == panels { w[1] } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (fa, fm, fb) = (eval(lo)?, eval(mid)?, eval(hi)?);
            let s = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            scale += ((hi - lo) / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs())).abs();
            coarse.push(Panel { lo, hi, fa, fm, fb, s });
        }
    }
    let abs_tol = spec.rel_tol * scale.max(f64::MIN_POSITIVE);
    let total_width = b - a;

    let mut sum = 0.0;
    for p in &coarse {
        let tol = abs_tol * (p.hi - p.lo) / total_width;
        match refine(&eval, p, tol, spec.max_depth)? {
            Some(v) => sum += v,
            None => {
                return midpoint(&eval, a, b, spec.fallback_slices)
                    .map(|v| (v, Method::MidpointFallback))
            }
        }
    }
    Ok((sum, Method::AdaptiveSimpson))
}

struct Panel {
    lo: f64,
    hi: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    s: f64,
}

/// Returns `Ok(None)` when depth is exhausted before the tolerance is met.
fn refine<E>(eval: &E, p: &Panel, tol: f64, depth: u32) -> Result<Option<f64>>
where
    E: Fn(f64) -> Result<f64>,
{
    let mid = 0.5 * (p.lo + p.hi);
    let lm = 0.5 * (p.lo + mid);
    let rm = 0.5 * (mid + p.hi);
    let (flm, frm) = (eval(lm)?, eval(rm)?);
    let left = Panel {
        lo: p.lo,
        hi: mid,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        s: (mid - p.lo) / 6.0 * (p.fa + 4.0 * flm + p.fm),
    };
    let right = Panel {
        lo: mid,
        hi: p.hi,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        s: (p.hi - mid) / 6.0 * (p.fm + 4.0 * frm + p.fb),
    };
    let both = left.s + right.s;
    let delta = both - p.s;
    if delta.abs() <= 15.0 * tol {
        return Ok(Some(both + delta / 15.0));
    }
    if depth == 0 {
        return Ok(None);
    }
    let l = refine(eval, &left, 0.5 * tol, depth - 1)?;
    let r = refine(eval, &right, 0.5 * tol, depth - 1)?;
    Ok(l.zip(r).map(|(l, r)| l + r))
}

fn midpoint<E>(eval: &E, a: f64, b: f64, slices: usize) -> Result<f64>
where
    E: Fn(f64) -> Result<f64>,
{
    let h = (b - a) / slices as f64;
    let mut acc = 0.0;
    for k in 0..slices {
        acc += eval(a + (k as f64 + 0.5) * h)?;
    }
    Ok(acc * h)
}
