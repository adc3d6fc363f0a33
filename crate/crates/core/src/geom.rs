//! Subspace geometry: orthonormal frames, the vector-to-plane distance η,
//! the subspace divergence δ(A,B) = sup { η(v,B) : v ∈ A, ||v|| = 1 },
//! and tangent frames of graph strata.
//!
//! δ is asymmetric in general; it vanishes iff A ⊆ B and equals the sine of
//! the largest principal angle when dim A = dim B.

use crate::expr::{EvalError, Expr};
use crate::numscale::Scalar;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("rank deficiency: vector {index} is dependent on its predecessors")]
    RankDeficient { index: usize },
    #[error("ambient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty vector set")]
    Empty,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Orthonormal frame spanning a linear subspace of R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    frame: Vec<Vec<f64>>,
}

/// Unit vector in ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(pub Vec<f64>);

impl Direction {
    pub fn new(v: Vec<f64>) -> Option<Direction> {
        let n = norm(&v);
        if n == 0.0 {
            return None;
        }
        Some(Direction(v.iter().map(|c| c / n).collect()))
    }

    pub fn angle_to(&self, other: &Direction) -> f64 {
        let c = dot(&self.0, &other.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

impl Subspace {
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// Frame from already-orthonormal axis vectors; panics if they are not
    /// (used for exact axis-aligned spans in the catalog).
    pub fn from_orthonormal(ambient: usize, frame: Vec<Vec<f64>>) -> Subspace {
        for (i, v) in frame.iter().enumerate() {
            assert_eq!(v.len(), ambient);
            assert!((norm(v) - 1.0).abs() < 1e-12, "frame vector {i} not unit");
            for w in frame.iter().skip(i + 1) {
                assert!(dot(v, w).abs() < 1e-12, "frame not orthogonal");
            }
        }
        Subspace { ambient, frame }
    }

    pub fn span_axes(ambient: usize, axes: &[usize]) -> Subspace {
        let frame = axes
            .iter()
            .map(|&a| {
                let mut v = vec![0.0; ambient];
                v[a] = 1.0;
                v
            })
            .collect();
        Subspace { ambient, frame }
    }

    /// Projection of `v` onto this subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        for b in &self.frame {
            let c = dot(v, b);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Rank is
/// detected at relative tolerance 1e-10 against the input scale.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Subspace, GeomError> {
    if vectors.is_empty() {
        return Err(GeomError::Empty);
    }
    let ambient = vectors[0].len();
    for v in vectors {
        if v.len() != ambient {
            return Err(GeomError::DimensionMismatch { left: ambient, right: v.len() });
        }
    }
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let scale = norm(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &frame {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = norm(&w);
        if n <= 1e-10 * scale.max(1e-300) {
            return Err(GeomError::RankDeficient { index });
        }
        for wi in w.iter_mut() {
            *wi /= n;
        }
        frame.push(w);
    }
    Ok(Subspace { ambient, frame })
}

/// Distance of the vector `v` to the plane `B`: the norm of the component
/// of `v` orthogonal to `B` (equivalently the sup of <v,n> over unit
/// normals n of B).
pub fn eta(v: &[f64], b: &Subspace) -> Result<f64, GeomError> {
    if v.len() != b.ambient {
        return Err(GeomError::DimensionMismatch { left: v.len(), right: b.ambient });
    }
    let p = b.project(v);
    let mut s = 0.0;
    for (vi, pi) in v.iter().zip(&p) {
        let d = vi - pi;
        s += d * d;
    }
    Ok(s.sqrt())
}

/// δ(A,B): largest singular value of (I - P_B) restricted to A's frame,
/// computed by Jacobi iteration on the small Gram matrix. Always in [0,1].
pub fn delta(a: &Subspace, b: &Subspace) -> Result<f64, GeomError> {
    if a.ambient != b.ambient {
        return Err(GeomError::DimensionMismatch { left: a.ambient, right: b.ambient });
    }
    let k = a.dim();
    // columns c_i = a_i - P_B a_i
    let cols: Vec<Vec<f64>> = a
        .frame
        .iter()
        .map(|ai| {
            let p = b.project(ai);
            ai.iter().zip(&p).map(|(x, y)| x - y).collect()
        })
        .collect();
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let g = dot(&cols[i], &cols[j]);
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    let lmax = jacobi_max_eigenvalue(&mut gram);
    Ok(lmax.max(0.0).sqrt().min(1.0))
}

/// Largest eigenvalue of a small symmetric matrix by cyclic Jacobi
/// rotations; off-diagonal tolerance 1e-13 relative to the matrix scale.
#[allow(clippy::needless_range_loop)]
fn jacobi_max_eigenvalue(m: &mut [Vec<f64>]) -> f64 {
    let k = m.len();
    if k == 0 {
        return 0.0;
    }
    if k == 1 {
        return m[0][0];
    }
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                off = off.max(m[i][j].abs());
            }
        }
        if off <= 1e-13 * scale {
            break;
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if m[i][j].abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[j][j] - m[i][i]) / m[i][j];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for l in 0..k {
                    let mil = m[i][l];
                    let mjl = m[j][l];
                    m[i][l] = c * mil - s * mjl;
                    m[j][l] = s * mil + c * mjl;
                }
                for l in 0..k {
                    let mli = m[l][i];
                    let mlj = m[l][j];
                    m[l][i] = c * mli - s * mlj;
                    m[l][j] = s * mli + c * mlj;
                }
            }
        }
    }
    (0..k).map(|i| m[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

/// How graph-stratum coordinates embed in ambient space: parameter i sits on
/// ambient axis `param_axes[i]`, the graph value on `value_axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayout {
    pub ambient: usize,
    pub param_axes: Vec<usize>,
    pub value_axis: usize,
}

impl GraphLayout {
    /// Ambient point from parameter values and the graph value.
    pub fn embed<S: Scalar>(&self, params: &[S], value: S) -> Vec<S> {
        let mut p = vec![S::zero(); self.ambient];
        for (i, &ax) in self.param_axes.iter().enumerate() {
            p[ax] = params[i];
        }
        p[self.value_axis] = value;
        p
    }
}

/// Tangent plane of the graph of `h` at a parameter point: the span of
/// (e_i, ∂h/∂x_i), orthonormalized, embedded per `layout`.
pub fn tangent_of_graph(
    h: &Expr,
    point: &[(&str, f64)],
    layout: &GraphLayout,
) -> Result<Subspace, GeomError> {
    let jet = h.eval_jet(point)?;
    let mut vecs = Vec::with_capacity(layout.param_axes.len());
    for (i, &ax) in layout.param_axes.iter().enumerate() {
        let mut v = vec![0.0; layout.ambient];
        v[ax] = 1.0;
        v[layout.value_axis] = jet.gradient[i];
        vecs.push(v);
    }
    orthonormalize(&vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn orthonormalize_examples() {
        let s = orthonormalize(&[vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(s.dim(), 2);
        assert!((s.frame()[0][0] - 1.0).abs() < 1e-15);
        assert!((s.frame()[1][1] - 1.0).abs() < 1e-12);
        // scaling invariance
        let s = orthonormalize(&[vec![2.0, 0.0, 0.0]]).unwrap();
        assert!((s.frame()[0][0] - 1.0).abs() < 1e-15);
        // near-dependence is rank deficiency
        let r = orthonormalize(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1e-13]]);
        assert!(matches!(r, Err(GeomError::RankDeficient { index: 1 })));
    }

    #[test]
    fn eta_examples() {
        let e1 = Subspace::span_axes(2, &[0]);
        assert!((eta(&[0.0, 1.0], &e1).unwrap() - 1.0).abs() < 1e-15);
        assert!(eta(&[1.0, 0.0], &e1).unwrap() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [s, s];
        assert!((eta(&v, &e1).unwrap() - s).abs() < 1e-12);
    }

    /// Brute-force sup of <v,n> over unit normals n ⟂ B, the paper-side
    /// definition of η; independent oracle for the projection formula.
    fn eta_bruteforce(v: &[f64], b: &Subspace, samples: usize) -> f64 {
        // sample directions in ambient space, project out B, normalize
        let mut best: f64 = 0.0;
        let n = v.len();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..samples {
            let cand: Vec<f64> = (0..n).map(|_| rnd()).collect();
            let p = b.project(&cand);
            let mut w: Vec<f64> = cand.iter().zip(&p).map(|(x, y)| x - y).collect();
            let nw = dot(&w, &w).sqrt();
            if nw < 1e-12 {
                continue;
            }
            for wi in w.iter_mut() {
                *wi /= nw;
            }
            best = best.max(dot(v, &w).abs());
        }
        best
    }

    #[test]
    fn eta_matches_bruteforce_sup() {
        let b = orthonormalize(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [s, s, 0.0];
        let exact = eta(&v, &b).unwrap();
        let brute = eta_bruteforce(&v, &b, 20000);
        assert!((exact - s).abs() < 1e-12);
        assert!(brute <= exact + 1e-9);
        assert!(exact - brute < 2e-3);
    }

    #[test]
    fn delta_examples() {
        let e1 = Subspace::span_axes(2, &[0]);
        let e2 = Subspace::span_axes(2, &[1]);
        assert!(delta(&e1, &e1).unwrap() < 1e-15);
        assert!((delta(&e1, &e2).unwrap() - 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = orthonormalize(&[vec![s, s]]).unwrap();
        let d = delta(&diag, &e1).unwrap();
        assert!((d - s).abs() < 1e-9);
    }

    #[test]
    fn delta_bruteforce_sup_agrees() {
        // sup over sampled unit u in E of eta(u, F)
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = orthonormalize(&[vec![s, s]]).unwrap();
        let f = Subspace::span_axes(2, &[0]);
        let exact = delta(&e, &f).unwrap();
        let mut best: f64 = 0.0;
        for i in 0..10_000 {
            let t = i as f64 / 10_000.0 * std::f64::consts::TAU;
            // unit vectors of E are ±(s,s); parameterize the 1-sphere in E
            let u: Vec<f64> = e.frame()[0].iter().map(|c| c * t.cos().signum()).collect();
            best = best.max(eta(&u, &f).unwrap());
        }
        assert!((exact - best).abs() < 1e-9);
    }

    #[test]
    fn tangent_of_graph_examples() {
        let layout = GraphLayout { ambient: 3, param_axes: vec![0, 2], value_axis: 1 };
        // h = 0: tangent is span{e_x, e_z}
        let h0 = parse("0*x + 0*z").unwrap();
        let t = tangent_of_graph(&h0, &[("x", 0.3), ("z", 0.1)], &layout).unwrap();
        let expect = Subspace::span_axes(3, &[0, 2]);
        assert!(delta(&t, &expect).unwrap() < 1e-12);
        assert!(delta(&expect, &t).unwrap() < 1e-12);

        // graph of g at (0, 0.5): span{e_x, (0,1,1)/sqrt2}
        let g = parse("exp((x^2+1)*ln(z))").unwrap();
        let t = tangent_of_graph(&g, &[("x", 0.0), ("z", 0.5)], &layout).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect =
            orthonormalize(&[vec![1.0, 0.0, 0.0], vec![0.0, s, s]]).unwrap();
        assert!(delta(&t, &expect).unwrap() < 1e-10);

        // h = z: plane {y = z}
        let hz = parse("z + 0*x").unwrap();
        let t = tangent_of_graph(&hz, &[("x", 0.2), ("z", 0.3)], &layout).unwrap();
        let expect = orthonormalize(&[vec![1.0, 0.0, 0.0], vec![0.0, s, s]]).unwrap();
        assert!(delta(&t, &expect).unwrap() < 1e-10);
    }
}
