//! Discretizations of the Bloch sphere (polar) and the Bloch ball (cubic
//! lattice).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::algebra::BlochVector;
use crate::error::{Error, Result};

/// Cell-centred polar grid on the unit sphere with
/// `x = sinθ cosφ, y = sinθ sinφ, z = cosθ`.
///
/// `θ_i = (i + ½)Δθ` keeps the poles off the grid, `φ_j = jΔφ` is periodic.
/// A θ-stencil step across a pole lands on the same ring, rotated by π in φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl PolarGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 {
            return Err(Error::invalid("n_theta", "need at least 2 rings"));
        }
        if n_phi < 4 || n_phi % 2 != 0 {
            return Err(Error::invalid("n_phi", "must be even and at least 4"));
        }
        Ok(Self { n_theta, n_phi })
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        TAU / self.n_phi as f64
    }

    /// `θmin = Δθ/2`
    pub fn theta_min(&self) -> f64 {
        0.5 * self.d_theta()
    }

    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.d_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.d_phi()
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.n_phi, k % self.n_phi)
    }

    pub fn wrap_phi(&self, j: isize) -> usize {
        j.rem_euclid(self.n_phi as isize) as usize
    }

    /// Node reached from `(i, j)` by `step` rings in θ, reflecting across the
    /// poles.
    pub fn step_theta(&self, i: usize, j: usize, step: isize) -> (usize, usize) {
        let n = self.n_theta as isize;
        let mut ti = i as isize + step;
        let mut j = j;
        if ti < 0 {
            ti = -ti - 1;
            j = self.wrap_phi(j as isize + self.n_phi as isize / 2);
        } else if ti >= n {
            ti = 2 * n - ti - 1;
            j = self.wrap_phi(j as isize + self.n_phi as isize / 2);
        }
        (ti as usize, j)
    }

    pub fn point(&self, i: usize, j: usize) -> BlochVector {
        polar_to_bloch(self.theta(i), self.phi(j))
    }

    /// Nearest node to the direction `(θ, φ)`.
    pub fn nearest(&self, theta: f64, phi: f64) -> (usize, usize) {
        let i = ((theta / self.d_theta()).floor().max(0.0) as usize).min(self.n_theta - 1);
        let j = self.wrap_phi((phi / self.d_phi()).round() as isize);
        (i, j)
    }

    pub fn nearest_to(&self, r: BlochVector) -> (usize, usize) {
        let (t, p) = bloch_to_polar(r);
        self.nearest(t, p)
    }

    /// Target node together with its eight surrounding nodes.
    pub fn target_block(&self, i: usize, j: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(9);
        for di in -1..=1 {
            let (ti, tj) = if di == 0 { (i, j) } else { self.step_theta(i, j, di) };
            for dj in -1..=1 {
                let k = self.index(ti, self.wrap_phi(tj as isize + dj));
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        }
        out
    }

    fn ring_stencil(&self, ring: isize, phi: f64, weight: f64, out: &mut [(usize, f64); 4], slot: usize) {
        let n = self.n_theta as isize;
        let (ring, phi) = if ring < 0 {
            (0, phi + PI)
        } else if ring >= n {
            (n - 1, phi + PI)
        } else {
            (ring, phi)
        };
        let s = phi.rem_euclid(TAU) / self.d_phi();
        let j0 = s.floor();
        let t = s - j0;
        let j0 = self.wrap_phi(j0 as isize);
        let j1 = self.wrap_phi(j0 as isize + 1);
        let row = ring as usize * self.n_phi;
        out[slot] = (row + j0, weight * (1.0 - t));
        out[slot + 1] = (row + j1, weight * t);
    }

    /// Nodes and weights of the bilinear interpolant at `(θ, φ)`; periodic in
    /// φ and continued across the poles.
    pub fn stencil(&self, theta: f64, phi: f64) -> [(usize, f64); 4] {
        let s = theta / self.d_theta() - 0.5;
        let i0 = s.floor();
        let t = s - i0;
        let i0 = i0 as isize;
        let mut out = [(0, 0.0); 4];
        self.ring_stencil(i0, phi, 1.0 - t, &mut out, 0);
        self.ring_stencil(i0 + 1, phi, t, &mut out, 2);
        out
    }

    pub fn interpolate(&self, values: &[f64], theta: f64, phi: f64) -> f64 {
        apply_stencil(&self.stencil(theta, phi), values)
    }

    pub fn interpolate_at(&self, values: &[f64], r: BlochVector) -> f64 {
        let (t, p) = bloch_to_polar(r);
        self.interpolate(values, t, p)
    }
}

/// Weighted sum over a stencil; zero weights are skipped so that exact node
/// hits reproduce the node value bit for bit.
pub fn apply_stencil(stencil: &[(usize, f64); 4], values: &[f64]) -> f64 {
    stencil
        .iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|&(k, w)| w * values[k])
        .sum()
}

pub fn polar_to_bloch(theta: f64, phi: f64) -> BlochVector {
    BlochVector::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Polar angles of the direction of `r`, with `φ ∈ [0, 2π)`.
pub fn bloch_to_polar(r: BlochVector) -> (f64, f64) {
    let rho = r.norm();
    let theta = if rho > 0.0 { (r.z / rho).clamp(-1.0, 1.0).acos() } else { 0.0 };
    (theta, r.y.atan2(r.x).rem_euclid(TAU))
}

/// Great-circle angle between two directions.
pub fn angular_distance(a: BlochVector, b: BlochVector) -> f64 {
    let d = a.dot(b) / (a.norm() * b.norm());
    d.clamp(-1.0, 1.0).acos()
}

/// Cubic lattice of spacing `h` on `[−R, R]³`, restricted to the closed ball
/// of radius `R`.
///
/// Values are stored on the full lattice. Nodes outside the ball are ghosts
/// that mirror the nearest node inside, which keeps every stencil monotone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGrid {
    pub h: f64,
    pub radius: f64,
    pub n: usize,
    #[serde(skip)]
    ghost_source: Vec<usize>,
}

const MASK_TOL: f64 = 1e-9;

impl BallGrid {
    pub fn new(h: f64, radius: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        let cells = 2.0 * radius / h;
        if (cells - cells.round()).abs() > 1e-6 || cells.round() < 2.0 {
            return Err(Error::invalid("h", "must divide the lattice width 2R"));
        }
        let n = cells.round() as usize + 1;
        let mut grid = Self {
            h,
            radius,
            n,
            ghost_source: Vec::new(),
        };
        grid.ghost_source = (0..grid.len()).map(|k| grid.nearest_inside(k)).collect();
        Ok(grid)
    }

    /// The unit Bloch ball with spacing `h`.
    pub fn unit(h: f64) -> Result<Self> {
        Self::new(h, 1.0)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.h
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.coords(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn bloch(&self, idx: usize) -> BlochVector {
        BlochVector::from_array(self.point(idx))
    }

    pub fn in_ball(&self, idx: usize) -> bool {
        let [x, y, z] = self.point(idx);
        (x * x + y * y + z * z).sqrt() <= self.radius + MASK_TOL
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.in_ball(k)).collect()
    }

    /// Lattice node nearest to `p`.
    pub fn nearest_node(&self, p: [f64; 3]) -> usize {
        let c = |v: f64| (((v + self.radius) / self.h).round().max(0.0) as usize).min(self.n - 1);
        self.index(c(p[0]), c(p[1]), c(p[2]))
    }

    fn nearest_inside(&self, idx: usize) -> usize {
        if self.in_ball(idx) {
            return idx;
        }
        let p = self.point(idx);
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let q = p.map(|v| v * self.radius / norm);
        let base = self.coords(self.nearest_node(q));
        let dist2 = |k: usize| {
            let r = self.point(k);
            (0..3).map(|d| (r[d] - p[d]).powi(2)).sum::<f64>()
        };
        let mut best: Option<(f64, usize)> = None;
        for di in -2isize..=2 {
            for dj in -2isize..=2 {
                for dk in -2isize..=2 {
                    let c = [base[0] as isize + di, base[1] as isize + dj, base[2] as isize + dk];
                    if c.iter().any(|&v| v < 0 || v >= self.n as isize) {
                        continue;
                    }
                    let k = self.index(c[0] as usize, c[1] as usize, c[2] as usize);
                    if self.in_ball(k) {
                        let d = dist2(k);
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, k));
                        }
                    }
                }
            }
        }
        best.map(|(_, k)| k).unwrap_or_else(|| self.nearest_node([0.0; 3]))
    }

    /// Source node whose value a lattice node carries.
    pub fn ghost_source(&self, idx: usize) -> usize {
        self.ghost_source[idx]
    }

    /// Copies every ghost from its in-ball source.
    pub fn fill_ghosts(&self, values: &mut [f64]) {
        for k in 0..self.len() {
            let s = self.ghost_source[k];
            if s != k {
                values[k] = values[s];
            }
        }
    }

    /// Trilinear interpolation of full-lattice values; points outside the
    /// lattice are clamped onto it.
    pub fn interpolate(&self, values: &[f64], p: [f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let s = ((p[d] + self.radius) / self.h).clamp(0.0, (self.n - 1) as f64);
            let i = (s.floor() as usize).min(self.n - 2);
            base[d] = i;
            frac[d] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut c = base;
            for d in 0..3 {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    c[d] += 1;
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * values[self.index(c[0], c[1], c[2])];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_grid_layout() {
        let g = PolarGrid::new(40, 80).unwrap();
        assert!((g.d_theta() - PI / 40.0).abs() < 1e-15);
        assert!((g.d_phi() - PI / 40.0).abs() < 1e-15);
        assert!(g.theta_min() > 0.0);
        assert!((g.theta(39) - (PI - g.theta_min())).abs() < 1e-14);
        assert_eq!(g.coords(g.index(7, 13)), (7, 13));
        assert_eq!(g.wrap_phi(-1), 79);
        assert_eq!(g.wrap_phi(80), 0);
        assert!(PolarGrid::new(40, 81).is_err());
        assert!(PolarGrid::new(1, 80).is_err());
    }

    #[test]
    fn pole_reflection() {
        let g = PolarGrid::new(10, 20).unwrap();
        assert_eq!(g.step_theta(0, 3, -1), (0, 13));
        assert_eq!(g.step_theta(9, 15, 1), (9, 5));
        assert_eq!(g.step_theta(4, 2, 1), (5, 2));
        // the reflected node is the geometric continuation of the great circle
        let across = g.point(0, 13);
        let continued = polar_to_bloch(-g.theta(0), g.phi(3));
        assert!(across.max_abs_diff(continued) < 1e-14);
    }

    #[test]
    fn target_block_has_nine_nodes() {
        let g = PolarGrid::new(10, 20).unwrap();
        assert_eq!(g.target_block(5, 0).len(), 9);
        assert_eq!(g.target_block(0, 0).len(), 9);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_linear_data() {
        let g = PolarGrid::new(12, 24).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|k| g.point(g.coords(k).0, g.coords(k).1).z).collect();
        for (i, j) in [(0, 0), (5, 7), (11, 23)] {
            assert_eq!(g.interpolate(&values, g.theta(i), g.phi(j)), values[g.index(i, j)]);
        }
        // z depends on θ only: interpolation between rings is linear in θ
        let mid = 0.5 * (g.theta(3) + g.theta(4));
        let expect = 0.5 * (g.theta(3).cos() + g.theta(4).cos());
        assert!((g.interpolate(&values, mid, 1.234) - expect).abs() < 1e-14);
    }

    #[test]
    fn polar_round_trip() {
        let r = BlochVector::new(0.3, -0.4, (1.0f64 - 0.25).sqrt());
        let (t, p) = bloch_to_polar(r);
        assert!(polar_to_bloch(t, p).max_abs_diff(r) < 1e-15);
        assert!((angular_distance(BlochVector::EXCITED, BlochVector::GROUND) - PI).abs() < 1e-15);
    }

    #[test]
    fn ball_grid_mask_and_ghosts() {
        let g = BallGrid::unit(0.1).unwrap();
        assert_eq!(g.n, 21);
        let inside = g.interior();
        assert!(!inside.is_empty());
        let pole = g.nearest_node([0.0, 0.0, 1.0]);
        assert!(g.in_ball(pole));
        let corner = g.index(0, 0, 0);
        assert!(!g.in_ball(corner));
        let src = g.ghost_source(corner);
        assert!(g.in_ball(src));
        let p = g.point(src);
        assert!(p.iter().all(|&v| v < 0.0));
        assert!(BallGrid::new(0.3, 1.0).is_err());
        assert!(BallGrid::new(0.0, 1.0).is_err());
    }

    #[test]
    fn trilinear_is_exact_on_affine_data() {
        let g = BallGrid::new(0.25, 2.0).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|k| {
                let p = g.point(k);
                1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2]
            })
            .collect();
        let p = [0.13, -0.71, 1.02];
        let expect = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2];
        assert!((g.interpolate(&values, p) - expect).abs() < 1e-13);
    }
}
