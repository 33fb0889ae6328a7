//! Uniform lattices on the free coordinates of a stage simplex and
//! piecewise-linear interpolation on them.
//!
//! For stage `k` of an `r`-atom problem the free coordinates are
//! `(y_k, …, y_{r-1})`; `y_r` is whatever mass remains. Lattice nodes are the
//! integer vectors `i` with `i_m ≥ 0` and `Σ i_m ≤ N`, scaled by `dy = 1/N`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexLattice {
    dim: usize,
    divisions: usize,
    /// Flattened node coordinates, `dim` entries per node.
    coords: Vec<u32>,
    /// Dense index over the box `[0, N]^dim`; `u32::MAX` outside the simplex.
    dense: Vec<u32>,
}

impl SimplexLattice {
    pub fn new(dim: usize, divisions: usize) -> Result<Self> {
        if divisions == 0 {
            return Err(Error::InvalidGrid("simplex lattice needs at least one division".into()));
        }
        let side = divisions + 1;
        let box_len = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= 50_000_000)
            .ok_or_else(|| Error::InvalidGrid(format!("lattice of dimension {dim} with {divisions} divisions is too large")))?;
        let mut dense = vec![u32::MAX; box_len];
        let mut coords = Vec::new();
        let mut count = 0u32;
        let mut idx = vec![0usize; dim];
        for (flat, slot) in dense.iter_mut().enumerate() {
            let mut rest = flat;
            for m in (0..dim).rev() {
                idx[m] = rest % side;
                rest /= side;
            }
            if idx.iter().sum::<usize>() <= divisions {
                *slot = count;
                coords.extend(idx.iter().map(|&i| i as u32));
                count += 1;
            }
        }
        Ok(Self { dim, divisions, coords, dense })
    }

    /// Lattice with spacing `dy`; `1/dy` must be an integer.
    pub fn with_spacing(dim: usize, dy: f64) -> Result<Self> {
        let n = (1.0 / dy).round();
        if !(dy > 0.0) || n < 1.0 || ((n * dy) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!("1/dy must be a positive integer (dy = {dy})")));
        }
        Self::new(dim, n as usize)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn divisions(&self) -> usize {
        self.divisions
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            1
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer coordinates of node `j`.
    pub fn node(&self, j: usize) -> &[u32] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the integer point `p`, if it lies in the lattice.
    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        let side = self.divisions as i64 + 1;
        let mut flat = 0i64;
        for &c in p {
            if c < 0 || c >= side {
                return None;
            }
            flat = flat * side + c;
        }
        match self.dense[flat as usize] {
            u32::MAX => None,
            j => Some(j as usize),
        }
    }

    /// Box strides of the dense index, last coordinate fastest.
    pub(crate) fn strides(&self) -> Vec<i64> {
        let side = self.divisions as i64 + 1;
        (0..self.dim).map(|m| side.pow((self.dim - 1 - m) as u32)).collect()
    }

    /// Lattice index at a flat box offset known to lie in the simplex.
    #[inline]
    pub(crate) fn dense_slot(&self, flat: i64) -> usize {
        self.dense[flat as usize] as usize
    }

    /// Free coordinates of node `j` as probabilities.
    pub fn free_coords(&self, j: usize) -> Vec<f64> {
        let dy = self.spacing();
        self.node(j).iter().map(|&i| i as f64 * dy).collect()
    }

    /// Full length-`r` simplex vector of node `j` for stage `stage`.
    pub fn full_coords(&self, j: usize, stage: usize, atoms: usize) -> Vec<f64> {
        debug_assert_eq!(atoms - stage, self.dim);
        let mut y = vec![0.0; atoms];
        let n = self.divisions as f64;
        let mut used = 0u32;
        for (m, &i) in self.node(j).iter().enumerate() {
            y[stage - 1 + m] = i as f64 / n;
            used += i;
        }
        y[atoms - 1] = (self.divisions as u32 - used) as f64 / n;
        y
    }

    /// True when node `j` is a vertex of the simplex (only the zero direction is admissible).
    pub fn is_vertex(&self, j: usize) -> bool {
        let node = self.node(j);
        let s: u32 = node.iter().sum();
        let nonzero = node.iter().filter(|&&i| i > 0).count() + usize::from(s < self.divisions as u32);
        nonzero <= 1
    }

    /// Nearest lattice node to the free coordinates `y` (clamped into the simplex).
    pub fn nearest(&self, y: &[f64]) -> usize {
        let n = self.divisions as f64;
        let mut p: Vec<i64> = y.iter().map(|&v| (v.clamp(0.0, 1.0) * n).round() as i64).collect();
        // rounding can overshoot the simplex; shave the largest coordinates
        let mut excess: i64 = p.iter().sum::<i64>() - self.divisions as i64;
        while excess > 0 {
            let m = (0..p.len())
                .max_by(|&a, &b| {
                    let ra = p[a] as f64 - y[a] * n;
                    let rb = p[b] as f64 - y[b] * n;
                    ra.partial_cmp(&rb).unwrap()
                })
                .unwrap();
            p[m] -= 1;
            excess -= 1;
        }
        self.index_of(&p).expect("clamped point lies in the lattice")
    }

    /// Convex weights of lattice nodes whose combination reproduces `y`
    /// (free coordinates, clamped into the simplex). The weights define a
    /// continuous piecewise-linear interpolant that is exact for affine
    /// functions; in one dimension it is ordinary linear interpolation.
    pub fn interpolation_weights(&self, y: &[f64]) -> Vec<(usize, f64)> {
        if self.dim == 0 {
            return vec![(0, 1.0)];
        }
        let n = self.divisions as f64;
        // barycentric coordinates in lattice units, including the dependent one
        let mut z: Vec<f64> = y.iter().map(|&v| (v * n).max(0.0)).collect();
        let s: f64 = z.iter().sum();
        if s > n {
            z.iter_mut().for_each(|v| *v *= n / s);
        }
        let s: f64 = z.iter().sum();
        z.push((n - s).max(0.0));
        let base: Vec<i64> = z.iter().map(|v| v.floor() as i64).collect();
        let frac: Vec<f64> = z.iter().zip(&base).map(|(v, b)| v - *b as f64).collect();
        let extra = (self.divisions as i64 - base.iter().sum::<i64>()).max(0);
        if extra == 0 {
            return vec![(self.index_of(&base[..self.dim]).expect("node"), 1.0)];
        }
        // Lay the fractional parts end to end on [0, extra); for t in [0, 1) the
        // coordinates containing one of t, t+1, … get the extra units.
        let mut cum = Vec::with_capacity(frac.len() + 1);
        cum.push(0.0);
        for f in &frac {
            cum.push(cum.last().unwrap() + f);
        }
        let scale = extra as f64 / cum.last().unwrap();
        cum.iter_mut().for_each(|c| *c *= scale);
        let mut breaks: Vec<f64> = cum.iter().map(|c| c - c.floor()).chain([0.0, 1.0]).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let weight = w[1] - w[0];
            if weight <= 0.0 {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let mut vertex = base.clone();
            for m in 0..frac.len() {
                let first = (cum[m] - mid).ceil().max(0.0);
                if first + mid < cum[m + 1] && first < extra as f64 {
                    vertex[m] += 1;
                }
            }
            if vertex.iter().sum::<i64>() != self.divisions as i64 {
                continue;
            }
            if let Some(j) = self.index_of(&vertex[..self.dim]) {
                total += weight;
                match out.iter_mut().find(|(i, _)| *i == j) {
                    Some(entry) => entry.1 += weight,
                    None => out.push((j, weight)),
                }
            }
        }
        out.iter_mut().for_each(|(_, w)| *w /= total);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        assert_eq!(SimplexLattice::new(0, 10).unwrap().len(), 1);
        assert_eq!(SimplexLattice::new(1, 200).unwrap().len(), 201);
        assert_eq!(SimplexLattice::new(2, 50).unwrap().len(), 51 * 52 / 2);
        assert_eq!(SimplexLattice::new(3, 4).unwrap().len(), 35);
        assert!(SimplexLattice::with_spacing(1, 0.3).is_err());
        assert_eq!(SimplexLattice::with_spacing(1, 0.005).unwrap().divisions(), 200);
    }

    #[test]
    fn full_coordinates_sum_to_one() {
        let lat = SimplexLattice::new(2, 50).unwrap();
        for j in 0..lat.len() {
            let y = lat.full_coords(j, 1, 3);
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(y.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn vertices() {
        let lat = SimplexLattice::new(2, 4).unwrap();
        let vertices: Vec<_> = (0..lat.len()).filter(|&j| lat.is_vertex(j)).map(|j| lat.node(j).to_vec()).collect();
        assert_eq!(vertices, vec![vec![0, 0], vec![0, 4], vec![4, 0]]);
    }

    #[test]
    fn one_dimensional_weights_are_linear() {
        let lat = SimplexLattice::new(1, 10).unwrap();
        let w = lat.interpolation_weights(&[0.43]);
        let value: f64 = w.iter().map(|&(j, a)| a * lat.free_coords(j)[0]).sum();
        assert!((value - 0.43).abs() < 1e-12);
        assert_eq!(w.len(), 2);
        assert_eq!(lat.interpolation_weights(&[0.4]), vec![(4, 1.0)]);
    }

    #[test]
    fn two_dimensional_triangle_weights() {
        let lat = SimplexLattice::new(2, 1).unwrap();
        let w = lat.interpolation_weights(&[0.5, 0.4]);
        let mut got = vec![0.0; 3];
        for (j, a) in w {
            got[j] = a;
        }
        // nodes in lexicographic order: (0,0), (0,1), (1,0)
        assert!((got[0] - 0.1).abs() < 1e-12);
        assert!((got[1] - 0.4).abs() < 1e-12);
        assert!((got[2] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn interpolation_reproduces_affine_functions(
            raw in proptest::collection::vec(0.0f64..1.0, 4),
            dim in 1usize..4,
            n in 1usize..12,
            a in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let lat = SimplexLattice::new(dim, n).unwrap();
            let s: f64 = raw.iter().sum::<f64>().max(1e-9);
            let y: Vec<f64> = raw[..dim].iter().map(|v| v / s).collect();
            let w = lat.interpolation_weights(&y);
            let total: f64 = w.iter().map(|x| x.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|x| x.1 >= 0.0));
            let affine = |p: &[f64]| a[3] + p.iter().zip(&a).map(|(u, c)| u * c).sum::<f64>();
            let interp: f64 = w.iter().map(|&(j, c)| c * affine(&lat.free_coords(j))).sum();
            prop_assert!((interp - affine(&y)).abs() < 1e-9, "{} vs {}", interp, affine(&y));
        }

        #[test]
        fn nearest_is_in_lattice(raw in proptest::collection::vec(0.0f64..1.0, 2), n in 1usize..30) {
            let lat = SimplexLattice::new(2, n).unwrap();
            let s = raw.iter().sum::<f64>().max(1.0);
            let y: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let j = lat.nearest(&y);
            let c = lat.free_coords(j);
            prop_assert!((c[0] - y[0]).abs() <= 1.0 / n as f64 + 1e-12);
        }
    }
}
