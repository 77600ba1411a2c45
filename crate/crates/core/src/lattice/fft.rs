//! Radix-p decimation-in-time transform over `Z/p^{2K}`, applied per axis.

use num_complex::Complex64;

use super::{LatticeField, LatticeGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `exp(+2 pi i xi.x)`.
    Forward,
    /// Kernel `exp(-2 pi i xi.x)`.
    Inverse,
}

/// Precomputed tables for one geometry. Cost per transform is
/// `O(M * 2K * N * p)` for `M` grid points.
#[derive(Clone, Debug)]
pub struct FftPlan {
    geometry: LatticeGeometry,
    side: usize,
    roots: Vec<Complex64>,
    digit_reversal: Vec<usize>,
}

impl FftPlan {
    pub fn new(geometry: LatticeGeometry) -> Self {
        let side = geometry.side();
        let p = geometry.p() as usize;
        let levels = 2 * geometry.k() as usize;
        let roots = root_table(side);
        let digit_reversal = (0..side)
            .map(|i| {
                let (mut x, mut r) = (i, 0);
                for _ in 0..levels {
                    r = r * p + x % p;
                    x /= p;
                }
                r
            })
            .collect();
        Self { geometry, side, roots, digit_reversal }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn execute(&self, f: &LatticeField, dir: Direction) -> LatticeField {
        assert_eq!(f.geometry(), &self.geometry, "plan built for another geometry");
        let mut data = f.values().to_vec();
        self.execute_in_place(&mut data, dir);
        LatticeField::new(self.geometry, data).expect("length preserved")
    }

    pub fn execute_in_place(&self, data: &mut [Complex64], dir: Direction) {
        let side = self.side;
        let n = self.geometry.dim();
        let mut line = vec![Complex64::new(0.0, 0.0); side];
        for axis in 0..n {
            let stride = side.pow((n - 1 - axis) as u32);
            let outer = side.pow(axis as u32);
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * side * stride + i;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[base + t * stride];
                    }
                    self.transform_line(&mut line, dir);
                    for (t, v) in line.iter().enumerate() {
                        data[base + t * stride] = *v;
                    }
                }
            }
        }
        let vol = self.geometry.cell_volume();
        for v in data.iter_mut() {
            *v *= vol;
        }
    }

    fn root(&self, k: usize, dir: Direction) -> Complex64 {
        let w = self.roots[k % self.side];
        match dir {
            Direction::Forward => w,
            Direction::Inverse => w.conj(),
        }
    }

    fn transform_line(&self, line: &mut [Complex64], dir: Direction) {
        let len = self.side;
        let p = self.geometry.p() as usize;
        for i in 0..len {
            let j = self.digit_reversal[i];
            if i < j {
                line.swap(i, j);
            }
        }
        let mut u = vec![Complex64::new(0.0, 0.0); p];
        let unit = len / p;
        let mut m = 1;
        while m < len {
            let q = m;
            m *= p;
            let stride = len / m;
            for b in (0..len).step_by(m) {
                for j in 0..q {
                    for (r, ur) in u.iter_mut().enumerate() {
                        *ur = line[b + r * q + j] * self.root(j * r * stride, dir);
                    }
                    for k in 0..p {
                        let mut acc = u[0];
                        for (r, ur) in u.iter().enumerate().skip(1) {
                            acc += ur * self.root(((r * k) % p) * unit, dir);
                        }
                        line[b + k * q + j] = acc;
                    }
                }
            }
        }
    }
}

fn root_table(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / len as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// Direct `O(M^2)` evaluation with exact integer phase reduction.
pub fn naive_dft(f: &LatticeField, dir: Direction) -> LatticeField {
    let g = *f.geometry();
    let side = g.side();
    let roots = root_table(side);
    let m = g.len();
    let coords: Vec<Vec<u64>> = (0..m).map(|i| g.coords(i)).collect();
    let vol = g.cell_volume();
    let out = (0..m)
        .map(|xi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, v) in f.values().iter().enumerate() {
                let phase =
                    coords[xi].iter().zip(&coords[x]).fold(0u128, |s, (&a, &b)| (s + a as u128 * b as u128) % side as u128);
                let w = roots[phase as usize];
                acc += v * match dir {
                    Direction::Forward => w,
                    Direction::Inverse => w.conj(),
                };
            }
            acc * vol
        })
        .collect();
    LatticeField::new(g, out).expect("length preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_field(g: LatticeGeometry, seed: u64) -> LatticeField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        LatticeField::from_fn(g, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn matches_naive() {
        for (p, n, k) in [(3, 1, 2), (2, 2, 3), (2, 1, 1), (5, 1, 1), (7, 1, 1)] {
            let g = LatticeGeometry::new(p, n, k).unwrap();
            let f = random_field(g, p + k as u64);
            let plan = FftPlan::new(g);
            for dir in [Direction::Forward, Direction::Inverse] {
                let a = plan.execute(&f, dir);
                let b = naive_dft(&f, dir);
                assert!(a.max_abs_diff(&b) < 1e-10, "p={p} n={n} k={k}");
            }
        }
    }

    #[test]
    fn digit_reversal_is_involution() {
        let plan = FftPlan::new(LatticeGeometry::new(3, 1, 2).unwrap());
        for i in 0..81 {
            assert_eq!(plan.digit_reversal[plan.digit_reversal[i]], i);
        }
        assert_eq!(plan.digit_reversal[1], 27);
    }
}
