//! Small dense-grid filtering helpers shared by the metric implementations.

/// A single-channel f64 grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), h * w);
        Self { h, w, data }
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    /// Reflect-101 lookup (border mirrored without repeating the edge).
    fn get_reflect(&self, y: isize, x: isize) -> f64 {
        let fold = |v: isize, n: isize| -> usize {
            let mut v = v;
            if v < 0 {
                v = -v;
            }
            if v >= n {
                v = 2 * n - 2 - v;
            }
            v.clamp(0, n - 1) as usize
        };
        self.get(fold(y, self.h as isize), fold(x, self.w as isize))
    }

    /// Valid-mode 2D correlation with a k×k kernel.
    pub fn filter_valid(&self, kernel: &[f64], k: usize) -> Grid {
        let oh = self.h + 1 - k;
        let ow = self.w + 1 - k;
        let mut out = vec![0.0; oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = 0.0;
                for ky in 0..k {
                    for kx in 0..k {
                        acc += kernel[ky * k + kx] * self.get(y + ky, x + kx);
                    }
                }
                out[y * ow + x] = acc;
            }
        }
        Grid::new(oh, ow, out)
    }

    /// Same-size 2D correlation with reflect padding.
    pub fn filter_same(&self, kernel: &[f64], k: usize) -> Grid {
        let r = (k / 2) as isize;
        let mut out = vec![0.0; self.h * self.w];
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let mut acc = 0.0;
                for ky in -r..=r {
                    for kx in -r..=r {
                        let kv = kernel[((ky + r) * k as isize + kx + r) as usize];
                        acc += kv * self.get_reflect(y + ky, x + kx);
                    }
                }
                out[(y * self.w as isize + x) as usize] = acc;
            }
        }
        Grid::new(self.h, self.w, out)
    }

    /// Keeps every second row/column.
    pub fn downsample2(&self) -> Grid {
        let oh = self.h / 2;
        let ow = self.w / 2;
        let mut out = vec![0.0; oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                out[y * ow + x] = self.get(2 * y, 2 * x);
            }
        }
        Grid::new(oh, ow, out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid::new(self.h, self.w, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Grid {
        assert_eq!((self.h, self.w), (other.h, other.w));
        Grid::new(
            self.h,
            self.w,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Normalized k×k Gaussian kernel.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as isize;
    let mut kernel = vec![0.0; k * k];
    let mut sum = 0.0;
    for y in -r..=r {
        for x in -r..=r {
            let v = (-((y * y + x * x) as f64) / (2.0 * sigma * sigma)).exp();
            kernel[((y + r) * k as isize + x + r) as usize] = v;
            sum += v;
        }
    }
    for v in kernel.iter_mut() {
        *v /= sum;
    }
    kernel
}

pub const SOBEL_X: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
pub const SOBEL_Y: [f64; 9] = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];

/// Sobel gradients (gx, gy) with reflect padding.
pub fn sobel(grid: &Grid) -> (Grid, Grid) {
    (grid.filter_same(&SOBEL_X, 3), grid.filter_same(&SOBEL_Y, 3))
}
