//! Shape-preserving interpolation helpers.

/// Monotone cubic (Fritsch-Carlson) interpolant on strictly increasing
/// abscissae. Monotone data stays monotone; evaluation clamps to the
/// table range.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() == ys.len() && xs.len() >= 2);
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "abscissae must increase");
        let n = xs.len();
        let mut secants = vec![0.0; n - 1];
        for k in 0..n - 1 {
            secants[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        }
        let mut ms = vec![0.0; n];
        ms[0] = secants[0];
        ms[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let d0 = secants[k - 1];
            let d1 = secants[k];
            if d0 * d1 <= 0.0 {
                ms[k] = 0.0;
            } else {
                let h0 = xs[k] - xs[k - 1];
                let h1 = xs[k + 1] - xs[k];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                ms[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        Self { xs, ys, ms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }
}

/// Bilinear interpolation on a row-major grid with unit-square local
/// coordinates. `fx`, `fy` are fractional indices; values outside the grid
/// clamp to the border.
pub fn bilinear(values: &[f64], nx: usize, ny: usize, fx: f64, fy: f64) -> f64 {
    debug_assert_eq!(values.len(), nx * ny);
    let fx = fx.clamp(0.0, (nx - 1) as f64);
    let fy = fy.clamp(0.0, (ny - 1) as f64);
    let ix = (fx.floor() as usize).min(nx.saturating_sub(2));
    let iy = (fy.floor() as usize).min(ny.saturating_sub(2));
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let idx = |r: usize, c: usize| values[r * nx + c];
    if nx == 1 && ny == 1 {
        return values[0];
    }
    if nx == 1 {
        return idx(iy, 0) * (1.0 - ty) + idx(iy + 1, 0) * ty;
    }
    if ny == 1 {
        return idx(0, ix) * (1.0 - tx) + idx(0, ix + 1) * tx;
    }
    let v00 = idx(iy, ix);
    let v01 = idx(iy, ix + 1);
    let v10 = idx(iy + 1, ix);
    let v11 = idx(iy + 1, ix + 1);
    v00 * (1.0 - tx) * (1.0 - ty) + v01 * tx * (1.0 - ty) + v10 * (1.0 - tx) * ty + v11 * tx * ty
}
