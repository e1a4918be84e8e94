/// Classical fixed-step fourth-order Runge-Kutta for autonomous systems
/// `y' = f(y)`, with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Writes the state after one step of size `h` from `y` into `out`.
    pub fn step<F>(&mut self, y: &[f64], h: f64, out: &mut [f64], mut f: F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let stage = |tmp: &mut [f64], k: &[f64], scale: f64| {
            for ((t, y), k) in tmp.iter_mut().zip(y).zip(k) {
                *t = y + scale * k;
            }
        };
        f(y, &mut self.k1);
        stage(&mut self.tmp, &self.k1, 0.5 * h);
        f(&self.tmp, &mut self.k2);
        stage(&mut self.tmp, &self.k2, 0.5 * h);
        f(&self.tmp, &mut self.k3);
        stage(&mut self.tmp, &self.k3, h);
        f(&self.tmp, &mut self.k4);
        for (i, o) in out.iter_mut().enumerate() {
            *o = y[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
