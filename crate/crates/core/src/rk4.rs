//! Classical four-stage Runge-Kutta on flat `f64` state vectors.

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
        }
    }

    /// Advance `u` by `dt` in place. `rhs(state, out)` evaluates the
    /// right-hand side.
    pub(crate) fn step<E>(
        &mut self,
        u: &mut [f64],
        dt: f64,
        mut rhs: impl FnMut(&[f64], &mut [f64]) -> Result<(), E>,
    ) -> Result<(), E> {
        rhs(u, &mut self.k1)?;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k1) {
            *s = ui + 0.5 * dt * k;
        }
        rhs(&self.stage, &mut self.k2)?;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k2) {
            *s = ui + 0.5 * dt * k;
        }
        rhs(&self.stage, &mut self.k3)?;
        for ((s, &ui), &k) in self.stage.iter_mut().zip(u.iter()).zip(&self.k3) {
            *s = ui + dt * k;
        }
        rhs(&self.stage, &mut self.k4)?;
        let c = dt / 6.0;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += c * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}
