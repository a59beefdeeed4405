//! First-order optimizer with adaptive moment estimation.

/// Adam state for one flat parameter vector.
///
/// Uses bias-corrected moment estimates: at step `t`,
/// `m_hat = m / (1 - beta1^t)`, `v_hat = v / (1 - beta2^t)` and the update
/// is `-lr * m_hat / (sqrt(v_hat) + epsilon)`.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
}

impl Adam {
    pub fn new(n_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    /// Apply one update in place; `params`, `grad` and the internal moments
    /// must all have the same length.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }

    pub fn steps_taken(&self) -> u32 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // At t = 1 the bias-corrected moments are m_hat = g, v_hat = g^2,
        // so the update is -lr * g / (|g| + eps) = -lr * sign(g) up to eps.
        let mut adam = Adam::new(3, 0.9, 0.999, 1e-8);
        let mut params = vec![1.0, 2.0, -3.0];
        let grad = vec![0.5, -2.0, 1e-3];
        adam.step(&mut params, &grad, 0.1);
        assert!((params[0] - (1.0 - 0.1)).abs() < 1e-6);
        assert!((params[1] - (2.0 + 0.1)).abs() < 1e-6);
        assert!((params[2] - (-3.0 - 0.1)).abs() < 1e-4);
        assert_eq!(adam.steps_taken(), 1);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut adam = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut params = vec![0.4, -0.7];
        adam.step(&mut params, &[0.0, 0.0], 0.5);
        assert_eq!(params, vec![0.4, -0.7]);
    }

    #[test]
    fn converges_on_quadratic() {
        // Minimize (x - 3)^2 + (y + 1)^2.
        let mut adam = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut p = vec![0.0, 0.0];
        for _ in 0..2000 {
            let g = vec![2.0 * (p[0] - 3.0), 2.0 * (p[1] + 1.0)];
            adam.step(&mut p, &g, 0.05);
        }
        assert!((p[0] - 3.0).abs() < 1e-3);
        assert!((p[1] + 1.0).abs() < 1e-3);
    }
}
