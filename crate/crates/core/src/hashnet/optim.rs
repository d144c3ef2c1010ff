use super::{Gradients, HashError, HashModel, Layer};

/// Momentum SGD state: `v <- momentum * v + g`, `theta <- theta - lr * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub velocity: Vec<Layer>,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl OptimState {
    pub fn new(model: &HashModel, learning_rate: f64, momentum: f64) -> Result<Self, HashError> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(HashError::InvalidParameter(format!("learning rate must be > 0, got {learning_rate}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(HashError::InvalidParameter(format!("momentum must lie in [0,1), got {momentum}")));
        }
        Ok(Self { velocity: Gradients::zeros_like(model).layers, learning_rate, momentum })
    }
}

pub fn sgd_momentum_step(model: &mut HashModel, state: &mut OptimState, grads: &Gradients) -> Result<(), HashError> {
    let shapes_ok = model.layers.len() == grads.layers.len()
        && model.layers.len() == state.velocity.len()
        && model
            .layers
            .iter()
            .zip(&grads.layers)
            .zip(&state.velocity)
            .all(|((p, g), v)| p.same_shape(g) && p.same_shape(v));
    if !shapes_ok {
        return Err(HashError::ShapeMismatch("gradient or velocity does not match model".into()));
    }
    let (lr, mu) = (state.learning_rate, state.momentum);
    for ((p, g), v) in model.layers.iter_mut().zip(&grads.layers).zip(&mut state.velocity) {
        v.weights.zip_mut_with(&g.weights, |v, &g| *v = mu * *v + g);
        v.bias.zip_mut_with(&g.bias, |v, &g| *v = mu * *v + g);
        p.weights.zip_mut_with(&v.weights, |p, &v| *p -= lr * v);
        p.bias.zip_mut_with(&v.bias, |p, &v| *p -= lr * v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashnet::init_model;

    fn constant_grads(model: &HashModel, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(model);
        for l in &mut grads.layers {
            l.weights.fill(g);
            l.bias.fill(g);
        }
        grads
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut m = init_model(3, &[2], 2, 0).unwrap();
        let before = m.clone();
        let mut st = OptimState::new(&m, 0.01, 0.9).unwrap();
        sgd_momentum_step(&mut m, &mut st, &Gradients::zeros_like(&before)).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn plain_sgd_without_momentum() {
        let mut m = init_model(3, &[2], 2, 0).unwrap();
        let before = m.params_flat();
        let mut st = OptimState::new(&m, 0.5, 0.0).unwrap();
        let grads = constant_grads(&m, 0.25);
        sgd_momentum_step(&mut m, &mut st, &grads).unwrap();
        for (a, b) in m.params_flat().iter().zip(before) {
            assert_eq!(*a, b - 0.5 * 0.25);
        }
    }

    #[test]
    fn two_momentum_steps_unrolled() {
        let mut m = init_model(2, &[], 1, 0).unwrap();
        let before = m.params_flat();
        let mut st = OptimState::new(&m, 0.001, 0.9).unwrap();
        let g = 0.7;
        let grads = constant_grads(&m, g);
        sgd_momentum_step(&mut m, &mut st, &grads).unwrap();
        sgd_momentum_step(&mut m, &mut st, &grads).unwrap();
        for (a, b) in m.params_flat().iter().zip(before) {
            assert!((a - (b - 0.001 * (g + 1.9 * g))).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_state() {
        let m = init_model(2, &[], 1, 0).unwrap();
        assert!(OptimState::new(&m, 0.0, 0.9).is_err());
        assert!(OptimState::new(&m, 0.1, 1.0).is_err());
        let mut other = init_model(3, &[], 1, 0).unwrap();
        let mut st = OptimState::new(&m, 0.1, 0.5).unwrap();
        let g = Gradients::zeros_like(&other);
        assert!(matches!(sgd_momentum_step(&mut other, &mut st, &g), Err(HashError::ShapeMismatch(_))));
    }
}
