use crate::model::ParamSet;
use crate::scalar::Scalar;

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam<S> {
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
    step: i32,
    m: ParamSet<S>,
    v: ParamSet<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(like: &ParamSet<S>, learning_rate: S, beta1: S, beta2: S, epsilon: S) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, params: &mut ParamSet<S>, grads: &ParamSet<S>) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = S::one() - b1.powi(self.step);
        let c2 = S::one() - b2.powi(self.step);
        let (lr, eps) = (self.learning_rate, self.epsilon);
        let grads = grads.named();
        let mut m = self.m.named_mut();
        let mut v = self.v.named_mut();
        for (i, (_, mut p)) in params.named_mut().into_iter().enumerate() {
            let g = &grads[i].1;
            let m = &mut m[i].1;
            let v = &mut v[i].1;
            ndarray::Zip::from(&mut p)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (S::one() - b1) * g;
                    *v = b2 * *v + (S::one() - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
    }
}
