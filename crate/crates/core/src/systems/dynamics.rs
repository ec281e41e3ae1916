use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::linalg::spectral_norm;

type StepFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Discrete-time transition map `x' = f(x, u, d)`.
#[derive(Clone)]
pub enum Dynamics {
    /// `x' = A x + B u + D d + c`
    Affine {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        c: Vec<f64>,
    },
    /// State `(px, py, heading)`, control `(speed, turn rate)`, disturbance
    /// a planar velocity perturbation added to the position update.
    Unicycle { dt: f64 },
    Custom {
        state_dim: usize,
        control_dim: usize,
        disturbance_dim: usize,
        f: StepFn,
    },
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Affine { a, b, d, c } => f
                .debug_struct("Affine")
                .field("a", a)
                .field("b", b)
                .field("d", d)
                .field("c", c)
                .finish(),
            Dynamics::Unicycle { dt } => f.debug_struct("Unicycle").field("dt", dt).finish(),
            Dynamics::Custom { state_dim, .. } => f
                .debug_struct("Custom")
                .field("state_dim", state_dim)
                .finish_non_exhaustive(),
        }
    }
}

impl Dynamics {
    pub fn custom<F>(state_dim: usize, control_dim: usize, disturbance_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Dynamics::Custom {
            state_dim,
            control_dim,
            disturbance_dim,
            f: Arc::new(f),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Dynamics::Affine { a, .. } => a.nrows(),
            Dynamics::Unicycle { .. } => 3,
            Dynamics::Custom { state_dim, .. } => *state_dim,
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Dynamics::Affine { b, .. } => b.ncols(),
            Dynamics::Unicycle { .. } => 2,
            Dynamics::Custom { control_dim, .. } => *control_dim,
        }
    }

    pub fn disturbance_dim(&self) -> usize {
        match self {
            Dynamics::Affine { d, .. } => d.ncols(),
            Dynamics::Unicycle { .. } => 2,
            Dynamics::Custom { disturbance_dim, .. } => *disturbance_dim,
        }
    }

    pub fn apply(&self, x: &[f64], u: &[f64], dist: &[f64]) -> Vec<f64> {
        match self {
            Dynamics::Affine { a, b, d, c } => {
                let n = a.nrows();
                let mut out = c.clone();
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    let mut acc = 0.0;
                    for (j, xj) in x.iter().enumerate() {
                        acc += a[(i, j)] * xj;
                    }
                    for (j, uj) in u.iter().enumerate() {
                        acc += b[(i, j)] * uj;
                    }
                    for (j, dj) in dist.iter().enumerate() {
                        acc += d[(i, j)] * dj;
                    }
                    *o += acc;
                }
                out
            }
            Dynamics::Unicycle { dt } => {
                let (speed, turn) = (u[0], u[1]);
                vec![
                    x[0] + dt * (speed * x[2].cos() + dist[0]),
                    x[1] + dt * (speed * x[2].sin() + dist[1]),
                    x[2] + dt * turn,
                ]
            }
            Dynamics::Custom { f, .. } => f(x, u, dist),
        }
    }

    /// Analytic Lipschitz constants `(L_fx, L_fd)` when available.
    ///
    /// For the unicycle `max_speed` bounds the heading sensitivity: the state
    /// Jacobian is `I + dt·v·N` with `‖N‖₂ = 1`.
    pub fn lipschitz(&self, max_speed: f64) -> Option<(f64, f64)> {
        match self {
            Dynamics::Affine { a, d, .. } => Some((spectral_norm(a), spectral_norm(d))),
            Dynamics::Unicycle { dt } => Some((1.0 + dt * max_speed, *dt)),
            Dynamics::Custom { .. } => None,
        }
    }
}
