//! Fixed-step simulation of consensus dynamics and steady-state formulas.

use crate::blocks::{BlockDecomposition, FiedlerClassification};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub horizon: f64,
    pub method: Method,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 60.0,
            method: Method::Rk4,
        }
    }
}

impl SimulationConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn validate(&self, generator: &Matrix) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::SimulationConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::SimulationConfig(format!(
                "horizon {} is shorter than dt {}",
                self.horizon, self.dt
            )));
        }
        if self.method == Method::Euler {
            let max_diag = generator.diagonal().amax();
            if max_diag > 0.0 {
                let limit = 1.0 / (2.0 * max_diag);
                if self.dt >= limit {
                    return Err(Error::Unstable { dt: self.dt, limit });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Fan,
    San,
    SignedSan,
    SignedFan,
    ReducedDirected,
}

/// Constant external drive `B u` of a semi-autonomous network.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    /// `n x m` input matrix.
    pub b: Matrix,
    /// `m x d`, one input vector per row.
    pub inputs: Matrix,
}

impl Drive {
    pub fn forcing(&self) -> Matrix {
        &self.b * &self.inputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One `n x d` state per time.
    pub states: Vec<Matrix>,
    pub model: Model,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Matrix {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Index of the sample closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let dt = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        };
        ((t - self.times[0]) / dt).round().clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// One step of `x' = -G x + f`.
pub fn step(generator: &Matrix, forcing: Option<&Matrix>, x: &Matrix, dt: f64, method: Method) -> Matrix {
    let rhs = |y: &Matrix| -> Matrix {
        let mut dy = -(generator * y);
        if let Some(f) = forcing {
            dy += f;
        }
        dy
    };
    match method {
        Method::Euler => x + rhs(x) * dt,
        Method::Rk4 => {
            let k1 = rhs(x);
            let k2 = rhs(&(x + &k1 * (dt / 2.0)));
            let k3 = rhs(&(x + &k2 * (dt / 2.0)));
            let k4 = rhs(&(x + &k3 * dt));
            x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
        }
    }
}

/// Integrates `x' = -G x (+ B u)` coordinate-wise from `x0` (`n x d`).
pub fn simulate(
    generator: &Matrix,
    drive: Option<&Drive>,
    x0: &Matrix,
    cfg: &SimulationConfig,
    model: Model,
) -> Result<Trajectory> {
    let n = generator.nrows();
    if !generator.is_square() || x0.nrows() != n {
        return Err(Error::Dimension(format!(
            "generator {}x{} with initial state {}x{}",
            generator.nrows(),
            generator.ncols(),
            x0.nrows(),
            x0.ncols()
        )));
    }
    let forcing = match drive {
        Some(d) => {
            if d.b.nrows() != n || d.b.ncols() != d.inputs.nrows() || d.inputs.ncols() != x0.ncols() {
                return Err(Error::Dimension("input matrix or input vectors do not match the state".into()));
            }
            Some(d.forcing())
        }
        None => None,
    };
    cfg.validate(generator)?;
    let steps = cfg.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for k in 1..=steps {
        x = step(generator, forcing.as_ref(), &x, cfg.dt, cfg.method);
        times.push(k as f64 * cfg.dt);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states, model })
}

/// `L_B^{-1} B u`, the limit of a semi-autonomous network.
pub fn steady_state_san(lb: &Matrix, b: &Matrix, inputs: &Matrix) -> Result<Matrix> {
    let rhs = b * inputs;
    let lu = lb.clone().lu();
    let scale = crate::spectral::inf_norm(lb).max(f64::MIN_POSITIVE);
    if lu.u().diagonal().iter().any(|p| p.abs() <= 1e-12 * scale) {
        return Err(Error::Singular);
    }
    lu.solve(&rhs).ok_or(Error::Singular)
}

/// Mean initial state over the core and the zero blocks.
pub fn fan_fsn_consensus_value(
    x0: &Matrix,
    cls: &FiedlerClassification,
    decomp: &BlockDecomposition,
) -> Vector {
    let mut nodes = cls.core_nodes(decomp);
    nodes.extend(cls.zero_block_nodes(decomp));
    let mut sum = Vector::zeros(x0.ncols());
    for &k in &nodes {
        sum += x0.row(k - 1).transpose();
    }
    sum / nodes.len() as f64
}

/// Negated least-squares slope of `ln ||x(t) - target||` over the final
/// half of the samples that stay above the round-off floor.
pub fn empirical_rate(traj: &Trajectory, target: &Matrix) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort(traj.len()));
    }
    let floor = 1e-12 * target.norm().max(1.0);
    let errors: Vec<f64> = traj.states.iter().map(|x| (x - target).norm()).collect();
    let usable = errors.iter().position(|&e| e < floor).unwrap_or(errors.len());
    if usable < 4 {
        return Err(Error::NotConverging(format!(
            "error falls below {floor:e} after {usable} samples"
        )));
    }
    let window = usable / 2..usable;
    if errors[usable - 1] >= errors[usable / 2] {
        return Err(Error::NotConverging("error does not decrease over the fit window".into()));
    }
    let count = window.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for k in window {
        let (t, y) = (traj.times[k], errors[k].ln());
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let slope = (count * sty - st * sy) / (count * stt - st * st);
    if !(slope < 0.0) {
        return Err(Error::NotConverging(format!("log-error slope {slope}")));
    }
    Ok(-slope)
}
