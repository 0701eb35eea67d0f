use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{Method, SolverOptions};

/// Which perturbation objective a sweep minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Plain regularized inversion, no perturbation.
    None,
    /// Max-SINR perturbation.
    Msvp,
    /// Wiener-filter perturbation.
    Wfvp,
    /// Zero-forcing precoder, perturbation minimizing transmit power.
    Zfvp,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Msvp => "msvp",
            Strategy::Wfvp => "wfvp",
            Strategy::Zfvp => "zfvp",
        }
    }

    pub fn is_vp(&self) -> bool {
        !matches!(self, Strategy::None)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Strategy::None),
            "msvp" => Ok(Strategy::Msvp),
            "wfvp" => Ok(Strategy::Wfvp),
            "zfvp" => Ok(Strategy::Zfvp),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

/// How the regularization parameter follows the noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    Zero,
    Sigma2,
    Fixed(f64),
}

impl AlphaRule {
    pub fn alpha(&self, sigma2: f64) -> f64 {
        match *self {
            AlphaRule::Zero => 0.0,
            AlphaRule::Sigma2 => sigma2,
            AlphaRule::Fixed(a) => a,
        }
    }
}

impl fmt::Display for AlphaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaRule::Zero => f.write_str("zero"),
            AlphaRule::Sigma2 => f.write_str("sigma2"),
            AlphaRule::Fixed(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for AlphaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(AlphaRule::Zero),
            "sigma2" => Ok(AlphaRule::Sigma2),
            other => match other.parse::<f64>() {
                Ok(a) if a >= 0.0 && a.is_finite() => Ok(AlphaRule::Fixed(a)),
                _ => Err(Error::Config(format!("alpha must be zero, sigma2 or a non-negative number, got '{s}'"))),
            },
        }
    }
}

/// Everything that determines a sweep. A [`super::SweepTable`] is a pure
/// function of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k_users: usize,
    pub m_antennas: usize,
    pub qam_n: usize,
    pub rho_db_grid: Vec<f64>,
    pub strategy: Strategy,
    pub solver: Method,
    pub alpha_rule: AlphaRule,
    pub n_channels: usize,
    pub n_vectors: usize,
    pub seed: u64,
    pub ideal_modulo: bool,
    pub solver_options: SolverOptions,
}

impl SweepConfig {
    /// A configuration with the default batch sizes (200 channels, 500
    /// vectors) and the strategy's natural solver and regularization.
    pub fn new(k_users: usize, m_antennas: usize, strategy: Strategy, rho_db_grid: Vec<f64>) -> Self {
        let (solver, alpha_rule) = match strategy {
            Strategy::None => (Method::None, AlphaRule::Sigma2),
            Strategy::Zfvp => (Method::SqrBabai, AlphaRule::Zero),
            Strategy::Msvp | Strategy::Wfvp => (Method::SqrBabai, AlphaRule::Sigma2),
        };
        Self {
            k_users,
            m_antennas,
            qam_n: 16,
            rho_db_grid,
            strategy,
            solver,
            alpha_rule,
            n_channels: 200,
            n_vectors: 500,
            seed: 0,
            ideal_modulo: true,
            solver_options: SolverOptions::default(),
        }
    }

    pub fn with_solver(mut self, solver: Method) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_alpha(mut self, alpha_rule: AlphaRule) -> Self {
        self.alpha_rule = alpha_rule;
        self
    }

    pub fn with_qam(mut self, qam_n: usize) -> Self {
        self.qam_n = qam_n;
        self
    }

    pub fn with_batch(mut self, n_channels: usize, n_vectors: usize) -> Self {
        self.n_channels = n_channels;
        self.n_vectors = n_vectors;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `K / M`, which is also the per-user symbol energy.
    pub fn c_ratio(&self) -> f64 {
        self.k_users as f64 / self.m_antennas as f64
    }

    /// Checks every rule a sweep relies on, before any sampling.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.k_users == 0 || self.k_users > self.m_antennas {
            return cfg(format!("need 1 <= K <= M, got K = {}, M = {}", self.k_users, self.m_antennas));
        }
        let side = (self.qam_n as f64).sqrt().round() as usize;
        if self.qam_n < 4 || side * side != self.qam_n {
            return cfg(format!("QAM order must be a perfect square >= 4, got {}", self.qam_n));
        }
        if self.rho_db_grid.is_empty() {
            return cfg("empty SNR grid".into());
        }
        if let Some(r) = self.rho_db_grid.iter().find(|r| !r.is_finite()) {
            return cfg(format!("SNR values must be finite, got {r}"));
        }
        if self.n_channels == 0 || self.n_vectors == 0 {
            return cfg("need at least one channel and one data vector".into());
        }
        if let AlphaRule::Fixed(a) = self.alpha_rule {
            if !(a >= 0.0) || !a.is_finite() {
                return cfg(format!("fixed alpha must be finite and non-negative, got {a}"));
            }
        }
        match self.strategy {
            Strategy::None if self.solver != Method::None => {
                return cfg(format!("strategy none takes solver none, got {}", self.solver));
            }
            Strategy::Zfvp if self.alpha_rule != AlphaRule::Zero => {
                return cfg(format!("strategy zfvp uses the zero-forcing precoder; alpha must be zero, got {}", self.alpha_rule));
            }
            _ => {}
        }
        if self.strategy.is_vp() {
            if let Some(r) = self.rho_db_grid.iter().find(|&&r| r < 10.0) {
                return cfg(format!("perturbation strategies are simulated only for rho >= 10 dB, got {r}"));
            }
        }
        match self.solver {
            Method::MlSphere if self.k_users > self.solver_options.ml_cap => cfg(format!(
                "sphere decoding is exponential in K; K = {} exceeds the cap of {}, use --solver sqr",
                self.k_users, self.solver_options.ml_cap
            )),
            Method::Brute if self.k_users > 4 => {
                cfg(format!("brute-force search is limited to K <= 4, got K = {}", self.k_users))
            }
            _ => Ok(()),
        }
    }
}

/// Parses `start:step:stop` (inclusive) or a single value into a grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("SNR grid must be <start:step:stop> or a number, got '{spec}'"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, step, stop] => {
            if !(*step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            if n > 10_000 {
                return Err(bad());
            }
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}
