//! Closed-form spectral data of the infinite square well on `[0, a]`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Physical parameters of a (possibly tilted) infinite square well.
///
/// The potential is `alpha * x` on `(0, a)` and infinite elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSystem {
    pub width: f64,
    pub mass: f64,
    pub hbar: f64,
    pub alpha: f64,
}

impl BoxSystem {
    /// Well in natural units (`hbar = mass = 1`).
    pub fn new(width: f64, alpha: f64) -> Result<Self> {
        Self::with_units(width, 1.0, 1.0, alpha)
    }

    pub fn with_units(width: f64, mass: f64, hbar: f64, alpha: f64) -> Result<Self> {
        let sys = Self {
            width,
            mass,
            hbar,
            alpha,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.width), ("mu", self.mass), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Potential energy inside the well; `+inf` outside.
    pub fn potential(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.width {
            self.alpha * x
        } else {
            f64::INFINITY
        }
    }

    /// `hbar^2 / (2 mu)`, the kinetic prefactor.
    pub fn kinetic_scale(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }
}

/// `E_n = n^2 pi^2 hbar^2 / (2 mu a^2)`.
pub fn eigen_energy(n: usize, system: &BoxSystem) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("box eigenstates are numbered from n = 1".into()));
    }
    let k = n as f64 * PI / system.width;
    Ok(system.kinetic_scale() * k * k)
}

/// `b_n(x) = sqrt(2/a) sin(n pi x / a)` on `(0, a)`, zero elsewhere.
pub fn basis_value(n: usize, x: f64, system: &BoxSystem) -> f64 {
    let a = system.width;
    if x <= 0.0 || x >= a {
        return 0.0;
    }
    (2.0 / a).sqrt() * (n as f64 * PI * x / a).sin()
}

/// Matrix elements `<b_n| x |b_m>` for `n, m = 1..=size`.
pub fn position_matrix(size: usize, system: &BoxSystem) -> Array2<f64> {
    let a = system.width;
    let mut x = Array2::zeros((size, size));
    for n in 1..=size {
        x[[n - 1, n - 1]] = a / 2.0;
        for m in (n + 1)..=size {
            let diff = (m - n) as f64;
            let sum = (n + m) as f64;
            // cos(k pi) - 1 written as (-1)^k - 1
            let cd = if (m - n) % 2 == 0 { 0.0 } else { -2.0 };
            let cs = if (n + m) % 2 == 0 { 0.0 } else { -2.0 };
            let v = a / (PI * PI) * (cd / (diff * diff) - cs / (sum * sum));
            x[[n - 1, m - 1]] = v;
            x[[m - 1, n - 1]] = v;
        }
    }
    x
}

/// The first `size` box eigenstates with their energies and position matrix.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    system: BoxSystem,
    energies: Vec<f64>,
    position: Array2<f64>,
}

impl SpectralBasis {
    pub fn new(size: usize, system: BoxSystem) -> Result<Self> {
        if size < 1 {
            return Err(Error::Config("basis size N must be at least 1".into()));
        }
        system.validate()?;
        let energies = (1..=size)
            .map(|n| eigen_energy(n, &system))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system,
            energies,
            position: position_matrix(size, &system),
        })
    }

    pub fn size(&self) -> usize {
        self.energies.len()
    }

    pub fn system(&self) -> &BoxSystem {
        &self.system
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn position_matrix(&self) -> &Array2<f64> {
        &self.position
    }

    /// `b_n(x)` with 1-based `n`.
    pub fn value(&self, n: usize, x: f64) -> f64 {
        basis_value(n, x, &self.system)
    }
}
