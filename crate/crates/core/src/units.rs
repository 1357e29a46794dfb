//! Reduced unit system. Every constant defaults to one.

/// Physical constants used throughout the library.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub hbar: f64,
    pub kb: f64,
    pub c: f64,
    pub eps0: f64,
    pub mu0: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            hbar: 1.0,
            kb: 1.0,
            c: 1.0,
            eps0: 1.0,
            mu0: 1.0,
        }
    }
}

impl UnitSystem {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("kB", self.kb),
            ("c", self.c),
            ("eps0", self.eps0),
            ("mu0", self.mu0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("units.{name} must be a positive finite number"));
            }
        }
        Ok(())
    }
}
