use crate::error::{domain, Result};

/// Gravitational parameters of the central body.
///
/// `j2 = 0` selects pure two-body dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    /// Gravitational parameter, km^3/s^2.
    pub mu: f64,
    /// Mean equatorial radius, km.
    pub radius: f64,
    /// Second zonal harmonic (dimensionless).
    pub j2: f64,
}

/// Jovian mean radius in km.
pub const JUPITER_RADIUS_KM: f64 = 71_492.0;

impl BodyParams {
    /// Jupiter with the standard gravity constants.
    pub const JUPITER: BodyParams = BodyParams {
        mu: 1.266_865_34e8,
        radius: JUPITER_RADIUS_KM,
        j2: 0.014_736,
    };

    pub fn new(mu: f64, radius: f64, j2: f64) -> Result<Self> {
        let body = BodyParams { mu, radius, j2 };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(domain("mu must be positive"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(domain("radius must be positive"));
        }
        if !(self.j2.is_finite() && self.j2 >= 0.0) {
            return Err(domain("j2 must be non-negative"));
        }
        Ok(())
    }

    /// Same body with the J2 term switched off.
    pub fn two_body(&self) -> Self {
        BodyParams { j2: 0.0, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(BodyParams::new(0.0, 1.0, 0.0).is_err());
        assert!(BodyParams::new(1.0, -1.0, 0.0).is_err());
        assert!(BodyParams::new(1.0, 1.0, -1e-3).is_err());
        assert!(BodyParams::new(1.0, 1.0, 0.0).is_ok());
        assert!(BodyParams::JUPITER.validate().is_ok());
    }
}
