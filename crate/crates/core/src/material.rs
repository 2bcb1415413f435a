//! Hyperelastic constitutive laws expressed through the deformation
//! invariants I1 = tr C − 2 and I2 = det C − 1.
//!
//! Both laws ship with second partials because the divergence-form force
//! density differentiates the stress once more along the surface.

use crate::error::{Error, Result};

/// Energy density W with partials through second order in (I1, I2).
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyPartials {
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
    pub w11: f64,
    pub w12: f64,
    pub w22: f64,
}

impl EnergyPartials {
    fn accumulate(&mut self, o: EnergyPartials) {
        self.w += o.w;
        self.w1 += o.w1;
        self.w2 += o.w2;
        self.w11 += o.w11;
        self.w12 += o.w12;
        self.w22 += o.w22;
    }
}

fn check_admissible(i2: f64) -> Result<()> {
    if i2 <= -1.0 {
        return Err(Error::CollapsedElement { i2 });
    }
    Ok(())
}

/// Neo-Hookean membrane energy
/// W = Gs[(I1 + 2)/(2√(I2+1)) − 1 + (A/2)(I2 + 2 − 2√(I2+1))],
/// where K = A·Gs is the area dilation modulus.
pub fn neo_hookean_partials(i1: f64, i2: f64, gs: f64, a: f64) -> Result<EnergyPartials> {
    check_admissible(i2)?;
    let j = (i2 + 1.0).sqrt();
    let j3 = j * j * j;
    let j5 = j3 * j * j;
    Ok(EnergyPartials {
        w: gs * ((i1 + 2.0) / (2.0 * j) - 1.0 + 0.5 * a * (i2 + 2.0 - 2.0 * j)),
        w1: gs / (2.0 * j),
        w2: gs * (-(i1 + 2.0) / (4.0 * j3) + 0.5 * a * (1.0 - 1.0 / j)),
        w11: 0.0,
        w12: -gs / (4.0 * j3),
        w22: gs * (3.0 * (i1 + 2.0) / (8.0 * j5) + a / (4.0 * j3)),
    })
}

/// Surface tension as an energy over the reference configuration:
/// W = σ√(I2 + 1), the local area ratio times σ.
pub fn surface_tension_partials(i2: f64, sigma: f64) -> Result<EnergyPartials> {
    check_admissible(i2)?;
    let j = (i2 + 1.0).sqrt();
    let j3 = j * j * j;
    Ok(EnergyPartials {
        w: sigma * j,
        w1: 0.0,
        w2: sigma / (2.0 * j),
        w11: 0.0,
        w12: 0.0,
        w22: -sigma / (4.0 * j3),
    })
}

/// Moduli of a shell material. A zero modulus disables that term.
#[derive(Debug, Clone, Copy)]
pub struct ElasticMaterial {
    /// Shear modulus Gs (force/length).
    pub shear: f64,
    /// Dimensionless dilation ratio A; the dilation modulus is A·Gs.
    pub dilation: f64,
    /// Surface tension σ (force/length).
    pub tension: f64,
    /// Bending rigidity (force·length).
    pub bending: f64,
}

impl ElasticMaterial {
    pub fn neo_hookean(gs: f64, a: f64) -> Self {
        Self { shear: gs, dilation: a, tension: 0.0, bending: 0.0 }
    }

    pub fn surface_tension(sigma: f64) -> Self {
        Self { shear: 0.0, dilation: 0.0, tension: sigma, bending: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shear", self.shear),
            ("dilation", self.dilation),
            ("tension", self.tension),
            ("bending", self.bending),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!("modulus {name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Combined in-plane energy partials (neo-Hookean + tension). The
    /// bending modulus does not enter here; bending acts through the
    /// curvature force, not through W(I1, I2).
    pub fn partials(&self, i1: f64, i2: f64) -> Result<EnergyPartials> {
        let mut total = EnergyPartials::default();
        if self.shear != 0.0 {
            total.accumulate(neo_hookean_partials(i1, i2, self.shear, self.dilation)?);
        }
        if self.tension != 0.0 {
            total.accumulate(surface_tension_partials(i2, self.tension)?);
        } else {
            check_admissible(i2)?;
        }
        Ok(total)
    }
}
