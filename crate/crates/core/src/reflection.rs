use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{h_norms, ComplexField, SobolevNorms};

/// Reflection coefficient samples with cached sup and H^{1,1} norms.
///
/// The discrete norms satisfy `rho <= eta`: on the line `|f(x)|² <= 2‖f‖‖f'‖ <=
/// ‖f‖² + ‖f'‖²`, so the embedding constant of the `h11` norm is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionData {
    r: ComplexField,
    rho: f64,
    eta: f64,
    norms: SobolevNorms,
}

impl ReflectionData {
    /// Rejects data violating the defocusing condition `sup |r| < 1`.
    pub fn new(r: ComplexField) -> Result<Self> {
        let rho = r.sup_norm();
        if !(rho < 1.0) {
            return Err(Error::Domain(format!("sup |r| = {rho} violates the condition sup |r| < 1")));
        }
        let norms = h_norms(&r)?;
        Ok(ReflectionData { r, rho, eta: norms.h11, norms })
    }

    pub fn zero(grid: crate::grid::Grid1D) -> Self {
        ReflectionData::new(ComplexField::zeros(grid)).expect("zero data is admissible")
    }

    pub fn r(&self) -> &ComplexField {
        &self.r
    }

    pub fn values(&self) -> &[Complex64] {
        self.r.values()
    }

    pub fn grid(&self) -> &crate::grid::Grid1D {
        self.r.grid()
    }

    /// `sup |r|`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// H^{1,1} norm of `r`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn norms(&self) -> SobolevNorms {
        self.norms
    }

    pub fn is_zero(&self) -> bool {
        self.rho == 0.0
    }

    /// `log(1 - |r|²)` nodewise.
    pub fn log_one_minus_sq(&self) -> Vec<f64> {
        self.r.values().iter().map(|v| (-v.norm_sqr()).ln_1p()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_defocusing_data() {
        let g = Grid1D::from_range(-4.0, 4.0, 64).unwrap();
        let r = ComplexField::from_real_fn(g, |z| 1.2 * (-z * z).exp()).unwrap();
        assert!(matches!(ReflectionData::new(r), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn sup_norm_bounded_by_h11(amp in 0.01f64..0.95, width in 0.3f64..3.0, shift in -2.0f64..2.0, k in -4.0f64..4.0) {
            let g = Grid1D::from_range(-20.0, 20.0, 1024).unwrap();
            let r = ComplexField::from_fn(g, |z| {
                let u = (z - shift) / width;
                Complex64::from_polar(amp * (-u * u).exp(), k * z)
            }).unwrap();
            let d = ReflectionData::new(r).unwrap();
            prop_assert!(d.rho() <= d.eta());
        }
    }
}
