//! Ten-species photochemical mechanism: rate coefficients, reaction terms
//! and their analytic Jacobian.
//!
//! Species ordering (concentrations in mol/km^3):
//!
//! | index | 1  | 2   | 3  | 4   | 5  | 6    | 7   | 8   | 9  | 10    |
//! |-------|----|-----|----|-----|----|------|-----|-----|----|-------|
//! |       | NO | NO2 | HC | ALD | O3 | HNO3 | HO2 | RO2 | OH | O(1D) |
//!
//! Reactions:
//!
//! 1. HC + OH -> 4 RO2 + 2 ALD
//! 2. ALD + hv -> 2 HO2 + CO
//! 3. RO2 + NO -> NO2 + ALD + HO2
//! 4. NO + HO2 -> NO2 + OH
//! 5. NO2 + hv -> NO + O3
//! 6. NO + O3 -> NO2 + O2
//! 7. O3 + hv -> O2 + O(1D)
//! 8. O(1D) + H2O -> 2 OH
//! 9. NO2 + OH -> HNO3
//! 10. CO + OH -> CO2 + HO2
//!
//! The default [`ChemistryMode::AsPrinted`] reproduces the original rate
//! expressions term for term, including `R5 = k2 u5` and the `+k9 u2 u9`
//! term in `R9`. [`ChemistryMode::Corrected`] uses the mass-action terms
//! implied by the reaction list for those two species instead.

use crate::error::{Error, Result};

pub const SPECIES: usize = 10;

/// Initial concentrations used by the air-pollution example.
pub const INITIAL_CONCENTRATIONS: [f64; SPECIES] =
    [1e3, 1e3, 1e3, 5e3, 5e3, 1e2, 1e-2, 1e-2, 1e-3, 1e-11];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChemistryMode {
    #[default]
    AsPrinted,
    Corrected,
}

impl std::str::FromStr for ChemistryMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "corrected" => Ok(Self::Corrected),
            other => Err(format!("unknown chemistry mode `{other}` (expected as-printed|corrected)")),
        }
    }
}

impl std::fmt::Display for ChemistryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AsPrinted => "as-printed",
            Self::Corrected => "corrected",
        })
    }
}

/// Reaction-rate coefficients `k1..k10`; `k2`, `k5` and `k7` are photolytic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub k8: f64,
    pub k9: f64,
    pub k10: f64,
}

/// Rate coefficients for a given cosine of the solar zenith angle.
pub fn rate_coefficients(cos_theta: f64) -> Result<RateSet> {
    if !(cos_theta > 0.0 && cos_theta <= 1.0) {
        return Err(Error::param(
            "cos_theta",
            format!("must lie in (0, 1], got {cos_theta}"),
        ));
    }
    Ok(RateSet {
        k1: 6.0e-12,
        k2: 7.8e-5 * (-0.87 / cos_theta).exp(),
        k3: 8.0e-12,
        k4: 8.0e-12,
        k5: 1.0e-2 * (-0.39 / cos_theta).exp(),
        k6: 1.6e-14,
        k7: 1.6e-4 * (-1.9 / cos_theta).exp(),
        k8: 2.3e-10,
        k9: 1.0e-11,
        k10: 2.9e-13,
    })
}

/// A rate set bound to a chemistry mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chemistry {
    pub rates: RateSet,
    pub mode: ChemistryMode,
}

impl Chemistry {
    pub fn new(cos_theta: f64, mode: ChemistryMode) -> Result<Self> {
        Ok(Self {
            rates: rate_coefficients(cos_theta)?,
            mode,
        })
    }

    pub fn rates(&self, u: &[f64]) -> [f64; SPECIES] {
        reaction_rates(u, &self.rates, self.mode)
    }

    pub fn jacobian(&self, u: &[f64]) -> [[f64; SPECIES]; SPECIES] {
        reaction_jacobian(u, &self.rates, self.mode)
    }
}

/// Reaction terms `R1..R10` at the concentration vector `u`.
pub fn reaction_rates(u: &[f64], k: &RateSet, mode: ChemistryMode) -> [f64; SPECIES] {
    assert_eq!(u.len(), SPECIES);
    let [u1, u2, u3, u4, u5, _u6, u7, u8, u9, u10] = [
        u[0], u[1], u[2], u[3], u[4], u[5], u[6], u[7], u[8], u[9],
    ];
    let no_loss = k.k6 * u5 + k.k4 * u7 + k.k3 * u8;
    let (r5, r9) = match mode {
        ChemistryMode::AsPrinted => (
            k.k2 * u5,
            k.k4 * u1 * u7 + 2.0 * k.k8 * u10 - (k.k1 * u3 - k.k9 * u2 + k.k10) * u9,
        ),
        ChemistryMode::Corrected => (
            k.k5 * u2 - (k.k6 * u1 + k.k7) * u5,
            k.k4 * u1 * u7 + 2.0 * k.k8 * u10 - (k.k1 * u3 + k.k9 * u2 + k.k10) * u9,
        ),
    };
    [
        k.k5 * u2 - no_loss * u1,
        no_loss * u1 - (k.k5 + k.k9 * u9) * u2,
        -k.k1 * u3 * u9,
        2.0 * k.k1 * u3 * u9 + k.k3 * u1 * u8 - k.k2 * u4,
        r5,
        k.k9 * u2 * u9,
        2.0 * k.k2 * u4 + k.k3 * u1 * u8 + k.k10 * u9 - k.k4 * u1 * u7,
        4.0 * k.k1 * u3 * u9 - k.k3 * u1 * u8,
        r9,
        k.k7 * u5 - k.k8 * u10,
    ]
}

/// `jac[l][m] = dR_l / du_m`, hand-differentiated.
pub fn reaction_jacobian(u: &[f64], k: &RateSet, mode: ChemistryMode) -> [[f64; SPECIES]; SPECIES] {
    assert_eq!(u.len(), SPECIES);
    let (u1, u2, u3, u5, u7, u8, u9) = (u[0], u[1], u[2], u[4], u[6], u[7], u[8]);
    let mut j = [[0.0; SPECIES]; SPECIES];
    let no_loss = k.k6 * u5 + k.k4 * u7 + k.k3 * u8;

    j[0][0] = -no_loss;
    j[0][1] = k.k5;
    j[0][4] = -k.k6 * u1;
    j[0][6] = -k.k4 * u1;
    j[0][7] = -k.k3 * u1;

    j[1][0] = no_loss;
    j[1][1] = -(k.k5 + k.k9 * u9);
    j[1][4] = k.k6 * u1;
    j[1][6] = k.k4 * u1;
    j[1][7] = k.k3 * u1;
    j[1][8] = -k.k9 * u2;

    j[2][2] = -k.k1 * u9;
    j[2][8] = -k.k1 * u3;

    j[3][0] = k.k3 * u8;
    j[3][2] = 2.0 * k.k1 * u9;
    j[3][3] = -k.k2;
    j[3][7] = k.k3 * u1;
    j[3][8] = 2.0 * k.k1 * u3;

    j[5][1] = k.k9 * u9;
    j[5][8] = k.k9 * u2;

    j[6][0] = k.k3 * u8 - k.k4 * u7;
    j[6][3] = 2.0 * k.k2;
    j[6][6] = -k.k4 * u1;
    j[6][7] = k.k3 * u1;
    j[6][8] = k.k10;

    j[7][0] = -k.k3 * u8;
    j[7][2] = 4.0 * k.k1 * u9;
    j[7][7] = -k.k3 * u1;
    j[7][8] = 4.0 * k.k1 * u3;

    j[8][0] = k.k4 * u7;
    j[8][2] = -k.k1 * u9;
    j[8][6] = k.k4 * u1;
    j[8][9] = 2.0 * k.k8;

    j[9][4] = k.k7;
    j[9][9] = -k.k8;

    match mode {
        ChemistryMode::AsPrinted => {
            j[4][4] = k.k2;
            j[8][1] = k.k9 * u9;
            j[8][8] = -k.k1 * u3 + k.k9 * u2 - k.k10;
        }
        ChemistryMode::Corrected => {
            j[4][0] = -k.k6 * u5;
            j[4][1] = k.k5;
            j[4][4] = -(k.k6 * u1 + k.k7);
            j[8][1] = -k.k9 * u9;
            j[8][8] = -k.k1 * u3 - k.k9 * u2 - k.k10;
        }
    }
    j
}

/// Periodic Dirichlet signal `c (sin(t / C) + 2)`.
pub fn boundary_signal(t: f64, amplitude: f64, period_scale: f64) -> f64 {
    amplitude * ((t / period_scale).sin() + 2.0)
}
