//! Dimensionless groups of the two-fluid Euler–Maxwell scaling and the MHD
//! regime they select.
//!
//! With `u0 = √(T/m_i)`, `E0 = u0 B0`:
//!
//! ```text
//! ε² = m_e/m_i     α² = e E0 x0 / T     β = e² η n0 u0 x0 / T
//! γ = u0/c         λ² = ε0 T / (e² n0 x0²)     η_ratio = j0 / (e n0 u0)
//! ```

use std::collections::BTreeMap;
use thiserror::Error;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability (N/A²).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Electron mass (kg).
pub const M_ELECTRON: f64 = 9.109_383_701_5e-31;
/// Proton mass (kg).
pub const M_PROTON: f64 = 1.672_621_923_69e-27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("parameter {name} must be {rule}, got {value}")]
    Domain {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// How the electric-field unit `E0` is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Closure {
    /// `γ² η_ratio / (α² λ²) = 1`, the magnetostatic Ampère balance.
    Ampere,
    /// A prescribed `E0` in V/m.
    FixedE0(f64),
}

/// Plasma parameters in SI units, temperature in joules.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalParams {
    pub m_e: f64,
    pub m_i: f64,
    pub temperature: f64,
    pub n0: f64,
    pub x0: f64,
    /// Resistivity in Ω·m; zero is allowed.
    pub eta_phys: f64,
    /// Current density scale in A/m².
    pub j0: f64,
    pub closure: Closure,
    /// Choose `η_ratio = 1/α²` so the Lorentz force coefficient `α² η` is 1;
    /// `j0` is then ignored.
    pub normalize_lorentz: bool,
}

impl PhysicalParams {
    /// Hydrogen plasma with the given temperature, density, length and
    /// current scales.
    pub fn hydrogen(temperature: f64, n0: f64, x0: f64, eta_phys: f64, j0: f64) -> Self {
        Self {
            m_e: M_ELECTRON,
            m_i: M_PROTON,
            temperature,
            n0,
            x0,
            eta_phys,
            j0,
            closure: Closure::Ampere,
            normalize_lorentz: false,
        }
    }

    pub fn validate(&self) -> Result<(), ScalingError> {
        let positive = [
            ("m_e", self.m_e),
            ("m_i", self.m_i),
            ("T", self.temperature),
            ("n0", self.n0),
            ("x0", self.x0),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScalingError::Domain {
                    name,
                    rule: "positive",
                    value,
                });
            }
        }
        if !self.normalize_lorentz && !(self.j0 > 0.0 && self.j0.is_finite()) {
            return Err(ScalingError::Domain {
                name: "j0",
                rule: "positive",
                value: self.j0,
            });
        }
        if !(self.eta_phys >= 0.0 && self.eta_phys.is_finite()) {
            return Err(ScalingError::Domain {
                name: "eta_phys",
                rule: "non-negative",
                value: self.eta_phys,
            });
        }
        if let Closure::FixedE0(e0) = self.closure {
            if !(e0 > 0.0 && e0.is_finite()) {
                return Err(ScalingError::Domain {
                    name: "E0",
                    rule: "positive",
                    value: e0,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionlessGroups {
    pub eps2: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda2: f64,
    pub eta_ratio: f64,
    pub inv_alpha2: f64,
    pub beta_over_alpha4: f64,
    /// Coefficient `α² η_ratio` of the Lorentz force in the momentum balance.
    pub lorentz_coeff: f64,
    /// Scaling units implied by the closure.
    pub u0: f64,
    pub e0: f64,
    pub b0: f64,
    pub t0: f64,
}

pub fn compute_groups(p: &PhysicalParams) -> Result<DimensionlessGroups, ScalingError> {
    p.validate()?;
    let e = E_CHARGE;
    let u0 = (p.temperature / p.m_i).sqrt();
    let gamma = u0 / C_LIGHT;
    let lambda2 = EPSILON_0 * p.temperature / (e * e * p.n0 * p.x0 * p.x0);
    let beta = e * e * p.eta_phys * p.n0 * u0 * p.x0 / p.temperature;
    let (alpha2, eta_ratio) = match (p.closure, p.normalize_lorentz) {
        (Closure::FixedE0(e0), false) => (e * e0 * p.x0 / p.temperature, p.j0 / (e * p.n0 * u0)),
        (Closure::FixedE0(e0), true) => {
            let a2 = e * e0 * p.x0 / p.temperature;
            (a2, 1.0 / a2)
        }
        (Closure::Ampere, false) => {
            let eta = p.j0 / (e * p.n0 * u0);
            (gamma * gamma * eta / lambda2, eta)
        }
        // γ²η/(α²λ²) = 1 with η = 1/α² gives α⁴ = γ²/λ²
        (Closure::Ampere, true) => {
            let a2 = gamma / lambda2.sqrt();
            (a2, 1.0 / a2)
        }
    };
    let e0 = alpha2 * p.temperature / (e * p.x0);
    Ok(DimensionlessGroups {
        eps2: p.m_e / p.m_i,
        alpha2,
        beta,
        gamma,
        lambda2,
        eta_ratio,
        inv_alpha2: 1.0 / alpha2,
        beta_over_alpha4: beta / (alpha2 * alpha2),
        lorentz_coeff: alpha2 * eta_ratio,
        u0,
        e0,
        b0: e0 / u0,
        t0: p.x0 / u0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeLabel {
    IdealMHD,
    ResistiveMHD,
    HallMHD,
    ResistiveHallMHD,
    Indeterminate,
}

pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Buckets `1/α²` and `β/α⁴` into "negligible" (`< threshold`) and
/// "order one" (`[threshold, 1/threshold]`).
pub fn classify_regime(g: &DimensionlessGroups, threshold: f64) -> RegimeLabel {
    classify(g.inv_alpha2, g.beta_over_alpha4, threshold)
}

pub fn classify(inv_alpha2: f64, beta_over_alpha4: f64, threshold: f64) -> RegimeLabel {
    if !(threshold > 0.0 && threshold < 1.0) {
        return RegimeLabel::Indeterminate;
    }
    #[derive(PartialEq)]
    enum Band {
        Small,
        Unit,
        Other,
    }
    let band = |v: f64| {
        if v < threshold && v >= 0.0 {
            Band::Small
        } else if v >= threshold && v <= 1.0 / threshold {
            Band::Unit
        } else {
            Band::Other
        }
    };
    match (band(inv_alpha2), band(beta_over_alpha4)) {
        (Band::Small, Band::Small) => RegimeLabel::IdealMHD,
        (Band::Small, Band::Unit) => RegimeLabel::ResistiveMHD,
        (Band::Unit, Band::Small) => RegimeLabel::HallMHD,
        (Band::Unit, Band::Unit) => RegimeLabel::ResistiveHallMHD,
        _ => RegimeLabel::Indeterminate,
    }
}

/// Parameter file: `key = value` lines, `#` comments. Keys are `m_e`, `m_i`
/// (default hydrogen), `T`, `n0`, `x0`, `eta_phys` (default 0), `j0`,
/// `closure` (`ampere` or `fixed_e0`), `E0`, `normalize_lorentz`.
pub fn parse_params(text: &str) -> Result<PhysicalParams, Vec<ScalingError>> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
            }
            None => errors.push(ScalingError::Parse {
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            }),
        }
    }
    let known = [
        "m_e",
        "m_i",
        "T",
        "n0",
        "x0",
        "eta_phys",
        "j0",
        "closure",
        "E0",
        "normalize_lorentz",
    ];
    for (k, (line, _)) in &kv {
        if !known.contains(&k.as_str()) {
            errors.push(ScalingError::Parse {
                line: *line,
                msg: format!("unknown key {k:?}"),
            });
        }
    }
    fn num(
        kv: &BTreeMap<String, (usize, String)>,
        errors: &mut Vec<ScalingError>,
        key: &str,
        default: Option<f64>,
    ) -> f64 {
        match kv.get(key) {
            Some((line, v)) => v.parse::<f64>().unwrap_or_else(|_| {
                errors.push(ScalingError::Parse {
                    line: *line,
                    msg: format!("{key}: not a number: {v:?}"),
                });
                f64::NAN
            }),
            None => default.unwrap_or_else(|| {
                errors.push(ScalingError::Parse {
                    line: 0,
                    msg: format!("missing required key {key}"),
                });
                f64::NAN
            }),
        }
    }
    let m_e = num(&kv, &mut errors, "m_e", Some(M_ELECTRON));
    let m_i = num(&kv, &mut errors, "m_i", Some(M_PROTON));
    let temperature = num(&kv, &mut errors, "T", None);
    let n0 = num(&kv, &mut errors, "n0", None);
    let x0 = num(&kv, &mut errors, "x0", None);
    let eta_phys = num(&kv, &mut errors, "eta_phys", Some(0.0));
    let normalize_lorentz = match kv.get("normalize_lorentz") {
        None => false,
        Some((line, v)) => match v.as_str() {
            "true" => true,
            "false" => false,
            _ => {
                errors.push(ScalingError::Parse {
                    line: *line,
                    msg: format!("normalize_lorentz: expected true or false, got {v:?}"),
                });
                false
            }
        },
    };
    let j0 = if normalize_lorentz {
        num(&kv, &mut errors, "j0", Some(1.0))
    } else {
        num(&kv, &mut errors, "j0", None)
    };
    let closure = match kv.get("closure").map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "ampere")) => Closure::Ampere,
        Some((_, "fixed_e0")) => Closure::FixedE0(num(&kv, &mut errors, "E0", None)),
        Some((line, other)) => {
            errors.push(ScalingError::Parse {
                line,
                msg: format!("closure: expected ampere or fixed_e0, got {other:?}"),
            });
            Closure::Ampere
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    let p = PhysicalParams {
        m_e,
        m_i,
        temperature,
        n0,
        x0,
        eta_phys,
        j0,
        closure,
        normalize_lorentz,
    };
    p.validate().map_err(|e| vec![e])?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // 100 eV hydrogen, 1e20 m^-3, 1 cm, copper-ish resistivity, 1 MA/m²
    fn sample() -> PhysicalParams {
        PhysicalParams::hydrogen(100.0 * E_CHARGE, 1e20, 1e-2, 1e-6, 1e6)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn codata_constants_are_consistent() {
        assert!(rel(EPSILON_0 * MU_0 * C_LIGHT * C_LIGHT, 1.0) < 1e-9);
    }

    #[test]
    fn hydrogen_mass_ratio() {
        let g = compute_groups(&sample()).unwrap();
        assert!(rel(g.eps2, 5.446e-4) < 1e-4);
        assert!(rel(g.eps2, 1.0 / 1836.15) < 1e-5);
    }

    #[test]
    fn zero_resistivity_gives_zero_beta() {
        let mut p = sample();
        p.eta_phys = 0.0;
        let g = compute_groups(&p).unwrap();
        assert_eq!(g.beta, 0.0);
        let label = classify_regime(&g, DEFAULT_THRESHOLD);
        assert!(matches!(
            label,
            RegimeLabel::IdealMHD | RegimeLabel::HallMHD | RegimeLabel::Indeterminate
        ));
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let mut p = sample();
        p.n0 = 0.0;
        assert!(compute_groups(&p).is_err());
        let mut p = sample();
        p.eta_phys = -1.0;
        assert!(compute_groups(&p).is_err());
        let mut p = sample();
        p.closure = Closure::FixedE0(-3.0);
        assert!(compute_groups(&p).is_err());
    }

    #[test]
    fn doubling_length_scale() {
        let p = sample();
        let mut p2 = sample();
        p2.x0 *= 2.0;
        let (g, g2) = (compute_groups(&p).unwrap(), compute_groups(&p2).unwrap());
        assert!(rel(g2.beta, 2.0 * g.beta) < 1e-14);
        assert!(rel(g2.lambda2, 0.25 * g.lambda2) < 1e-14);
        // under the Ampère closure α² = μ0 e u0 j0 x0² / T
        assert!(rel(g2.alpha2, 4.0 * g.alpha2) < 1e-14);

        // with E0 held fixed, α² = e E0 x0 / T doubles
        let mut q = sample();
        q.closure = Closure::FixedE0(g.e0);
        let mut q2 = q.clone();
        q2.x0 *= 2.0;
        let (h, h2) = (compute_groups(&q).unwrap(), compute_groups(&q2).unwrap());
        assert!(rel(h.alpha2, g.alpha2) < 1e-13);
        assert!(rel(h2.alpha2, 2.0 * h.alpha2) < 1e-14);
    }

    #[test]
    fn regime_anchor_cases() {
        assert_eq!(classify(1e-3, 1e-3, 0.1), RegimeLabel::IdealMHD);
        assert_eq!(classify(1.0, 1e-3, 0.1), RegimeLabel::HallMHD);
        assert_eq!(classify(1.0, 1.0, 0.1), RegimeLabel::ResistiveHallMHD);
        assert_eq!(classify(1e-3, 1.0, 0.1), RegimeLabel::ResistiveMHD);
        assert_eq!(classify(100.0, 1.0, 0.1), RegimeLabel::Indeterminate);
        assert_eq!(classify(1.0, 1.0, 1.5), RegimeLabel::Indeterminate);
    }

    #[test]
    fn lorentz_normalization() {
        for closure in [Closure::Ampere, Closure::FixedE0(10.0)] {
            let mut p = sample();
            p.closure = closure;
            p.normalize_lorentz = true;
            let g = compute_groups(&p).unwrap();
            assert!(rel(g.lorentz_coeff, 1.0) < 1e-14);
        }
        let mut p = sample();
        p.normalize_lorentz = true;
        let g = compute_groups(&p).unwrap();
        let ampere = g.gamma * g.gamma * g.eta_ratio / (g.alpha2 * g.lambda2);
        assert!(rel(ampere, 1.0) < 1e-12);
    }

    #[test]
    fn param_file() {
        let text =
            "# hydrogen\nT = 1.602176634e-17\nn0 = 1e20\nx0 = 0.01\neta_phys = 1e-6\nj0 = 1e6\n";
        let p = parse_params(text).unwrap();
        assert_eq!(p, sample());
        let bad = "T = hot\nx0 = 1\nfoo = 2\n";
        let errs = parse_params(bad).unwrap_err();
        // T unparsable, foo unknown, n0 and j0 missing
        assert_eq!(errs.len(), 4, "{errs:?}");
        assert!(errs.contains(&ScalingError::Parse {
            line: 1,
            msg: "T: not a number: \"hot\"".into()
        }));
    }

    fn params() -> impl Strategy<Value = PhysicalParams> {
        (
            -2.0f64..4.0,  // log10 T in eV
            14.0f64..26.0, // log10 n0
            -6.0f64..2.0,  // log10 x0
            -9.0f64..-2.0, // log10 eta
            0.0f64..10.0,  // log10 j0
            1.0f64..250.0, // ion mass in proton masses
        )
            .prop_map(|(t, n, x, eta, j, mi)| PhysicalParams {
                m_e: M_ELECTRON,
                m_i: mi * M_PROTON,
                temperature: 10f64.powf(t) * E_CHARGE,
                n0: 10f64.powf(n),
                x0: 10f64.powf(x),
                eta_phys: 10f64.powf(eta),
                j0: 10f64.powf(j),
                closure: Closure::Ampere,
                normalize_lorentz: false,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn unit_relations_hold(p in params()) {
            let g = compute_groups(&p).unwrap();
            prop_assert!(rel(g.u0, (p.temperature / p.m_i).sqrt()) < 1e-14);
            prop_assert!(rel(g.e0, g.u0 * g.b0) < 1e-14);
            prop_assert!(rel(p.x0, g.u0 * g.t0) < 1e-14);
            prop_assert!(rel(g.alpha2, E_CHARGE * g.e0 * p.x0 / p.temperature) < 1e-13);
            let ampere = g.gamma * g.gamma * g.eta_ratio / (g.alpha2 * g.lambda2);
            prop_assert!(rel(ampere, 1.0) < 1e-12);
            prop_assert!(rel(g.inv_alpha2 * g.alpha2, 1.0) < 1e-14);
            prop_assert!(rel(g.beta_over_alpha4 * g.alpha2 * g.alpha2, g.beta) < 1e-14);
            for v in [g.eps2, g.alpha2, g.beta, g.gamma, g.lambda2, g.eta_ratio] {
                prop_assert!(v > 0.0 && v.is_finite());
            }
        }

        #[test]
        fn rescaling_exponents(p in params(), s in 0.1f64..10.0) {
            // each group is a monomial; rescaling one input by s multiplies
            // it by s^k with the exponent read off its defining formula
            let g = compute_groups(&p).unwrap();
            let mut q = p.clone();
            q.temperature *= s;
            let h = compute_groups(&q).unwrap();
            prop_assert!(rel(h.gamma, g.gamma * s.sqrt()) < 1e-12);
            prop_assert!(rel(h.lambda2, g.lambda2 * s) < 1e-12);
            prop_assert!(rel(h.beta, g.beta / s.sqrt()) < 1e-12);
            prop_assert!(rel(h.eta_ratio, g.eta_ratio / s.sqrt()) < 1e-12);

            let mut q = p.clone();
            q.n0 *= s;
            let h = compute_groups(&q).unwrap();
            prop_assert!(rel(h.lambda2, g.lambda2 / s) < 1e-12);
            prop_assert!(rel(h.beta, g.beta * s) < 1e-12);
            prop_assert!(rel(h.alpha2, g.alpha2) < 1e-12);

            let mut q = p.clone();
            q.m_e *= s;
            q.m_i *= s;
            let h = compute_groups(&q).unwrap();
            prop_assert!(rel(h.eps2, g.eps2) < 1e-14);
        }

        #[test]
        fn classification_depends_only_on_the_two_ratios(
            a in -4.0f64..2.0, b in -4.0f64..2.0, s in 0.1f64..10.0
        ) {
            let (ia, bo) = (10f64.powf(a), 10f64.powf(b));
            // α² → α²/s changes 1/α² by s; β → β/s³ keeps β/α⁴ = bo·s⁻¹... so
            // compensate explicitly and compare labels on equal ratios
            let g = DimensionlessGroups {
                eps2: 1e-3, alpha2: 1.0 / ia, beta: bo / (ia * ia), gamma: 1e-3,
                lambda2: 1e-6, eta_ratio: 1.0, inv_alpha2: ia, beta_over_alpha4: bo,
                lorentz_coeff: 1.0 / ia, u0: 1.0, e0: 1.0, b0: 1.0, t0: 1.0,
            };
            let h = DimensionlessGroups {
                gamma: g.gamma * s, lambda2: g.lambda2 * s * s, eps2: g.eps2 * s, ..g.clone()
            };
            prop_assert_eq!(classify_regime(&g, 0.1), classify_regime(&h, 0.1));
            prop_assert_eq!(classify_regime(&g, 0.1), classify(ia, bo, 0.1));
        }
    }
}
