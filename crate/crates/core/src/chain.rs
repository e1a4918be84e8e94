//! Chain configuration, spring-mass lumping and nondimensional scales.
//!
//! Masses are indexed from the top: mass 1 hangs from the release point,
//! spring `j` joins mass `j` to mass `j + 1`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Standard gravity in cm/s².
pub const DEFAULT_GRAVITY: f64 = 981.0;

/// How each spring's own mass is folded into the point masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LumpingPolicy {
    /// Spring `j`'s mass is added to mass `j` (the mass it hangs from).
    #[default]
    AddAbove,
    /// Spring masses are ignored.
    None,
}

/// Physical description of a hanging chain, in cgs units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    bare_masses: Vec<f64>,
    spring_constants: Vec<f64>,
    spring_masses: Vec<f64>,
    lumping_policy: LumpingPolicy,
    g: f64,
    natural_lengths: Option<Vec<f64>>,
}

/// On-disk JSON layout. Key suffixes carry the units.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<String>,
    n: usize,
    bare_masses_g: Vec<f64>,
    spring_constants_dyn_per_cm: Vec<f64>,
    spring_masses_g: Vec<f64>,
    #[serde(default)]
    lumping_policy: LumpingPolicy,
    #[serde(default = "default_gravity")]
    g_cm_s2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    natural_lengths_cm: Option<Vec<f64>>,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl ChainConfig {
    /// Builds and validates a configuration. Lumping is applied lazily by
    /// [`ChainConfig::effective_masses`].
    pub fn new(
        bare_masses: Vec<f64>,
        spring_constants: Vec<f64>,
        spring_masses: Vec<f64>,
        lumping_policy: LumpingPolicy,
        g: f64,
    ) -> Result<Self> {
        let config = Self {
            bare_masses,
            spring_constants,
            spring_masses,
            lumping_policy,
            g,
            natural_lengths: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Chain with no spring mass and lumping disabled.
    pub fn from_point_masses(masses: Vec<f64>, spring_constants: Vec<f64>, g: f64) -> Result<Self> {
        let springs = vec![0.0; masses.len().saturating_sub(1)];
        Self::new(masses, spring_constants, springs, LumpingPolicy::None, g)
    }

    pub fn with_natural_lengths(mut self, lengths: Vec<f64>) -> Result<Self> {
        self.natural_lengths = Some(lengths);
        self.validate()?;
        Ok(self)
    }

    /// Parses the JSON config format.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(units) = &file.units {
            if units != "cgs" {
                return Err(Error::InvalidConfig(format!(
                    "unsupported unit system `{units}` (only `cgs` is accepted)"
                )));
            }
        }
        if file.n < 2 {
            return Err(Error::TooFewMasses);
        }
        let checks = [
            ("bare_masses_g", file.bare_masses_g.len(), file.n),
            (
                "spring_constants_dyn_per_cm",
                file.spring_constants_dyn_per_cm.len(),
                file.n - 1,
            ),
            ("spring_masses_g", file.spring_masses_g.len(), file.n - 1),
        ];
        for (key, got, want) in checks {
            if got != want {
                return Err(Error::InvalidConfig(format!(
                    "`{key}` has {got} entries, expected {want} for n = {}",
                    file.n
                )));
            }
        }
        let config = Self {
            bare_masses: file.bare_masses_g,
            spring_constants: file.spring_constants_dyn_per_cm,
            spring_masses: file.spring_masses_g,
            lumping_policy: file.lumping_policy,
            g: file.g_cm_s2,
            natural_lengths: file.natural_lengths_cm,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        let file = ConfigFile {
            units: Some("cgs".to_string()),
            n: self.n(),
            bare_masses_g: self.bare_masses.clone(),
            spring_constants_dyn_per_cm: self.spring_constants.clone(),
            spring_masses_g: self.spring_masses.clone(),
            lumping_policy: self.lumping_policy,
            g_cm_s2: self.g,
            natural_lengths_cm: self.natural_lengths.clone(),
        };
        serde_json::to_string_pretty(&file).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<()> {
        let n = self.bare_masses.len();
        if n < 2 {
            return Err(Error::TooFewMasses);
        }
        if self.spring_constants.len() != n - 1 || self.spring_masses.len() != n - 1 {
            return Err(Error::InvalidConfig(format!(
                "{n} masses need {} springs, got {} constants and {} spring masses",
                n - 1,
                self.spring_constants.len(),
                self.spring_masses.len()
            )));
        }
        for (j, &m) in self.bare_masses.iter().enumerate() {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "bare mass m{} = {m} must be >= 0",
                    j + 1
                )));
            }
        }
        for (j, &k) in self.spring_constants.iter().enumerate() {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "spring constant k{} = {k} must be > 0",
                    j + 1
                )));
            }
        }
        for (j, &m) in self.spring_masses.iter().enumerate() {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "spring mass of spring {} = {m} must be >= 0",
                    j + 1
                )));
            }
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::InvalidConfig(format!("g = {} must be > 0", self.g)));
        }
        if let Some(lengths) = &self.natural_lengths {
            if lengths.len() != n - 1 {
                return Err(Error::InvalidConfig(format!(
                    "`natural_lengths_cm` has {} entries, expected {}",
                    lengths.len(),
                    n - 1
                )));
            }
            if let Some((j, l)) = lengths
                .iter()
                .enumerate()
                .find(|(_, l)| !(l.is_finite() && **l > 0.0))
            {
                return Err(Error::InvalidConfig(format!(
                    "natural length of spring {} = {l} must be > 0",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.bare_masses.len()
    }

    pub fn bare_masses(&self) -> &[f64] {
        &self.bare_masses
    }

    pub fn spring_constants(&self) -> &[f64] {
        &self.spring_constants
    }

    pub fn spring_masses(&self) -> &[f64] {
        &self.spring_masses
    }

    pub fn lumping_policy(&self) -> LumpingPolicy {
        self.lumping_policy
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn natural_lengths(&self) -> Option<&[f64]> {
        self.natural_lengths.as_deref()
    }

    /// Point masses seen by the dynamics after lumping.
    ///
    /// Fails if any resulting mass is not strictly positive.
    pub fn effective_masses(&self) -> Result<Vec<f64>> {
        let mut masses = self.bare_masses.clone();
        if self.lumping_policy == LumpingPolicy::AddAbove {
            for (m, s) in masses.iter_mut().zip(&self.spring_masses) {
                *m += s;
            }
        }
        if let Some((j, m)) = masses.iter().enumerate().find(|(_, m)| **m <= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "effective mass m{} = {m} must be > 0",
                j + 1
            )));
        }
        Ok(masses)
    }

    pub fn total_mass(&self) -> Result<f64> {
        Ok(self.effective_masses()?.iter().sum())
    }

    /// Copy of this chain with the effective top mass replaced. The result has
    /// lumping disabled so `m1` is used verbatim.
    pub fn with_top_mass(&self, m1: f64) -> Result<Self> {
        let mut masses = self.effective_masses()?;
        masses[0] = m1;
        let mut config = Self::from_point_masses(masses, self.spring_constants.clone(), self.g)?;
        config.natural_lengths = self.natural_lengths.clone();
        Ok(config)
    }

    /// Copy of this chain under a different gravitational acceleration.
    pub fn with_gravity(&self, g: f64) -> Result<Self> {
        let config = Self { g, ..self.clone() };
        config.validate()?;
        Ok(config)
    }

    /// Rescaled coefficients and the time/length scales of the released chain.
    pub fn nondimensionalize(&self) -> Result<NondimSystem> {
        let m = self.effective_masses()?;
        let k = &self.spring_constants;
        let n = m.len();
        let (m1, k1) = (m[0], k[0]);
        let alphas = (1..n).map(|j| (m1 / m[j]) * (k[j - 1] / k1)).collect();
        let betas = (1..n - 1).map(|j| (m1 / m[j]) * (k[j] / k1)).collect();
        let time_scale = (m1 / k1).sqrt();
        let total: f64 = m.iter().sum();
        let length_scale = time_scale * time_scale * total * self.g / m1;
        Ok(NondimSystem {
            alphas,
            betas,
            time_scale,
            length_scale,
        })
    }
}

/// Loads a config from a path, or parses it directly when `source` is JSON
/// text.
pub fn load_config(source: &str) -> Result<ChainConfig> {
    if source.trim_start().starts_with('{') {
        return ChainConfig::from_json_str(source);
    }
    let text = std::fs::read_to_string(Path::new(source))?;
    ChainConfig::from_json_str(&text)
}

/// Coupling constants of the nondimensional chain
///
/// ```text
/// y1'' = (y2 - y1) - 1
/// yj'' = αj (y(j-1) - yj) + βj (y(j+1) - yj)     j = 2..n-1
/// yn'' = αn (y(n-1) - yn)
/// ```
///
/// with `t = T τ` and `z = L y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondimSystem {
    /// `α_j` for `j = 2..=n`.
    pub alphas: Vec<f64>,
    /// `β_j` for `j = 2..=n-1`.
    pub betas: Vec<f64>,
    /// `T = sqrt(m1 / k1)` in seconds.
    pub time_scale: f64,
    /// `L = T² Σm g / m1` in centimetres.
    pub length_scale: f64,
}

impl NondimSystem {
    /// A system given directly by its couplings, with unit scales.
    pub fn from_coefficients(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::TooFewMasses);
        }
        if betas.len() + 1 != alphas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} alphas need {} betas, got {}",
                alphas.len(),
                alphas.len() - 1,
                betas.len()
            )));
        }
        if alphas
            .iter()
            .chain(&betas)
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::InvalidArgument(
                "couplings must be finite and > 0".into(),
            ));
        }
        Ok(Self {
            alphas,
            betas,
            time_scale: 1.0,
            length_scale: 1.0,
        })
    }

    pub fn n(&self) -> usize {
        self.alphas.len() + 1
    }

    /// `α_j`, `2 <= j <= n`.
    pub fn alpha(&self, j: usize) -> f64 {
        self.alphas[j - 2]
    }

    /// `β_j`, `1 <= j <= n-1`, with `β_1 = 1` (the unit top coupling).
    pub fn beta(&self, j: usize) -> f64 {
        if j == 1 {
            1.0
        } else {
            self.betas[j - 2]
        }
    }

    /// Diagonal of the Laplace matrix at `s = 0`.
    pub fn diagonal_at_rest(&self, j: usize) -> f64 {
        let n = self.n();
        match j {
            1 => 1.0,
            j if j == n => self.alpha(n),
            j => self.alpha(j) + self.beta(j),
        }
    }

    /// `Π_{i=2..=j} α_i`; one for `j = 1`.
    pub fn alpha_product(&self, j: usize) -> f64 {
        self.alphas[..j - 1].iter().product()
    }

    /// `Σ m_j / m_1`, recovered from the couplings alone via
    /// `m_j / m_1 = Π_{i=2}^{j-1}(β_i/α_i) / α_j`.
    pub fn total_mass_ratio(&self) -> f64 {
        let mut sum = 1.0;
        let mut stiffness_ratio = 1.0; // k_{j-1} / k_1
        for j in 2..=self.n() {
            if j > 2 {
                stiffness_ratio *= self.beta(j - 1) / self.alpha(j - 1);
            }
            sum += stiffness_ratio / self.alpha(j);
        }
        sum
    }

    pub fn to_dimensional_time(&self, tau: f64) -> f64 {
        tau * self.time_scale
    }

    pub fn to_dimensional_length(&self, y: f64) -> f64 {
        y * self.length_scale
    }

    pub fn to_nondim_time(&self, t: f64) -> f64 {
        t / self.time_scale
    }

    pub fn to_nondim_length(&self, z: f64) -> f64 {
        z / self.length_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TRIAL1: &str = r#"{
        "n": 4,
        "bare_masses_g": [0.0, 107.5, 106.56, 107.28],
        "spring_constants_dyn_per_cm": [13761, 15112, 15723],
        "spring_masses_g": [4.44, 4.44, 4.44],
        "lumping_policy": "add-above",
        "g_cm_s2": 981
    }"#;

    #[test]
    fn loads_four_mass_config() {
        let config = load_config(TRIAL1).unwrap();
        assert_eq!(config.n(), 4);
        assert_eq!(config.spring_constants(), &[13761.0, 15112.0, 15723.0]);
        assert_eq!(config.lumping_policy(), LumpingPolicy::AddAbove);
        assert!(config.natural_lengths().is_none());
    }

    #[test]
    fn round_trips_through_json() {
        let config = load_config(TRIAL1)
            .unwrap()
            .with_natural_lengths(vec![1.0, 2.0, 3.0])
            .unwrap();
        let again = ChainConfig::from_json_str(&config.to_json_string()).unwrap();
        assert_eq!(config, again);
        assert_eq!(config.fingerprint(), again.fingerprint());
    }

    #[test]
    fn rejects_single_mass() {
        let text = r#"{"n": 1, "bare_masses_g": [1.0], "spring_constants_dyn_per_cm": [],
                       "spring_masses_g": []}"#;
        let err = ChainConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.to_string(), "chain requires at least two masses");
    }

    #[test]
    fn rejects_negative_spring_constant() {
        let text = TRIAL1.replace("15112", "-5");
        let err = ChainConfig::from_json_str(&text).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)), "{err}");
        assert!(err.to_string().contains("k2"));
    }

    #[test]
    fn rejects_missing_field_and_foreign_units() {
        let text = TRIAL1.replace("\"spring_masses_g\": [4.44, 4.44, 4.44],", "");
        let err = ChainConfig::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("spring_masses_g"), "{err}");

        let si = TRIAL1.replacen('{', r#"{"units": "si","#, 1);
        assert!(ChainConfig::from_json_str(&si).is_err());
        let cgs = TRIAL1.replacen('{', r#"{"units": "cgs","#, 1);
        assert!(ChainConfig::from_json_str(&cgs).is_ok());

        let kg = TRIAL1.replace("bare_masses_g", "bare_masses_kg");
        assert!(ChainConfig::from_json_str(&kg).is_err());
    }

    #[test]
    fn rejects_length_mismatch() {
        let text = TRIAL1.replace("[4.44, 4.44, 4.44]", "[4.44, 4.44]");
        assert!(matches!(
            ChainConfig::from_json_str(&text),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn lumps_spring_masses_onto_the_mass_above() {
        let config = load_config(TRIAL1).unwrap();
        let m = config.effective_masses().unwrap();
        let expected = [4.44, 111.94, 111.00, 107.28];
        for (got, want) in m.iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_spring_masses_leave_masses_unchanged() {
        let bare = vec![1.0, 2.0, 3.0];
        let config = ChainConfig::new(
            bare.clone(),
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            LumpingPolicy::AddAbove,
            981.0,
        )
        .unwrap();
        assert_eq!(config.effective_masses().unwrap(), bare);
    }

    #[test]
    fn massless_top_without_lumping_is_rejected() {
        let config = ChainConfig::new(
            vec![0.0, 107.5, 106.56, 107.28],
            vec![13761.0, 15112.0, 15723.0],
            vec![4.44; 3],
            LumpingPolicy::None,
            981.0,
        )
        .unwrap();
        assert!(config.effective_masses().is_err());
        assert!(config.nondimensionalize().is_err());
    }

    #[test]
    fn equal_chain_has_unit_couplings() {
        let config = ChainConfig::from_point_masses(vec![2.5; 5], vec![7.0; 4], 981.0).unwrap();
        let sys = config.nondimensionalize().unwrap();
        assert!(sys
            .alphas
            .iter()
            .chain(&sys.betas)
            .all(|&c| (c - 1.0).abs() < 1e-15));
        assert_eq!(sys.n(), 5);
        assert_relative_eq!(sys.total_mass_ratio(), 5.0, max_relative = 1e-14);
    }

    #[test]
    fn trial_one_scales() {
        let sys = load_config(TRIAL1).unwrap().nondimensionalize().unwrap();
        // (4.44 / 111.94)(13761 / 13761)
        assert_relative_eq!(sys.alpha(2), 4.44 / 111.94, max_relative = 1e-14);
        assert!((sys.alpha(2) - 0.03966).abs() < 5e-6);
        assert!((sys.time_scale - 0.01796).abs() < 5e-6);
        // L = Σm g / k1
        assert_relative_eq!(
            sys.length_scale,
            334.66 * 981.0 / 13761.0,
            max_relative = 1e-12
        );
    }

    proptest! {
        #[test]
        fn lumping_conserves_total_mass(
            bare in prop::collection::vec(0.1f64..500.0, 2..8),
            spring_mass in 0.0f64..20.0,
        ) {
            let n = bare.len();
            let config = ChainConfig::new(bare.clone(), vec![1000.0; n - 1], vec![spring_mass; n - 1],
                                          LumpingPolicy::AddAbove, 981.0).unwrap();
            let total: f64 = config.effective_masses().unwrap().iter().sum();
            let expected = bare.iter().sum::<f64>() + spring_mass * (n - 1) as f64;
            prop_assert!((total - expected).abs() <= 1e-12 * expected);
        }

        #[test]
        fn couplings_are_scale_covariant(
            masses in prop::collection::vec(0.1f64..100.0, 2..7),
            springs_seed in prop::collection::vec(10.0f64..1e5, 6),
            c in 1e-3f64..1e3,
        ) {
            let n = masses.len();
            let springs: Vec<f64> = springs_seed[..n - 1].to_vec();
            let a = ChainConfig::from_point_masses(masses.clone(), springs.clone(), 981.0).unwrap();
            let b = ChainConfig::from_point_masses(
                masses.iter().map(|m| m * c).collect(),
                springs.iter().map(|k| k * c).collect(),
                981.0,
            ).unwrap();
            let (sa, sb) = (a.nondimensionalize().unwrap(), b.nondimensionalize().unwrap());
            for (x, y) in sa.alphas.iter().chain(&sa.betas).zip(sb.alphas.iter().chain(&sb.betas)) {
                prop_assert!((x - y).abs() <= 1e-13 * x.abs());
            }
        }

        #[test]
        fn mass_ratio_recovered_from_couplings(
            masses in prop::collection::vec(0.1f64..100.0, 2..9),
            springs_seed in prop::collection::vec(10.0f64..1e5, 8),
        ) {
            let n = masses.len();
            let config = ChainConfig::from_point_masses(masses.clone(), springs_seed[..n - 1].to_vec(), 981.0).unwrap();
            let sys = config.nondimensionalize().unwrap();
            let direct = masses.iter().sum::<f64>() / masses[0];
            prop_assert!((sys.total_mass_ratio() - direct).abs() <= 1e-12 * direct);
        }

        #[test]
        fn rescaling_round_trips(tau in 0.0f64..1e3, y in -1e6f64..1e6) {
            let config = ChainConfig::from_point_masses(vec![4.44, 111.94, 111.0, 107.28],
                                                        vec![13761.0, 15112.0, 15723.0], 981.0).unwrap();
            let sys = config.nondimensionalize().unwrap();
            let tau_back = sys.to_nondim_time(sys.to_dimensional_time(tau));
            let y_back = sys.to_nondim_length(sys.to_dimensional_length(y));
            prop_assert!((tau_back - tau).abs() <= 1e-12 * tau.abs().max(1e-300));
            prop_assert!((y_back - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }
}
