//! Every numeric threshold used by the crate, collected in one place.
//!
//! Baseline values are calibrated for `f64`. Other scalar widths scale them by
//! the ratio of machine epsilons so that `f32` instantiations stay usable.

use crate::scalar::Scalar;

/// Named tolerance bundle threaded through validation and checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Max entrywise `|M - M†|` accepted where a Hermitian input is required.
    pub hermiticity: T,
    /// Max entrywise `|Σ λ v v† - M|` allowed after an eigendecomposition.
    pub reconstruction: T,
    /// Max entrywise `|U†U - I|` accepted where a unitary input is required.
    pub unitarity: T,
    /// Allowed `|tr ρ - 1|` for density operators.
    pub trace_deviation: T,
    /// Eigenvalues in `[-this, 0)` are clipped to zero; below that is an error.
    pub negative_eigenvalue: T,
    /// Forward trajectory probabilities at or below this count as off support.
    pub support_threshold: T,
    /// Adjacent sorted eigenvalues closer than this, relative to the largest
    /// eigenvalue magnitude, form a degenerate cluster and receive the
    /// deterministic canonical basis.
    pub degeneracy_gap: T,
    /// Residual allowed by distribution-level checks (normalization, integral
    /// identity, detailed ratio, slack-vs-divergence, averaged identities).
    pub check: T,
}

/// Run-time selectable tolerance profile (`QFLUCT_TOL` environment variable).
///
/// `Strict` tightens the distribution-level `check` tolerance a hundredfold;
/// structural tolerances (hermiticity, unitarity, ...) are unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToleranceProfile {
    #[default]
    Default,
    Strict,
}

impl ToleranceProfile {
    /// Parses `"default"` or `"strict"` (case-insensitive).
    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_lowercase().as_str() {
            "default" => Some(Self::Default),
            "strict" => Some(Self::Strict),
            _ => None,
        }
    }

    /// Reads `QFLUCT_TOL`; unset means `Default`, unrecognized values error.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var("QFLUCT_TOL") {
            Ok(value) => Self::parse(&value)
                .ok_or_else(|| format!("QFLUCT_TOL must be 'default' or 'strict', got '{value}'")),
            Err(std::env::VarError::NotPresent) => Ok(Self::Default),
            Err(e) => Err(format!("QFLUCT_TOL unreadable: {e}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Default => "default",
            Self::Strict => "strict",
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    /// Tolerances for the given profile, scaled to the scalar width.
    pub fn profile(profile: ToleranceProfile) -> Self {
        let check_scale = match profile {
            ToleranceProfile::Default => 1.0,
            ToleranceProfile::Strict => 0.01,
        };
        // Widen everything by the epsilon ratio so f32 keeps headroom.
        let scale = T::epsilon().as_f64() / f64::EPSILON;
        let t = |x: f64| T::cst(x * scale);
        Tolerances {
            hermiticity: t(1e-12),
            reconstruction: t(1e-10),
            unitarity: t(1e-10),
            trace_deviation: t(1e-12),
            negative_eigenvalue: t(1e-10),
            support_threshold: t(1e-14),
            degeneracy_gap: t(1e-10),
            check: t(1e-9 * check_scale),
        }
    }

    /// The `Default` profile.
    pub fn default_profile() -> Self {
        Self::profile(ToleranceProfile::Default)
    }

    /// The `Strict` profile.
    pub fn strict_profile() -> Self {
        Self::profile(ToleranceProfile::Strict)
    }
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self::default_profile()
    }
}
