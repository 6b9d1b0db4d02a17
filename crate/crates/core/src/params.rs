//! Physical coefficients of the cable–deck model and arithmetic
//! classification of the damping point.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Location of the pointwise damper.
///
/// Serialized either as a plain number (absolute position in `(0, ell)`) or as
/// `{"num": p, "den": q}`, meaning the exact fraction `p/q` of the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DampingPoint {
    Ratio { num: u64, den: u64 },
    Absolute(f64),
}

impl DampingPoint {
    pub fn ratio(num: u64, den: u64) -> Self {
        DampingPoint::Ratio { num, den }
    }

    /// Absolute coordinate of the damper on a span of length `ell`.
    pub fn position(&self, ell: f64) -> f64 {
        match *self {
            DampingPoint::Ratio { num, den } => ell * num as f64 / den as f64,
            DampingPoint::Absolute(x) => x,
        }
    }

    /// Exact fraction of the span in lowest terms, if one was given.
    pub fn lowest_terms(&self) -> Option<(u64, u64)> {
        match *self {
            DampingPoint::Ratio { num, den } if den > 0 => {
                let g = num.gcd(&den).max(1);
                Some((num / g, den / g))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Span length.
    pub ell: f64,
    /// Cable tension coefficient.
    pub beta0: f64,
    /// Flexural rigidity EI of the deck.
    pub alpha: f64,
    /// Deck pretension.
    pub alpha0: f64,
    /// Linear suspender stiffness.
    pub k: f64,
    /// Damping gain on the cable velocity at the damper.
    pub gamma: f64,
    /// Damping gain on the deck velocity at the damper.
    pub gamma0: f64,
    pub xi: DampingPoint,
}

impl ModelParams {
    /// Unit coefficients, `gamma = gamma0 = 0.5`, damper at `xi`.
    pub fn unit(xi: DampingPoint) -> Self {
        ModelParams {
            ell: 1.0,
            beta0: 1.0,
            alpha: 1.0,
            alpha0: 1.0,
            k: 1.0,
            gamma: 0.5,
            gamma0: 0.5,
            xi,
        }
    }

    pub fn with_damping(mut self, gamma: f64, gamma0: f64) -> Self {
        self.gamma = gamma;
        self.gamma0 = gamma0;
        self
    }

    pub fn with_coupling(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Wave speed of the cable, `sqrt(beta0)`.
    pub fn k1(&self) -> f64 {
        self.beta0.sqrt()
    }

    /// Absolute damper coordinate.
    pub fn xi_position(&self) -> f64 {
        self.xi.position(self.ell)
    }

    /// Every invariant violation, in field order.
    pub fn violations(&self) -> Vec<ParamError> {
        let mut out = Vec::new();
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            out.push(ParamError::NonPositiveLength(self.ell));
        }
        let positive = [("beta0", self.beta0), ("alpha", self.alpha)];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                out.push(ParamError::NegativeCoefficient { name, value });
            }
        }
        let non_negative = [
            ("alpha0", self.alpha0),
            ("k", self.k),
            ("gamma", self.gamma),
            ("gamma0", self.gamma0),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                out.push(ParamError::NegativeCoefficient { name, value });
            }
        }
        let xi = self.xi_position();
        let den_ok = !matches!(self.xi, DampingPoint::Ratio { den: 0, .. });
        if !(den_ok && xi > 0.0 && xi < self.ell && xi.is_finite()) {
            out.push(ParamError::XiOutOfRange { xi, ell: self.ell });
        }
        out
    }

    /// Returns the parameters unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self, ParamError> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DampingTag {
    ExponentialAdmissible,
    UndampedModeExists,
    NoGuarantee,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingPointClass {
    pub tag: DampingTag,
    /// Smallest mode index `j` with `sin((2j+1) pi xi / (2 ell)) = 0`.
    pub witness: Option<usize>,
    /// `xi/ell` in lowest terms; for float input, the nearest fraction with
    /// denominator at most [`NEAREST_RATIONAL_MAX_DEN`].
    pub lowest_terms: Option<(u64, u64)>,
    /// True when `lowest_terms` is an approximation of a float location.
    pub approximate: bool,
}

pub const NEAREST_RATIONAL_MAX_DEN: u64 = 64;

/// Classifies `xi/ell` by the parity of its lowest-terms fraction.
///
/// odd/odd admits exponential decay; even/odd leaves the mode
/// `j = (q - 1)/2` invisible to the damper; anything else (even denominator,
/// or a float location) carries no guarantee.
pub fn classify_damping_point(xi: DampingPoint, ell: f64) -> DampingPointClass {
    match xi.lowest_terms() {
        Some((p, q)) => {
            let (tag, witness) = match (p % 2, q % 2) {
                (1, 1) => (DampingTag::ExponentialAdmissible, None),
                // 2q | (2j+1)p  <=>  q | 2j+1 when p is even and gcd(p, q) = 1
                (0, 1) => (DampingTag::UndampedModeExists, Some(((q - 1) / 2) as usize)),
                _ => (DampingTag::NoGuarantee, None),
            };
            DampingPointClass {
                tag,
                witness,
                lowest_terms: Some((p, q)),
                approximate: false,
            }
        }
        None => DampingPointClass {
            tag: DampingTag::NoGuarantee,
            witness: None,
            lowest_terms: nearest_rational(xi.position(ell) / ell, NEAREST_RATIONAL_MAX_DEN),
            approximate: true,
        },
    }
}

/// Best approximation `p/q` of `x` with `1 <= q <= max_den`, in lowest terms.
pub fn nearest_rational(x: f64, max_den: u64) -> Option<(u64, u64)> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let mut best: Option<(u64, u64, f64)> = None;
    for q in 1..=max_den {
        let p = (x * q as f64).round() as u64;
        let err = (x - p as f64 / q as f64).abs();
        if best.map_or(true, |(_, _, e)| err < e) {
            best = Some((p, q, err));
        }
    }
    best.map(|(p, q, _)| {
        let g = p.gcd(&q).max(1);
        (p / g, q / g)
    })
}
