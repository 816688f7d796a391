//! C² cutoff `φ` and truncation `χ` built from quintic polynomial bridges.

use serde::{Deserialize, Serialize};

/// Smooth cutoff and truncation profiles tied to a tube radius `δ0`.
///
/// `φ` is 1 below `δ0`, 0 above `2δ0`. `χ(s)` equals `s` below `δ0²` and the
/// constant `4δ0²` above `4δ0²`, with `χ' ≥ 0` in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub delta0: f64,
}

// Quintic smoothstep: S(0)=0, S(1)=1, S', S'' vanish at both ends.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_prime(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

fn smoothstep_second(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
}

impl CutoffProfile {
    pub fn new(delta0: f64) -> Self {
        assert!(delta0 > 0.0, "tube radius must be positive");
        CutoffProfile { delta0 }
    }

    pub fn inner_radius(&self) -> f64 {
        self.delta0
    }

    pub fn outer_radius(&self) -> f64 {
        2.0 * self.delta0
    }

    /// `φ(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        1.0 - smoothstep((s - self.delta0) / self.delta0)
    }

    pub fn phi_prime(&self, s: f64) -> f64 {
        -smoothstep_prime((s - self.delta0) / self.delta0) / self.delta0
    }

    pub fn phi_second(&self, s: f64) -> f64 {
        -smoothstep_second((s - self.delta0) / self.delta0) / (self.delta0 * self.delta0)
    }

    // χ on the bridge [δ0², 4δ0²] is δ0² + w·I(t) with w = 3δ0² and
    // I' = q(t) = 1 + 12t² − 28t³ + 15t⁴ ≥ 0, q(0)=1, q(1)=0, q'(0)=q'(1)=0,
    // ∫q = 1 so that χ reaches exactly 4δ0².
    fn bridge_width(&self) -> f64 {
        3.0 * self.delta0 * self.delta0
    }

    /// `χ(s)`.
    pub fn chi(&self, s: f64) -> f64 {
        let d2 = self.delta0 * self.delta0;
        if s <= d2 {
            s
        } else if s >= 4.0 * d2 {
            4.0 * d2
        } else {
            let w = self.bridge_width();
            let t = (s - d2) / w;
            d2 + w * t * (1.0 + t * t * (4.0 + t * (-7.0 + 3.0 * t)))
        }
    }

    pub fn chi_prime(&self, s: f64) -> f64 {
        let d2 = self.delta0 * self.delta0;
        if s <= d2 {
            1.0
        } else if s >= 4.0 * d2 {
            0.0
        } else {
            let t = (s - d2) / self.bridge_width();
            1.0 + t * t * (12.0 + t * (-28.0 + 15.0 * t))
        }
    }

    pub fn chi_second(&self, s: f64) -> f64 {
        let d2 = self.delta0 * self.delta0;
        if s <= d2 || s >= 4.0 * d2 {
            0.0
        } else {
            let w = self.bridge_width();
            let t = (s - d2) / w;
            t * (24.0 + t * (-84.0 + 60.0 * t)) / w
        }
    }
}
