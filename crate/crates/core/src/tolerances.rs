//! The single tolerance record shared by the LP engine, the separation routine
//! and the branch-and-cut driver.
//!
//! `HUBFORGE_TOL` overrides individual entries with a comma separated list of
//! `key=value` pairs, e.g. `HUBFORGE_TOL="feas=1e-8,int=1e-5"`. Recognised keys:
//! `feas`, `opt`, `pivot`, `zero`, `int`, `cut`.

use std::env;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility of rows and bounds.
    pub feasibility: f64,
    /// Reduced-cost threshold for pricing.
    pub optimality: f64,
    /// Smallest acceptable pivot magnitude.
    pub pivot: f64,
    /// Coefficients below this magnitude are dropped.
    pub zero_drop: f64,
    /// Distance from 0/1 at which a binary counts as integral.
    pub integrality: f64,
    /// Minimum violation for a separated cut to be reported.
    pub cut_violation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-7,
            optimality: 1e-9,
            pivot: 1e-9,
            zero_drop: 1e-12,
            integrality: 1e-6,
            cut_violation: 1e-6,
        }
    }
}

impl Tolerances {
    /// Defaults, overridden by `HUBFORGE_TOL` when set. Malformed entries are
    /// ignored.
    pub fn from_env() -> Self {
        let mut tol = Tolerances::default();
        if let Ok(spec) = env::var("HUBFORGE_TOL") {
            tol.apply_overrides(&spec);
        }
        tol
    }

    pub fn apply_overrides(&mut self, spec: &str) {
        for item in spec.split(',') {
            let Some((key, value)) = item.split_once('=') else {
                continue;
            };
            let Ok(value) = value.trim().parse::<f64>() else {
                continue;
            };
            if !(value > 0.0 && value.is_finite()) {
                continue;
            }
            match key.trim() {
                "feas" => self.feasibility = value,
                "opt" => self.optimality = value,
                "pivot" => self.pivot = value,
                "zero" => self.zero_drop = value,
                "int" => self.integrality = value,
                "cut" => self.cut_violation = value,
                _ => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_known_keys_only() {
        let mut t = Tolerances::default();
        t.apply_overrides("feas=1e-8, int=1e-5,bogus=3,cut=abc,pivot=-1");
        assert_eq!(t.feasibility, 1e-8);
        assert_eq!(t.integrality, 1e-5);
        assert_eq!(t.cut_violation, 1e-6);
        assert_eq!(t.pivot, 1e-9);
    }
}
