//! Compensated (Kahan) summation.
//!
//! Long evolutions accumulate 10⁵–10⁶ tiny increments into log-radii and
//! phases; plain summation would eat several digits of the downstream
//! consistency contracts.

/// Running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl From<f64> for Kahan {
    fn from(x: f64) -> Self {
        Kahan { sum: x, comp: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_small_increments() {
        let mut k = Kahan::new();
        let mut plain = 0.0f64;
        for _ in 0..1_000_000 {
            k.add(0.1);
            plain += 0.1;
        }
        let exact = 100_000.0;
        assert!((k.value() - exact).abs() < 1e-9);
        // sanity: plain summation is measurably worse
        assert!((plain - exact).abs() > (k.value() - exact).abs());
    }

    #[test]
    fn zero_stays_exactly_zero() {
        let mut k = Kahan::new();
        for _ in 0..1000 {
            k.add(0.0);
        }
        assert_eq!(k.value(), 0.0);
    }
}
