//! Polynomials on [0, 1] in the Bernstein basis.
//!
//! The CDF of a Beta density with integer parameters is a binomial tail,
//! which in the Bernstein basis has 0/1 coefficients. Products of such CDFs
//! keep every coefficient in [0, 1], so multiplication and integration
//! involve only nonnegative terms and stay accurate in double precision.

use statrs::function::factorial::ln_factorial;

use crate::beta::BetaParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Bernstein {
    coeffs: Vec<f64>,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

impl Bernstein {
    pub fn constant(c: f64) -> Self {
        Bernstein { coeffs: vec![c] }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "Bernstein polynomial needs at least one coefficient"
        );
        Bernstein { coeffs }
    }

    /// `P(Θ <= θ)` for `Θ ~ B(a, b)`: equals `P(Bin(a+b-1, θ) >= a)`.
    pub fn beta_cdf(p: BetaParams) -> Self {
        let degree = (p.alpha_heads() + p.alpha_tails() - 1) as usize;
        let first_one = p.alpha_heads() as usize;
        let coeffs = (0..=degree)
            .map(|j| if j >= first_one { 1.0 } else { 0.0 })
            .collect();
        Bernstein { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree-elevating product: `(Σ f_j B_{j,n})(Σ g_k B_{k,m}) = Σ h_l B_{l,n+m}` with
    /// `h_l = Σ_{j+k=l} f_j g_k C(n,j) C(m,k) / C(n+m,l)`.
    pub fn mul(&self, other: &Bernstein) -> Bernstein {
        let n = self.degree();
        let m = other.degree();
        let mut out = vec![0.0; n + m + 1];
        let ln_left: Vec<f64> = (0..=n).map(|j| ln_choose(n, j)).collect();
        let ln_right: Vec<f64> = (0..=m).map(|k| ln_choose(m, k)).collect();
        let ln_out: Vec<f64> = (0..=n + m).map(|l| ln_choose(n + m, l)).collect();
        for (j, &f) in self.coeffs.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            for (k, &g) in other.coeffs.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let w = (ln_left[j] + ln_right[k] - ln_out[j + k]).exp();
                out[j + k] += f * g * w;
            }
        }
        Bernstein { coeffs: out }
    }

    /// `∫_0^1 p(θ) dθ`; every basis polynomial of degree N integrates to `1/(N+1)`.
    pub fn integral(&self) -> f64 {
        self.coeffs.iter().sum::<f64>() / self.coeffs.len() as f64
    }

    /// de Casteljau evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut work = self.coeffs.clone();
        let n = work.len();
        for r in 1..n {
            for i in 0..n - r {
                work[i] = (1.0 - x) * work[i] + x * work[i + 1];
            }
        }
        work[0]
    }

    pub fn derivative(&self) -> Bernstein {
        let n = self.degree();
        if n == 0 {
            return Bernstein::constant(0.0);
        }
        let coeffs = self
            .coeffs
            .windows(2)
            .map(|w| n as f64 * (w[1] - w[0]))
            .collect();
        Bernstein { coeffs }
    }
}
