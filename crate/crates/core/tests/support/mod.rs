//! Shared helpers for the integration tests: a fixed-point evaluator with
//! 192 fractional bits for certifying closed-form constants, a brute-force
//! domination oracle that never looks at the hull, and a random game
//! generator.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use pm_core::games::{Game, Rational};

pub const FRAC_BITS: u32 = 192;

/// Fixed-point number value/2^192. The fractional resolution leaves almost
/// 140 guard bits beyond a double, far more than the 50 bits the parameter
/// certification needs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx(BigInt);

impl Fx {
    pub fn from_u64(n: u64) -> Self {
        Fx(BigInt::from(n) << FRAC_BITS as usize)
    }

    pub fn from_ratio(num: i64, den: u64) -> Self {
        Fx((BigInt::from(num) << FRAC_BITS as usize) / BigInt::from(den))
    }

    /// Exact embedding of a finite double (no rounding: doubles are binary
    /// rationals with at most 52 fractional bits at this magnitude).
    pub fn from_f64(x: f64) -> Self {
        let r = BigRational::from_float(x).expect("finite input");
        Fx((r.numer() << FRAC_BITS as usize) / r.denom())
    }

    pub fn add(&self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> FRAC_BITS as usize)
    }

    pub fn div(&self, o: &Fx) -> Fx {
        Fx((&self.0 << FRAC_BITS as usize) / &o.0)
    }

    pub fn mul_int(&self, k: i64) -> Fx {
        Fx(&self.0 * BigInt::from(k))
    }

    pub fn div_int(&self, k: i64) -> Fx {
        Fx(&self.0 / BigInt::from(k))
    }

    pub fn sqrt(&self) -> Fx {
        assert!(self.0 >= BigInt::zero(), "sqrt needs a nonnegative argument");
        Fx((self.0.clone() << FRAC_BITS as usize).sqrt())
    }

    /// Natural log of 2 via 2 atanh(1/3).
    pub fn ln2() -> Fx {
        atanh_series(&Fx::from_ratio(1, 3)).mul_int(2)
    }

    /// Natural log by power-of-two reduction and the atanh series: write
    /// self = m 2^k with m in [0.75, 1.5), then ln m = 2 atanh((m-1)/(m+1)).
    pub fn ln(&self) -> Fx {
        assert!(self.0 > BigInt::zero(), "ln needs a positive argument");
        let mut k = self.0.bits() as i64 - 1 - i64::from(FRAC_BITS);
        let mut m = if k >= 0 {
            &self.0 >> k as usize
        } else {
            &self.0 << (-k) as usize
        };
        let three_halves = BigInt::from(3) << (FRAC_BITS - 1) as usize;
        if m >= three_halves {
            m >>= 1usize;
            k += 1;
        }
        let m = Fx(m);
        let one = Fx::from_u64(1);
        let z = m.sub(&one).div(&m.add(&one));
        let ln_m = atanh_series(&z).mul_int(2);
        ln_m.add(&Fx::ln2().mul_int(k))
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.0.clone(), BigInt::one() << FRAC_BITS as usize)
    }

    /// The double nearest to this value, found by exact comparison among the
    /// float conversion and its immediate neighbours.
    pub fn to_f64_nearest(&self) -> f64 {
        let exact = self.to_rational();
        let approx = exact.to_f64().expect("value in double range");
        let mut candidates = vec![approx];
        let mut down = approx;
        let mut up = approx;
        for _ in 0..2 {
            down = step_f64(down, false);
            up = step_f64(up, true);
            candidates.push(down);
            candidates.push(up);
        }
        candidates
            .into_iter()
            .min_by_key(|&c| (BigRational::from_float(c).expect("finite") - &exact).abs())
            .expect("candidate list is nonempty")
    }
}

/// atanh(z) = z + z^3/3 + z^5/5 + ..., truncated once terms fall below the
/// fixed-point resolution; |z| stays <= 1/3 at every call site.
fn atanh_series(z: &Fx) -> Fx {
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut sum = z.clone();
    let mut j = 3i64;
    loop {
        term = term.mul(&z2);
        if term.0.magnitude().bits() <= 4 {
            return sum;
        }
        sum = sum.add(&term.div_int(j));
        j += 2;
    }
}

/// Adjacent double in the given direction, for positive finite inputs.
fn step_f64(x: f64, up: bool) -> f64 {
    assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

/// Distance in units in the last place between two positive finite doubles.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    assert!(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite());
    a.to_bits().abs_diff(b.to_bits())
}

/// |value - oracle| / |oracle| with the subtraction done exactly.
pub fn rel_err(value: f64, oracle: &Fx) -> f64 {
    let v = BigRational::from_float(value).expect("finite value");
    let o = oracle.to_rational();
    ((v - &o).abs() / o.abs()).to_f64().expect("small ratio")
}

/// The leaf tuning constants evaluated in fixed point from the same double
/// inputs the production code receives.
pub struct OracleLeafParameters {
    pub beta: Fx,
    pub gamma: Fx,
    pub eta_one_armed: Fx,
    pub eta_full_info: Fx,
}

pub fn oracle_leaf_parameters(t_horizon: u64, delta: f64) -> OracleLeafParameters {
    let two = Fx::from_u64(2);
    let t = Fx::from_u64(t_horizon);
    let beta = two
        .div(&Fx::from_f64(delta))
        .ln()
        .div(&two.mul(&t))
        .sqrt();
    let gamma = Fx::from_u64(8).mul(&beta).div(&Fx::from_u64(3).add(&beta));
    let eta_one_armed = gamma.div_int(4);
    let eta_full_info = Fx::from_u64(8).mul(&Fx::ln2()).div(&t).sqrt();
    OracleLeafParameters {
        beta,
        gamma,
        eta_one_armed,
        eta_full_info,
    }
}

/// Per-action domination flags found by evaluating expected losses at a
/// finite set of frequencies instead of building the hull.
pub struct DominationOracle {
    pub dominated: Vec<bool>,
    pub degenerate: Vec<bool>,
}

/// Brute-force oracle. The candidate frequencies are the endpoints, every
/// pairwise crossing of loss lines inside [0, 1], and the midpoints between
/// consecutive candidates; the strict order of the (distinct) lines is
/// constant between crossings, so unique minimality anywhere is witnessed
/// at one of these points.
pub fn brute_force_domination(game: &Game) -> DominationOracle {
    let n = game.n_actions();
    let mut cands = vec![Rational::zero(), Rational::one()];
    for i in 0..n {
        for j in (i + 1)..n {
            let d0 = game.loss(i, 0) - game.loss(j, 0);
            let d1 = game.loss(j, 1) - game.loss(i, 1);
            let den = &d0 + &d1;
            if den.is_zero() {
                continue;
            }
            let p = d0 / den;
            if p >= Rational::zero() && p <= Rational::one() {
                cands.push(p);
            }
        }
    }
    cands.sort();
    cands.dedup();
    let two = Rational::from_integer(2.into());
    let mids: Vec<Rational> = cands.windows(2).map(|w| (&w[0] + &w[1]) / &two).collect();
    cands.extend(mids);

    let mut uniquely_min = vec![false; n];
    let mut touches = vec![false; n];
    for p in &cands {
        let losses: Vec<Rational> = (0..n).map(|i| game.expected_loss(i, p)).collect();
        let min = losses.iter().min().expect("at least one action").clone();
        for i in 0..n {
            if losses[i] != min {
                continue;
            }
            touches[i] = true;
            let unique = (0..n)
                .all(|j| j == i || game.loss_row(j) == game.loss_row(i) || losses[j] > min);
            if unique {
                uniquely_min[i] = true;
            }
        }
    }
    DominationOracle {
        dominated: uniquely_min.iter().map(|&u| !u).collect(),
        degenerate: (0..n).map(|i| !uniquely_min[i] && touches[i]).collect(),
    }
}

/// Random game with up to six actions and loss denominators up to 8; the
/// three feedback symbols make about two thirds of the actions revealing.
pub fn random_game(rng: &mut ChaCha8Rng) -> Game {
    let n = rng.gen_range(1..=6);
    let mut loss = Vec::with_capacity(n);
    let mut feedback = Vec::with_capacity(n);
    let symbols = ["u", "v", "w"];
    for _ in 0..n {
        let row: [Rational; 2] = std::array::from_fn(|_| {
            Rational::new(rng.gen_range(-8i64..=8).into(), rng.gen_range(1i64..=8).into())
        });
        loss.push(row);
        feedback.push([
            symbols[rng.gen_range(0..symbols.len())].to_string(),
            symbols[rng.gen_range(0..symbols.len())].to_string(),
        ]);
    }
    Game::new(loss, feedback).expect("generated matrices are well formed")
}
