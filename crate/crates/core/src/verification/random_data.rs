//! Random problem data for the maximum-principle tests.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use super::mms::rhombus_coordinates;
use crate::mesh::Point;
use crate::physics::{PhysicalData, ScalarFn, ViscosityModel};

/// `0.5 + 0.5 sin(w . x + phi) cos(v . x + psi)`, with values in `[0, 1]`.
fn random_unit_wave(rng: &mut impl Rng) -> ScalarFn {
    let w = Point::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
    let phi = rng.gen_range(0.0..2.0 * PI);
    let v = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let psi = rng.gen_range(0.0..2.0 * PI);
    Arc::new(move |x, _| 0.5 + 0.5 * (w.dot(x) + phi).sin() * (v.dot(x) + psi).cos())
}

fn random_coefficients(rng: &mut impl Rng) -> PhysicalData {
    let theta_minus = rng.gen_range(0.3..0.8);
    let theta_plus = rng.gen_range(1.5..3.0);
    let theta_star = rng.gen_range(theta_minus..theta_plus);
    PhysicalData {
        d_c: 10f64.powf(rng.gen_range(-3.0..0.0)),
        d_theta: 10f64.powf(rng.gen_range(-3.0..0.0)),
        lambda: rng.gen_range(0.0..2.0),
        theta_star,
        theta_minus,
        theta_plus,
        viscosity: ViscosityModel {
            mu0: rng.gen_range(0.5..2.0),
            mobility_ratio: rng.gen_range(0.5..10.0),
            theta_star,
            permeability: rng.gen_range(0.5..2.0),
        },
        ..PhysicalData::default()
    }
}

/// Data meeting every condition of the discrete maximum principle by
/// construction: `s = s_theta = 0`, `0 <= s_c <= lambda`, initial data in
/// range, and a random smooth body force (so the velocity is not zero).
///
/// Compatibility (`int s = 0`) together with the temperature conditions
/// forces `s = 0`, so no admissible data set has a nonzero fluid source.
pub fn random_max_principle_data(rng: &mut impl Rng) -> PhysicalData {
    let base = random_coefficients(rng);
    let lambda = base.lambda;
    let (tm, tp) = (base.theta_minus, base.theta_plus);
    let sc = random_unit_wave(rng);
    let c0 = random_unit_wave(rng);
    let th = random_unit_wave(rng);
    let (a, b) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let (w1, w2) = (
        Point::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)),
        Point::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)),
    );
    let offset = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    PhysicalData {
        s_c: Arc::new(move |x, t| lambda * sc(x, t)),
        f: Arc::new(move |x, _| offset + Point::new(a * w1.dot(x).sin(), b * w2.dot(x).cos())),
        c0,
        theta0: Arc::new(move |x, t| tm + (tp - tm) * th(x, t)),
        ..base
    }
}

/// Data with a signed, zero-mean fluid source on the rhombus of side
/// `side`. The concentration conditions hold (`lambda >= -2 min s`,
/// `0 <= s_c <= 2 s + lambda`); the temperature conditions cannot.
pub fn random_signed_source_data(rng: &mut impl Rng, side: f64) -> PhysicalData {
    let base = random_coefficients(rng);
    let amp = rng.gen_range(0.2..2.0);
    let m = f64::from(rng.gen_range(1..4));
    let s: ScalarFn = Arc::new(move |x, _| {
        let (a, _) = rhombus_coordinates(x);
        amp * (2.0 * PI * m * a / side).cos()
    });
    let lambda = 2.0 * amp + rng.gen_range(0.05..1.0);
    let sc = random_unit_wave(rng);
    let s2 = s.clone();
    PhysicalData {
        lambda,
        s,
        s_c: Arc::new(move |x, t| 0.9 * sc(x, t) * (2.0 * s2(x, t) + lambda).max(0.0)),
        c0: random_unit_wave(rng),
        source_mean_correction: true,
        ..base
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::mesh::generate_equilateral_mesh;
    use crate::physics::validate_source_conditions;

    #[test]
    fn generated_data_satisfies_the_conditions() {
        let mesh = generate_equilateral_mesh(8, 8, 1.0 / 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let data = random_max_principle_data(&mut rng);
            data.validate().unwrap();
            let report = validate_source_conditions(&data, &mesh);
            assert!(report.max_principle_guaranteed() && report.compatible);
        }
    }

    #[test]
    fn signed_source_data_satisfies_the_concentration_conditions() {
        let mesh = generate_equilateral_mesh(8, 8, 1.0 / 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let data = random_signed_source_data(&mut rng, 1.0);
            let report = validate_source_conditions(&data, &mesh);
            assert!(report.compatible);
            assert!(report.triangles.iter().all(|t| t.c_lower && t.c_upper && t.initial_c));
        }
    }
}
