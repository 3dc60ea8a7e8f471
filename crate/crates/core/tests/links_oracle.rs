//! Link families against finite differences and a brute-force cost scan.

use condexp::{FamilyId, LinkFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn families() -> Vec<LinkFamily> {
    vec![
        LinkFamily::a1(),
        LinkFamily::a2(),
        LinkFamily::a3(),
        LinkFamily::b1(0.0).unwrap(),
        LinkFamily::b2(0.5).unwrap(),
        LinkFamily::c1(-0.01, 1.01).unwrap(),
        LinkFamily::c2(1.0, 5.0).unwrap(),
    ]
}

/// A target strictly inside the range, away from the ends.
fn random_target(link: &LinkFamily, rng: &mut ChaCha8Rng) -> f64 {
    match link.id() {
        FamilyId::A1 | FamilyId::A2 | FamilyId::A3 => rng.random_range(-5.0..5.0),
        FamilyId::B1 | FamilyId::B2 => link.a() + rng.random_range(0.01..5.0),
        FamilyId::C1 | FamilyId::C2 => {
            let w = link.b() - link.a();
            link.a() + w * rng.random_range(0.01..0.99)
        }
    }
}

fn central(f: impl Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    (f(z + h) - f(z - h)) / (2.0 * h)
}

#[test]
fn derivative_identities_hold_for_every_family() {
    let h = 1e-6;
    for link in families() {
        for i in (-40..=40).filter(|&i| i != 0) {
            let z = 0.1 * i as f64;
            let dpsi = central(|t| link.psi(t), z, h);
            let dphi = central(|t| link.phi(t), z, h);
            assert!(
                (dpsi - link.rho(z)).abs() <= 1e-5 * (1.0 + link.rho(z).abs()),
                "{link}: psi' {dpsi} vs rho {} at {z}",
                link.rho(z)
            );
            let target = -link.omega(z) * link.rho(z);
            assert!(
                (dphi - target).abs() <= 1e-5 * (1.0 + target.abs()),
                "{link}: phi' {dphi} vs -omega rho {target} at {z}"
            );
            assert!(link.rho(z) < 0.0);
            assert!(link.omega(z + 1e-3) > link.omega(z));
        }
    }
}

#[test]
fn minimizer_matches_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let step = 1e-4;
    for link in families() {
        for _ in 0..100 {
            let r = random_target(&link, &mut rng);
            let u = link.scalar_minimizer(r).unwrap();
            assert!((link.omega(u) - r).abs() <= 1e-6, "{link}: omega(u*) != {r}");
            let cost = |v: f64| link.phi(v) + r * link.psi(v);
            let cells = 20_000;
            let mut best = (f64::INFINITY, 0.0);
            for k in -cells..=cells {
                let v = u + k as f64 * step;
                let c = cost(v);
                if c < best.0 {
                    best = (c, v);
                }
            }
            assert!(
                (best.1 - u).abs() <= step * (1.0 + 1e-9),
                "{link}, r={r}: scan minimum at {} but minimizer {u}",
                best.1
            );
        }
    }
}
