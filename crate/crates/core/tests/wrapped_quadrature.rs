//! The wrapped normal integrates to one over the hyperboloid.

use hyprec::geometry::lorentz::{self, HyperboloidPoint};
use hyprec::geometry::TangentVector;
use hyprec::models::WrappedNormal;
use hyprec::Curvature;

/// Midpoint rule in geodesic polar coordinates around the mean, where the
/// area element on the unit-curvature sheet is `sinh r dr dθ`.
fn total_mass(dist: &WrappedNormal, k: Curvature, r_max: f64) -> f64 {
    let (nr, nt) = (2000, 128);
    let mu = dist.mean();
    let e1 = lorentz::parallel_transport(k, &lorentz::origin(k, 2), mu.coords(), &[1.0, 0.0, 0.0]);
    let e2 = lorentz::parallel_transport(k, &lorentz::origin(k, 2), mu.coords(), &[0.0, 1.0, 0.0]);
    let (dr, dt) = (r_max / nr as f64, std::f64::consts::TAU / nt as f64);
    let mut mass = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        let mut ring = 0.0;
        for j in 0..nt {
            let t = (j as f64 + 0.5) * dt;
            let u: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| r * (t.cos() * a + t.sin() * b)).collect();
            let tv = TangentVector::at_hyperboloid(mu.clone(), u).unwrap();
            let z = mu.expmap(&tv).unwrap();
            ring += dist.logpdf(&z).unwrap().exp();
        }
        mass += ring * r.sinh() * dr * dt;
    }
    mass
}

#[test]
fn density_integrates_to_one() {
    let k = Curvature::new(1.0).unwrap();
    let o = HyperboloidPoint::origin(2, k).unwrap();
    let off = {
        let tv = TangentVector::at_hyperboloid(o.clone(), vec![0.6, -0.4, 0.0]).unwrap();
        o.expmap(&tv).unwrap()
    };
    for mean in [o, off] {
        for sigma in [0.5, 1.0, 2.0] {
            let dist = WrappedNormal::new(mean.clone(), vec![sigma; 2]).unwrap();
            let mass = total_mass(&dist, k, 10.0 * sigma);
            assert!((mass - 1.0).abs() < 0.01, "σ = {sigma}, μ = {:?}: {mass}", mean.coords());
        }
    }
}
