//! Smallest enclosing circles, and how a radius floor turns them into ROIs.

use aquaplan::geo::{dist, smallest_enclosing_circle, to_geo, GeoPoint, LocalPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> aquaplan::Result<()> {
    let triangle = [LocalPoint::new(0.0, 0.0), LocalPoint::new(30.0, 0.0), LocalPoint::new(12.0, 20.0)];
    let c = smallest_enclosing_circle(&triangle)?;
    println!("triangle: center ({:.2}, {:.2}) r = {:.3} m", c.center.east, c.center.north, c.radius);

    // Obtuse triangle: the long side is a diameter.
    let obtuse = [LocalPoint::new(0.0, 0.0), LocalPoint::new(40.0, 0.0), LocalPoint::new(20.0, 3.0)];
    let c = smallest_enclosing_circle(&obtuse)?;
    println!("obtuse:   center ({:.2}, {:.2}) r = {:.3} m", c.center.east, c.center.north, c.radius);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cloud: Vec<LocalPoint> =
        (0..500).map(|_| LocalPoint::new(rng.random_range(-50.0..50.0), rng.random_range(-20.0..20.0))).collect();
    let c = smallest_enclosing_circle(&cloud)?;
    let on_rim = cloud.iter().filter(|p| (dist(**p, c.center) - c.radius).abs() < 1e-9).count();
    println!("500 points: r = {:.3} m, {on_rim} on the rim", c.radius);

    let origin = GeoPoint::new(22.3364, 114.2655)?;
    let g = to_geo(c.center, origin)?;
    println!("center at {:.6}, {:.6}", g.lat, g.lon);

    let single = smallest_enclosing_circle(&[LocalPoint::new(5.0, 5.0)])?;
    let min_radius = 5.0;
    println!("lone site: r = {} m, ROI radius {} m", single.radius, single.radius.max(min_radius));
    Ok(())
}
