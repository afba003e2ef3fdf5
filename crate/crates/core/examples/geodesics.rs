//! Geodesics of the round sphere in the stereographic chart: shooting,
//! two-point joins, and the energy of a discrete path.

use ogc::builtins;
use ogc::geometry::{energy_nodes, DiscretePath, Point, Tangent};

fn main() -> ogc::Result<()> {
    let sphere = builtins::stereographic_sphere();
    let start = Point::new(-1.0, 0.0);

    // a great circle through the pole has chart speed 1 at the equator
    let seg = sphere.geodesic_shoot(&start, &Tangent::new(1.0, 0.0), 2.0, 512)?;
    println!("shot: end = ({:.9}, {:.9}), length = {:.9}", seg.end().x, seg.end().y, seg.length());
    println!("speed drift along the shot: {:.2e}", seg.speed_drift());

    let join = sphere.exp_join(&start, &Point::new(0.5, 0.5))?;
    println!("join: length = {:.9}, initial velocity = {:?}", join.length(), join.start_velocity());

    // discrete energy of a straight chart segment vs the true geodesic
    let straight = DiscretePath::from_fn(64, |s| start + (Point::new(0.5, 0.5) - start) * s)?;
    let exact = DiscretePath::new(join.points())?;
    println!(
        "energy: straight {:.9}, geodesic {:.9}",
        0.5 * energy_nodes(&sphere, &straight, 0, 64),
        0.5 * energy_nodes(&sphere, &exact, 0, exact.segments())
    );
    Ok(())
}
