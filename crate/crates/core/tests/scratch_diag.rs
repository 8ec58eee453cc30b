use scoopsim::scene::{fill_and_settle, surface_roughness, ContainerSpec, GranularSpec};

#[test]
fn dump_fill_profile() {
    let c = ContainerSpec::hemisphere(67.0, 45.0);
    let g = GranularSpec::preset("flour").unwrap();
    let w = fill_and_settle(&c, &g, 7).unwrap();
    eprintln!("n = {}", w.pos.len());
    eprintln!("roughness = {:.3}", surface_roughness(&w, 12));
    let x_lo = w.pos.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x_hi = w.pos.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    eprintln!("x span {:.2}..{:.2}", x_lo, x_hi);
    let bins = 24;
    let mut top = vec![f64::NEG_INFINITY; bins];
    for p in &w.pos {
        let b = (((p.x - x_lo) / (x_hi - x_lo) * bins as f64) as usize).min(bins - 1);
        top[b] = top[b].max(p.y);
    }
    for (b, t) in top.iter().enumerate() {
        eprintln!("bin {:2} x {:6.2} top {:7.2}", b, x_lo + (b as f64 + 0.5) * (x_hi - x_lo) / bins as f64, t);
    }
    let (rim_a, rim_b) = c.rim_points();
    eprintln!("rim points {:?} {:?} mouth center {:?} axis {:?}", rim_a, rim_b, c.world_pose, c.axis());
}
