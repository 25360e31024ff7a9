use epsim_core::fields::{Grid3, RealField, transform_forward};
fn main() {
    let g = Grid3::new(64, 64.0).unwrap();
    let f = RealField::from_fn(g, |x| (x[0]*0.3).sin()*(x[1]*0.2).cos()+x[2]*0.01);
    let t0 = std::time::Instant::now();
    let mut acc = 0.0;
    for _ in 0..50 {
        let fh = transform_forward(&f);
        acc += fh.data[1].re;
    }
    println!("n=64 forward: {:.2} ms each (acc {acc:.3e})", t0.elapsed().as_secs_f64()*1000.0/50.0);
    let g32 = Grid3::new(32, 32.0).unwrap();
    let f32v = RealField::from_fn(g32, |x| (x[0]*0.3).sin());
    let t0 = std::time::Instant::now();
    for _ in 0..200 { let fh = transform_forward(&f32v); acc += fh.data[1].re; }
    println!("n=32 forward: {:.3} ms each (acc {acc:.3e})", t0.elapsed().as_secs_f64()*1000.0/200.0);
}
