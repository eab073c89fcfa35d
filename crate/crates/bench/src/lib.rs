//! Fixtures shared by the benchmarks.

use betaflow::{Region, Theta};

/// Points inside the Stirling domain away from the degeneracy loci.
pub fn stirling_points() -> Vec<Theta> {
    let mut pts = Vec::new();
    for i in 0..8 {
        for j in 0..8 {
            let a = 1.6 + 0.4 * i as f64;
            let b = 1.8 + 0.35 * j as f64;
            pts.push(Theta { a, b, c: 2.0 + 0.1 * (i + j) as f64 });
        }
    }
    pts
}

/// Points inside the exact-model domain, including small shapes.
pub fn exact_points() -> Vec<Theta> {
    stirling_points().into_iter().map(|t| Theta { a: t.a - 1.1, b: t.b * 2.0, c: t.c }).collect()
}

pub fn scan_region(resolution: usize) -> Region {
    Region::new([1.2; 3], [5.0; 3], [resolution; 3]).expect("fixed region is valid")
}
