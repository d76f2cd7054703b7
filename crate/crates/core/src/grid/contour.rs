/// Total length (node units) of the marching-squares contour of `values`
/// at `level` on an `nx x ny` raster.
///
/// Crossings are placed by linear interpolation along cell edges. Saddle
/// cells are disambiguated by the cell-centre average.
pub fn contour_length(nx: usize, ny: usize, values: &[f64], level: f64) -> f64 {
    assert_eq!(values.len(), nx * ny);
    // corner offsets (dx, dy) in counter-clockwise order
    const CORNER: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];
    // corner k is adjacent to edges ADJ[k]; edge e joins corners e and e+1
    const ADJ: [(usize, usize); 4] = [(3, 0), (0, 1), (1, 2), (2, 3)];
    let mut total = 0.0;
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let v: [f64; 4] = CORNER.map(|(dx, dy)| values[(j + dy) * nx + i + dx]);
            let s: [bool; 4] = v.map(|x| x > level);
            if s.iter().all(|&b| b == s[0]) {
                continue;
            }
            let crossing = |e: usize| -> (f64, f64) {
                let (a, b) = (e, (e + 1) % 4);
                let t = (level - v[a]) / (v[b] - v[a]);
                let (ax, ay) = CORNER[a];
                let (bx, by) = CORNER[b];
                (
                    ax as f64 + t * (bx as f64 - ax as f64),
                    ay as f64 + t * (by as f64 - ay as f64),
                )
            };
            let seg = |e0: usize, e1: usize| -> f64 {
                let (x0, y0) = crossing(e0);
                let (x1, y1) = crossing(e1);
                (x1 - x0).hypot(y1 - y0)
            };
            let cut: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
            if cut.len() == 2 {
                total += seg(cut[0], cut[1]);
            } else {
                let centre = v.iter().sum::<f64>() / 4.0 > level;
                for k in 0..4 {
                    if s[k] != centre {
                        let (e0, e1) = ADJ[k];
                        total += seg(e0, e1);
                    }
                }
            }
        }
    }
    total
}
