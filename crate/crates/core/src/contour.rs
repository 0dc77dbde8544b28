//! Marching squares on a rectilinear grid.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One connected piece of a level set, as `(x, y)` vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Cell edge: `(row, col, vertical)`. A horizontal edge joins `(row, col)`
/// and `(row, col + 1)`; a vertical one joins `(row, col)` and `(row + 1, col)`.
type Edge = (usize, usize, bool);

/// Level-`level` contour of `z`, where `z[row][col]` sits at `(xs[col], ys[row])`.
///
/// A node counts as inside when its value is strictly above `level`. Cells
/// touching a non-finite value are skipped. Saddles are split by the cell mean.
pub fn marching_squares(xs: &[f64], ys: &[f64], z: &[Vec<f64>], level: f64) -> Result<Vec<Polyline>> {
    if z.len() != ys.len() || z.iter().any(|row| row.len() != xs.len()) {
        return Err(Error::Domain("contour grid shape does not match its axes"));
    }
    if xs.len() < 2 || ys.len() < 2 {
        return Ok(Vec::new());
    }
    let point = |e: Edge| -> (f64, f64) {
        let (r, c, vertical) = e;
        let (r2, c2) = if vertical { (r + 1, c) } else { (r, c + 1) };
        let (a, b) = (z[r][c], z[r2][c2]);
        let t = if b == a { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        (xs[c] + t * (xs[c2] - xs[c]), ys[r] + t * (ys[r2] - ys[r]))
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for r in 0..ys.len() - 1 {
        for c in 0..xs.len() - 1 {
            let v = [z[r][c], z[r][c + 1], z[r + 1][c + 1], z[r + 1][c]];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let bottom = (r, c, false);
            let right = (r, c + 1, true);
            let top = (r + 1, c, false);
            let left = (r, c, true);
            let idx = v.iter().enumerate().fold(0u8, |acc, (k, &x)| acc | (u8::from(x > level) << k));
            let centre_in = (v[0] + v[1] + v[2] + v[3]) / 4.0 > level;
            match idx {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_in {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_in {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(chain(&segments).into_iter().map(|(edges, closed)| Polyline {
        points: edges.into_iter().map(point).collect(),
        closed,
    }).collect())
}

/// Joins segments sharing an edge into maximal chains.
fn chain(segments: &[(Edge, Edge)]) -> Vec<(Vec<Edge>, bool)> {
    let mut at: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut edges = vec![start_edge];
        let (mut seg, mut from) = (start_seg, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == from { b } else { a };
            edges.push(next);
            if next == start_edge {
                return (edges, true);
            }
            match at[&next].iter().copied().find(|&s| !used[s]) {
                Some(s) => {
                    seg = s;
                    from = next;
                }
                None => return (edges, false),
            }
        }
    };

    // Open chains start at edges used by a single segment (grid border or a
    // skipped cell); what remains afterwards are loops.
    for (&edge, segs) in &at {
        if segs.len() == 1 && !used[segs[0]] {
            out.push(walk(segs[0], edge, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            out.push(walk(k, segments[k].0, &mut used));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, f: impl Fn(f64, f64) -> f64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let ys = xs.clone();
        let z = ys.iter().map(|&y| xs.iter().map(|&x| f(x, y)).collect()).collect();
        (xs, ys, z)
    }

    #[test]
    fn circle_is_one_closed_loop() {
        let (xs, ys, z) = grid(41, |x, y| x * x + y * y);
        let lines = marching_squares(&xs, &ys, &z, 0.25).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for &(x, y) in &lines[0].points {
            assert!(((x * x + y * y).sqrt() - 0.5).abs() < 5e-3);
        }
    }

    #[test]
    fn straight_line_is_open() {
        let (xs, ys, z) = grid(11, |x, _| x);
        let lines = marching_squares(&xs, &ys, &z, 0.05).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 11);
        assert!(lines[0].points.iter().all(|p| (p.0 - 0.05).abs() < 1e-12));
    }

    #[test]
    fn empty_and_shape_errors() {
        let (xs, ys, z) = grid(5, |_, _| 1.0);
        assert!(marching_squares(&xs, &ys, &z, 0.0).unwrap().is_empty());
        assert!(marching_squares(&xs[..4], &ys, &z, 0.0).is_err());
    }
}
