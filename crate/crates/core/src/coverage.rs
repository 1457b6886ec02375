//! Exact area coverage of grid cells by disks and strips, used for
//! anti-aliased mask edges.

/// Fraction of the cell `[x0, x1] x [y0, y1]` covered by the disk of radius
/// `r` centered at the origin.
pub(crate) fn disk_cell_fraction(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let area = (x1 - x0) * (y1 - y0);
    if area <= 0.0 {
        return 0.0;
    }
    // Nearest and farthest cell points from the center.
    let near_x = if x0 > 0.0 { x0 } else if x1 < 0.0 { -x1 } else { 0.0 };
    let near_y = if y0 > 0.0 { y0 } else if y1 < 0.0 { -y1 } else { 0.0 };
    if near_x * near_x + near_y * near_y >= r * r {
        return 0.0;
    }
    let far_x = x0.abs().max(x1.abs());
    let far_y = y0.abs().max(y1.abs());
    if far_x * far_x + far_y * far_y <= r * r {
        return 1.0;
    }
    let covered = clipped_chord_integral(x0, x1, r, y0, y1) + clipped_chord_integral(x0, x1, r, -y1, -y0);
    (covered / area).clamp(0.0, 1.0)
}

/// `integral over [u0, u1] of clamp(s(u), a, b) du` with `s(u) = sqrt(r^2 - u^2)`
/// (zero for |u| > r) and `a <= b`.
///
/// Covered area of a cell is `I(y0, y1) + I(-y1, -y0)`, since
/// `clamp(-s, y0, y1) = -clamp(s, -y1, -y0)`.
fn clipped_chord_integral(u0: f64, u1: f64, r: f64, a: f64, b: f64) -> f64 {
    let mut cuts = vec![u0, u1];
    let mut push = |u: f64| {
        if u > u0 && u < u1 {
            cuts.push(u);
        }
    };
    push(-r);
    push(r);
    for c in [a, b] {
        if c > 0.0 && c < r {
            let u = (r * r - c * c).sqrt();
            push(u);
            push(-u);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let s = |u: f64| (r * r - u * u).max(0.0).sqrt();
    let antiderivative = |u: f64| {
        let u = u.clamp(-r, r);
        0.5 * (u * s(u) + r * r * (u / r).asin())
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let value = if m.abs() >= r {
            0.0f64.clamp(a, b) * (q - p)
        } else {
            let sm = s(m);
            if sm <= a {
                a * (q - p)
            } else if sm >= b {
                b * (q - p)
            } else {
                antiderivative(q) - antiderivative(p)
            }
        };
        total += value;
    }
    total
}

/// Length of the overlap of `[a0, a1]` and `[b0, b1]`.
#[inline]
pub(crate) fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}
