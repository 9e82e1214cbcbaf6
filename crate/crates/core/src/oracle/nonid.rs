//! The agreement-probability map of a noisy three-vertex star, used to argue
//! that noisy observations of a hidden vertex do not determine its couplings.

/// Default central-difference step for [`nonid_jacobian_det`].
pub const NONID_FD_STEP: f64 = 1e-5;

fn h(beta: f64) -> f64 {
    // e^β / (e^β + e^{-β})
    1.0 / (1.0 + (-2.0 * beta).exp())
}

fn agreement(a: f64, b: f64) -> f64 {
    h(a) * h(b) + h(-a) * h(-b)
}

/// `(p_{1'2}, p_{1'3}, p_{23})` where `p_ij = h(β_i)h(β_j) + h(-β_i)h(-β_j)`.
pub fn nonid_map(b11p: f64, b12: f64, b13: f64) -> (f64, f64, f64) {
    (agreement(b11p, b12), agreement(b11p, b13), agreement(b12, b13))
}

pub fn nonid_jacobian_det(point: (f64, f64, f64)) -> f64 {
    nonid_jacobian_det_with_step(point, NONID_FD_STEP)
}

/// Jacobian determinant of [`nonid_map`] by central differences.
pub fn nonid_jacobian_det_with_step(point: (f64, f64, f64), step: f64) -> f64 {
    let x = [point.0, point.1, point.2];
    let eval = |y: [f64; 3]| {
        let p = nonid_map(y[0], y[1], y[2]);
        [p.0, p.1, p.2]
    };
    let mut j = [[0.0; 3]; 3];
    for col in 0..3 {
        let (mut up, mut down) = (x, x);
        up[col] += step;
        down[col] -= step;
        let (fu, fd) = (eval(up), eval(down));
        for row in 0..3 {
            j[row][col] = (fu[row] - fd[row]) / (2.0 * step);
        }
    }
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}
