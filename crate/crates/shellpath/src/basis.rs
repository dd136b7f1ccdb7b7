//! Limit-surface basis functions and their parametric derivatives.
//!
//! Regular patches are bi-cubic uniform B-splines over the 16-point stencil,
//! `N_a(t1, t2) = N_{a%4}(t1) * N_{a/4}(t2)`. Patches touching one
//! extraordinary vertex are evaluated by re-parameterizing onto regular
//! sub-patches of the once-subdivided neighbourhood: the parameter square is
//! doubled towards the extraordinary corner until the point lands in one of
//! the three regular sub-quadrants, then the tensor-product basis applies
//! through a chain of subdivision matrices. Recursion depth is capped; the
//! innermost ring falls back on the deepest regular sub-patch and flags the
//! result.
//!
//! Basis weights depend only on patch topology (valence), never on control
//! point positions, so per-valence subdivision tables are cached globally.

use crate::mesh::{PatchClass, PatchStencil};
use nalgebra::{DMatrix, RowDVector};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("parameter {0} outside [0, 1]")]
    Domain(f64),
    #[error("stencil slot count {got} does not match class (expected {expected})")]
    SlotMismatch { got: usize, expected: usize },
}

/// Basis values and first/second parametric derivatives at one parameter
/// point, ordered like the stencil slots.
#[derive(Debug, Clone)]
pub struct PatchBasis {
    pub theta: (f64, f64),
    pub values: Vec<f64>,
    /// (d/dt1, d/dt2) per slot.
    pub d1: Vec<[f64; 2]>,
    /// (d2/dt1^2, d2/dt1 dt2, d2/dt2^2) per slot.
    pub d2: Vec<[f64; 3]>,
    /// Set when the recursion depth cap forced extrapolation near the
    /// extraordinary corner (derivatives are only C^1 there).
    pub degraded: bool,
}

/// Uniform cubic B-spline segment basis: values, first and second
/// derivatives of the four overlapping segments at `t` in `[0, 1]`.
pub fn bspline_basis_row(t: f64) -> Result<([f64; 4], [f64; 4], [f64; 4]), BasisError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(BasisError::Domain(t));
    }
    Ok(bspline_row_unchecked(t))
}

fn bspline_row_unchecked(t: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let omt = 1.0 - t;
    let values = [
        omt * omt * omt / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ];
    let d1 = [
        -omt * omt / 2.0,
        (3.0 * t2 - 4.0 * t) / 2.0,
        (-3.0 * t2 + 2.0 * t + 1.0) / 2.0,
        t2 / 2.0,
    ];
    let d2 = [omt, 3.0 * t - 2.0, -3.0 * t + 1.0, t];
    (values, d1, d2)
}

/// Bi-cubic tensor-product rows over a 4x4 grid (row-major `a = 4 j + i`).
fn regular_rows(t1: f64, t2: f64) -> (RowDVector<f64>, RowDVector<f64>, RowDVector<f64>, RowDVector<f64>, RowDVector<f64>, RowDVector<f64>) {
    let (u, du, ddu) = bspline_row_unchecked(t1);
    let (v, dv, ddv) = bspline_row_unchecked(t2);
    let mut n = RowDVector::zeros(16);
    let mut n1 = RowDVector::zeros(16);
    let mut n2 = RowDVector::zeros(16);
    let mut n11 = RowDVector::zeros(16);
    let mut n12 = RowDVector::zeros(16);
    let mut n22 = RowDVector::zeros(16);
    for j in 0..4 {
        for i in 0..4 {
            let a = 4 * j + i;
            n[a] = u[i] * v[j];
            n1[a] = du[i] * v[j];
            n2[a] = u[i] * dv[j];
            n11[a] = ddu[i] * v[j];
            n12[a] = du[i] * dv[j];
            n22[a] = u[i] * ddv[j];
        }
    }
    (n, n1, n2, n11, n12, n22)
}

/// Evaluate the patch basis at `(t1, t2)` in `[0, 1]^2`.
pub fn eval_patch_basis(
    stencil: &PatchStencil,
    t1: f64,
    t2: f64,
) -> Result<PatchBasis, BasisError> {
    if !(0.0..=1.0).contains(&t1) {
        return Err(BasisError::Domain(t1));
    }
    if !(0.0..=1.0).contains(&t2) {
        return Err(BasisError::Domain(t2));
    }
    match stencil.class {
        PatchClass::Regular => {
            if stencil.slots.len() != 16 {
                return Err(BasisError::SlotMismatch {
                    got: stencil.slots.len(),
                    expected: 16,
                });
            }
            let (n, n1, n2, n11, n12, n22) = regular_rows(t1, t2);
            Ok(PatchBasis {
                theta: (t1, t2),
                values: n.iter().copied().collect(),
                d1: (0..16).map(|a| [n1[a], n2[a]]).collect(),
                d2: (0..16).map(|a| [n11[a], n12[a], n22[a]]).collect(),
                degraded: false,
            })
        }
        PatchClass::Irregular { valence } => {
            let expected = 2 * valence + 8;
            if stencil.slots.len() != expected {
                return Err(BasisError::SlotMismatch {
                    got: stencil.slots.len(),
                    expected,
                });
            }
            Ok(eval_irregular(valence, t1, t2))
        }
    }
}

pub const MAX_SUBDIVISION_DEPTH: u32 = 10;

fn eval_irregular(valence: usize, t1: f64, t2: f64) -> PatchBasis {
    let tables = irregular_tables(valence);
    let m = 2 * valence + 8;

    // Smallest number of doublings that moves the point out of the corner
    // cell: 2^level * max(t1, t2) >= 1.
    let mx = t1.max(t2);
    let mut degraded = false;
    let level = if mx <= 0.0 {
        degraded = true;
        MAX_SUBDIVISION_DEPTH
    } else {
        let mut l = (-mx.log2()).ceil().max(1.0) as u32;
        while (l as f64).exp2() * mx < 1.0 {
            l += 1;
        }
        if l > MAX_SUBDIVISION_DEPTH {
            degraded = true;
            MAX_SUBDIVISION_DEPTH
        } else {
            l
        }
    };

    let scale = (1u64 << level) as f64;
    let s1 = t1 * scale;
    let s2 = t2 * scale;
    // Quadrant within the deepest cell; on fallback the local coordinates
    // go negative, extrapolating the sub-patch polynomial.
    let (quadrant, u1, u2) = if s1 >= 1.0 && s2 < 1.0 {
        (0, s1 - 1.0, s2)
    } else if s1 < 1.0 && s2 >= 1.0 {
        (1, s1, s2 - 1.0)
    } else {
        (2, s1 - 1.0, s2 - 1.0)
    };

    // On the depth-cap fallback the local coordinates are negative; the
    // polynomial extrapolates smoothly over that last sliver.
    let (n, n1, n2, n11, n12, n22) = regular_rows(u1.max(-1.0), u2.max(-1.0));

    let pick = &tables.grids[quadrant];
    let mut row = n * pick;
    let mut row1 = n1 * pick;
    let mut row2 = n2 * pick;
    let mut row11 = n11 * pick;
    let mut row12 = n12 * pick;
    let mut row22 = n22 * pick;
    for _ in 1..level {
        row *= &tables.next;
        row1 *= &tables.next;
        row2 *= &tables.next;
        row11 *= &tables.next;
        row12 *= &tables.next;
        row22 *= &tables.next;
    }

    let c1 = scale;
    let c2 = scale * scale;
    PatchBasis {
        theta: (t1, t2),
        values: row.iter().copied().collect(),
        d1: (0..m).map(|a| [c1 * row1[a], c1 * row2[a]]).collect(),
        d2: (0..m)
            .map(|a| [c2 * row11[a], c2 * row12[a], c2 * row22[a]])
            .collect(),
        degraded,
    }
}

/// Subdivision tables for one valence: the self-map of the local 2n+8
/// configuration and the three 16-point extraction grids.
struct IrregularTables {
    next: DMatrix<f64>,
    grids: [DMatrix<f64>; 3],
}

fn irregular_tables(valence: usize) -> Arc<IrregularTables> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<IrregularTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(valence)
        .or_insert_with(|| Arc::new(build_tables(valence)))
        .clone()
}

/// Refined point of the local configuration, defined by a Catmull-Clark mask
/// over the 2n+8 slots.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Refined {
    Vertex(usize),
    Edge(usize, usize),
    Face(usize),
}

/// Build the per-valence tables by applying the interior Catmull-Clark masks
/// to the local configuration: n fan faces around the extraordinary vertex
/// plus the five far faces of the remaining regular block.
fn build_tables(n: usize) -> IrregularTables {
    assert!(n >= 3, "valence must be at least 3");
    let m = 2 * n + 8;
    let ev = 0usize;
    let e = |k: usize| 1 + 2 * (k % n);
    let d = |k: usize| 2 + 2 * (k % n);
    let (b, c, dd) = (e(0), d(0), e(1));
    let d1 = d(1);
    let d_last = d(n - 1);
    let (p30, p31, p32, p33, p23, p13, p03) =
        (2 * n + 1, 2 * n + 2, 2 * n + 3, 2 * n + 4, 2 * n + 5, 2 * n + 6, 2 * n + 7);

    // Faces as cyclic quads of slot indices. Fan faces first, far faces after.
    let mut faces: Vec<[usize; 4]> = (0..n).map(|k| [ev, e(k), d(k), e(k + 1)]).collect();
    let ff0 = faces.len();
    faces.push([b, d_last, p30, p31]);
    let ff1 = faces.len();
    faces.push([b, p31, p32, c]);
    let ff2 = faces.len();
    faces.push([c, p32, p33, p23]);
    let ff3 = faces.len();
    faces.push([dd, c, p23, p13]);
    let ff4 = faces.len();
    faces.push([d1, dd, p13, p03]);

    // Adjacent faces for each edge we need a point for.
    let mut edge_faces: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
    let mut add_edge = |a: usize, bb: usize, f0: usize, f1: usize| {
        let key = if a < bb { (a, bb) } else { (bb, a) };
        edge_faces.insert(key, [f0, f1]);
    };
    for k in 0..n {
        add_edge(ev, e(k), (k + n - 1) % n, k);
    }
    add_edge(b, c, 0, ff1);
    add_edge(c, dd, 0, ff3);
    add_edge(b, d_last, n - 1, ff0);
    add_edge(b, p31, ff0, ff1);
    add_edge(c, p32, ff1, ff2);
    add_edge(c, p23, ff2, ff3);
    add_edge(dd, p13, ff3, ff4);
    add_edge(dd, d1, 1, ff4);

    let face_row = |f: usize| -> RowDVector<f64> {
        let mut r = RowDVector::zeros(m);
        for &v in &faces[f] {
            r[v] += 0.25;
        }
        r
    };
    let edge_row = |a: usize, bb: usize| -> RowDVector<f64> {
        let key = if a < bb { (a, bb) } else { (bb, a) };
        let [f0, f1] = edge_faces[&key];
        let mut r = RowDVector::zeros(m);
        r[a] += 0.25;
        r[bb] += 0.25;
        r += face_row(f0) / 4.0;
        r += face_row(f1) / 4.0;
        r
    };
    // Vertex update (valence v): (Q + 2 R + (v - 3) P) / v with Q the average
    // of adjacent face points and R the average of incident edge midpoints.
    let vertex_row = |v: usize, fcs: &[usize], nbrs: &[usize]| -> RowDVector<f64> {
        let val = nbrs.len() as f64;
        let mut r = RowDVector::zeros(m);
        let mut q = RowDVector::zeros(m);
        for &f in fcs {
            q += face_row(f);
        }
        q /= fcs.len() as f64;
        let mut rr = RowDVector::zeros(m);
        for &w in nbrs {
            rr[v] += 0.5;
            rr[w] += 0.5;
        }
        rr /= val;
        r += q;
        r += rr * 2.0;
        r[v] += val - 3.0;
        r / val
    };

    let row_for = |p: Refined| -> RowDVector<f64> {
        match p {
            Refined::Vertex(v) => {
                if v == ev {
                    let fcs: Vec<usize> = (0..n).collect();
                    let nbrs: Vec<usize> = (0..n).map(e).collect();
                    vertex_row(ev, &fcs, &nbrs)
                } else if v == b {
                    vertex_row(b, &[0, n - 1, ff0, ff1], &[ev, d_last, p31, c])
                } else if v == c {
                    vertex_row(c, &[0, ff1, ff2, ff3], &[b, p32, p23, dd])
                } else if v == dd {
                    vertex_row(dd, &[0, 1, ff3, ff4], &[ev, c, p13, d1])
                } else {
                    unreachable!("no mask for slot {v}")
                }
            }
            Refined::Edge(a, bb) => edge_row(a, bb),
            Refined::Face(f) => face_row(f),
        }
    };

    // Next-level canonical configuration.
    let mut next_defs: Vec<Refined> = Vec::with_capacity(m);
    next_defs.push(Refined::Vertex(ev));
    for k in 0..n {
        next_defs.push(Refined::Edge(ev, e(k)));
        next_defs.push(Refined::Face(k));
    }
    next_defs.extend_from_slice(&[
        Refined::Edge(b, d_last),
        Refined::Vertex(b),
        Refined::Edge(b, c),
        Refined::Vertex(c),
        Refined::Edge(c, dd),
        Refined::Vertex(dd),
        Refined::Edge(dd, d1),
    ]);
    let mut next = DMatrix::zeros(m, m);
    for (r, def) in next_defs.iter().enumerate() {
        next.set_row(r, &row_for(*def));
    }

    // The three regular sub-grids, row-major in their own coordinates.
    // Quadrant 0 lies along +t1 from the corner cell, quadrant 1 along +t2,
    // quadrant 2 is the diagonal.
    let va = Refined::Vertex(ev);
    let vb = Refined::Vertex(b);
    let vc = Refined::Vertex(c);
    let vd = Refined::Vertex(dd);
    let eab = Refined::Edge(ev, e(0));
    let ead = Refined::Edge(ev, e(1));
    let ea_prev = Refined::Edge(ev, e(n - 1));
    let ea_2 = Refined::Edge(ev, e(2 % n));
    let ebc = Refined::Edge(b, c);
    let edc = Refined::Edge(c, dd);
    let ebd_last = Refined::Edge(b, d_last);
    let ebp31 = Refined::Edge(b, p31);
    let ecp32 = Refined::Edge(c, p32);
    let ecp23 = Refined::Edge(c, p23);
    let edp13 = Refined::Edge(dd, p13);
    let edd1 = Refined::Edge(dd, d1);
    let fg = |k: usize| Refined::Face(k % n);
    let f0 = Refined::Face(0);

    let grid0: [Refined; 16] = [
        ea_prev, fg(n - 1), ebd_last, Refined::Face(ff0),
        va, eab, vb, ebp31,
        ead, f0, ebc, Refined::Face(ff1),
        vd, edc, vc, ecp32,
    ];
    let grid1: [Refined; 16] = [
        ea_2, va, eab, vb,
        fg(1), ead, f0, ebc,
        edd1, vd, edc, vc,
        Refined::Face(ff4), edp13, Refined::Face(ff3), ecp23,
    ];
    let grid2: [Refined; 16] = [
        va, eab, vb, ebp31,
        ead, f0, ebc, Refined::Face(ff1),
        vd, edc, vc, ecp32,
        edp13, Refined::Face(ff3), ecp23, Refined::Face(ff2),
    ];

    let build_grid = |defs: &[Refined; 16]| -> DMatrix<f64> {
        let mut g = DMatrix::zeros(16, m);
        for (r, def) in defs.iter().enumerate() {
            g.set_row(r, &row_for(*def));
        }
        g
    };

    IrregularTables {
        next,
        grids: [build_grid(&grid0), build_grid(&grid1), build_grid(&grid2)],
    }
}

/// In-plane Gauss-Legendre quadrature on the unit square.
#[derive(Debug, Clone)]
pub struct SquareQuadrature {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SquareQuadrature {
    /// Tensor 3x3 rule, the working choice for subdivision shells.
    pub fn gauss_3x3() -> Self {
        let r = (3.0f64 / 5.0).sqrt();
        let pts = [0.5 - 0.5 * r, 0.5, 0.5 + 0.5 * r];
        let wts = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let mut points = Vec::with_capacity(9);
        let mut weights = Vec::with_capacity(9);
        for j in 0..3 {
            for i in 0..3 {
                points.push((pts[i], pts[j]));
                weights.push(wts[i] * wts[j]);
            }
        }
        SquareQuadrature { points, weights }
    }
}

/// Gauss rule through the thickness on `[-h/2, h/2]`.
#[derive(Debug, Clone)]
pub struct ThicknessRule {
    /// (theta3, weight) pairs.
    pub points: Vec<(f64, f64)>,
}

impl ThicknessRule {
    pub fn gauss(h: f64, n_points: usize) -> Self {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = match n_points {
            2 => {
                let r = 1.0 / 3.0f64.sqrt();
                (vec![-r, r], vec![1.0, 1.0])
            }
            4 => (
                vec![
                    -0.8611363115940526,
                    -0.3399810435848563,
                    0.3399810435848563,
                    0.8611363115940526,
                ],
                vec![
                    0.3478548451374538,
                    0.6521451548625461,
                    0.6521451548625461,
                    0.3478548451374538,
                ],
            ),
            _ => panic!("thickness rule supports 2 or 4 points"),
        };
        ThicknessRule {
            points: nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| (0.5 * h * x, 0.5 * h * w))
                .collect(),
        }
    }
}
