//! Property suites runnable without any benchmark: basis partition of unity
//! and seam continuity, tangent consistency against finite differences
//! (follower terms included), plane-stress and objectivity identities, and
//! volume quadrature convergence on the analytic sphere.

use nalgebra::{DVector, Rotation3};
use proptest::prelude::*;
use shellpath::assembly::ShellModel;
use shellpath::basis::eval_patch_basis;
use shellpath::bench;
use shellpath::linalg::TangentMatrix;
use shellpath::mesh::{closed_grid, open_grid, ControlMesh, PatchStencil, Vec3};
use shellpath::shell_core::{
    material_response, strain_state, surface_frames, MaterialModel, MaterialParams, Sym2,
    ThicknessLaw,
};

fn eval_surface(
    mesh: &ControlMesh,
    st: &PatchStencil,
    t1: f64,
    t2: f64,
) -> (Vec3, [Vec3; 2], [Vec3; 3]) {
    let b = eval_patch_basis(st, t1, t2).unwrap();
    let mut pos = Vec3::zeros();
    let mut d1 = [Vec3::zeros(); 2];
    let mut d2 = [Vec3::zeros(); 3];
    for (sid, slot) in st.slots.iter().enumerate() {
        let p = slot.ref_position(mesh.vertices());
        pos += b.values[sid] * p;
        for a in 0..2 {
            d1[a] += b.d1[sid][a] * p;
        }
        for a in 0..3 {
            d2[a] += b.d2[sid][a] * p;
        }
    }
    (pos, d1, d2)
}

/// Wavy closed test surface with regular topology.
fn wavy_torus() -> ControlMesh {
    closed_grid(8, 8, |i, j| {
        let u = i as f64 / 8.0 * std::f64::consts::TAU;
        let v = j as f64 / 8.0 * std::f64::consts::TAU;
        let r = 1.0 + 0.2 * (2.0 * v).sin();
        Vec3::new(
            (3.0 + r * v.cos()) * u.cos(),
            r * v.sin() + 0.1 * (3.0 * u).cos(),
            (3.0 + r * v.cos()) * u.sin(),
        )
    })
}

#[test]
fn partition_of_unity_everywhere() {
    // Regular interior, ghost-completed boundary, and extraordinary patches.
    let meshes = [
        wavy_torus(),
        open_grid(3, 3, |i, j| Vec3::new(i as f64, j as f64, 0.1 * (i * j) as f64)),
        bench::full_sphere(2.0, 4),
    ];
    for mesh in &meshes {
        for f in 0..mesh.n_faces() {
            let st = mesh.patch_stencil(f).unwrap();
            for &(t1, t2) in &[(0.05, 0.05), (0.5, 0.25), (0.95, 0.9)] {
                let b = eval_patch_basis(&st, t1, t2).unwrap();
                let s: f64 = b.values.iter().sum();
                assert!((s - 1.0).abs() <= 1e-9, "PU {s} at face {f}");
                for a in 0..2 {
                    let d: f64 = b.d1.iter().map(|x| x[a]).sum();
                    assert!(d.abs() <= 1e-9, "d1 sum {d}");
                }
                for a in 0..3 {
                    let d: f64 = b.d2.iter().map(|x| x[a]).sum();
                    assert!(d.abs() <= 1e-8, "d2 sum {d}");
                }
            }
        }
    }
}

/// Parameter path of side `k` of a face, and its along/inward directions.
fn side_path(k: usize, tau: f64) -> (f64, f64) {
    match k {
        0 => (tau, 0.0),
        1 => (1.0, tau),
        2 => (1.0 - tau, 1.0),
        _ => (0.0, 1.0 - tau),
    }
}

fn side_dirs(k: usize) -> ([f64; 2], [f64; 2]) {
    match k {
        0 => ([1.0, 0.0], [0.0, 1.0]),
        1 => ([0.0, 1.0], [-1.0, 0.0]),
        2 => ([-1.0, 0.0], [0.0, -1.0]),
        _ => ([0.0, -1.0], [1.0, 0.0]),
    }
}

/// Sides of two faces sharing directed edge a->b in `f` (so b->a in `g`),
/// rotated into each patch's own parameter frame.
fn shared_edge_sides(
    mesh: &ControlMesh,
    f: usize,
    g: usize,
) -> Option<(usize, usize, PatchStencil, PatchStencil)> {
    let sf = mesh.patch_stencil(f).ok()?;
    let sg = mesh.patch_stencil(g).ok()?;
    let qf = mesh.face(f);
    let qg = mesh.face(g);
    for kf in 0..4 {
        let (a, b) = (qf[kf], qf[(kf + 1) % 4]);
        for kg in 0..4 {
            if qg[kg] == b && qg[(kg + 1) % 4] == a {
                let side_f = (kf + 4 - sf.rotation) % 4;
                let side_g = (kg + 4 - sg.rotation) % 4;
                return Some((side_f, side_g, sf, sg));
            }
        }
    }
    None
}

#[test]
fn c1_continuity_across_seams() {
    // A mesh with extraordinary vertices: the fitted cube-sphere.
    let mesh = bench::full_sphere(3.0, 4);
    let mut tested_ev_seam = false;
    let mut tested = 0;
    'faces: for f in 0..mesh.n_faces() {
        let qf = mesh.face(f);
        for g in f + 1..mesh.n_faces() {
            let Some((side_f, side_g, sf, sg)) = shared_edge_sides(&mesh, f, g) else {
                continue;
            };
            let has_ev = qf.iter().any(|&v| mesh.is_extraordinary(v));
            if has_ev {
                tested_ev_seam = true;
            }
            for i in 0..10 {
                let tau = (i as f64 + 0.5) / 10.0;
                let (t1f, t2f) = side_path(side_f, tau);
                let (t1g, t2g) = side_path(side_g, 1.0 - tau);
                let (pf, df, _) = eval_surface(&mesh, &sf, t1f, t2f);
                let (pg, dg, _) = eval_surface(&mesh, &sg, t1g, t2g);
                assert!((pf - pg).norm() <= 1e-9, "position jump {}", (pf - pg).norm());
                // Tangent plane continuity: compare unit normals.
                let nf = df[0].cross(&df[1]).normalize();
                let ng = dg[0].cross(&dg[1]).normalize();
                assert!(
                    (nf - ng).norm() <= 1e-9,
                    "normal jump {} at face pair ({f},{g})",
                    (nf - ng).norm()
                );
                // Along-edge tangent from both sides (accounting for the
                // reversed traversal).
                let (af, _) = side_dirs(side_f);
                let (ag, _) = side_dirs(side_g);
                let tf = af[0] * df[0] + af[1] * df[1];
                let tg = -(ag[0] * dg[0] + ag[1] * dg[1]);
                assert!(
                    (tf - tg).norm() <= 1e-9 * tf.norm().max(1.0),
                    "edge tangent jump {}",
                    (tf - tg).norm()
                );
            }
            tested += 1;
            if tested > 40 {
                break 'faces;
            }
        }
    }
    assert!(tested_ev_seam, "no extraordinary seam was exercised");
}

#[test]
fn c2_continuity_across_regular_seams() {
    let mesh = wavy_torus();
    let mut tested = 0;
    'faces: for f in 0..mesh.n_faces() {
        for g in f + 1..mesh.n_faces() {
            let Some((side_f, side_g, sf, sg)) = shared_edge_sides(&mesh, f, g) else {
                continue;
            };
            // Transition Jacobian between the two parameter frames.
            let (af, nf_) = side_dirs(side_f);
            let (ag, ng_) = side_dirs(side_g);
            // Columns of J express f-frame directions in the g-frame:
            // along_f -> -along_g, inward_f -> -outward_g = -(-inward_g).
            let jf = |v: [f64; 2]| {
                // Decompose v into along/inward of f; crossing the seam
                // maps along_f to -along_g and inward_f to -inward_g.
                let ca = v[0] * af[0] + v[1] * af[1];
                let cn = v[0] * nf_[0] + v[1] * nf_[1];
                [
                    -ca * ag[0] - cn * ng_[0],
                    -ca * ag[1] - cn * ng_[1],
                ]
            };
            let e1 = jf([1.0, 0.0]);
            let e2 = jf([0.0, 1.0]);
            for i in 0..5 {
                let tau = (i as f64 + 0.5) / 5.0;
                let (t1f, t2f) = side_path(side_f, tau);
                let (t1g, t2g) = side_path(side_g, 1.0 - tau);
                let (_, dg1, dg2) = eval_surface(&mesh, &sg, t1g, t2g);
                let (_, df1, df2) = eval_surface(&mesh, &sf, t1f, t2f);
                // First derivatives through the transition.
                let a1_via_g = e1[0] * dg1[0] + e1[1] * dg1[1];
                let a2_via_g = e2[0] * dg1[0] + e2[1] * dg1[1];
                assert!((df1[0] - a1_via_g).norm() <= 1e-9 * df1[0].norm().max(1.0));
                assert!((df1[1] - a2_via_g).norm() <= 1e-9 * df1[1].norm().max(1.0));
                // Second derivatives: d2_f[ab] = J^c_a J^d_b d2_g[cd].
                let g2 = |c: usize, d: usize| dg2[c + d];
                let second = |ea: [f64; 2], eb: [f64; 2]| {
                    let mut v = Vec3::zeros();
                    for (c, &eca) in ea.iter().enumerate() {
                        for (d, &edb) in eb.iter().enumerate() {
                            v += eca * edb * g2(c, d);
                        }
                    }
                    v
                };
                let d11 = second(e1, e1);
                let d12 = second(e1, e2);
                let d22 = second(e2, e2);
                let scale = df2[0].norm().max(df2[2].norm()).max(1.0);
                assert!((df2[0] - d11).norm() <= 1e-9 * scale, "{}", (df2[0] - d11).norm());
                assert!((df2[1] - d12).norm() <= 1e-9 * scale);
                assert!((df2[2] - d22).norm() <= 1e-9 * scale);
            }
            tested += 1;
            if tested > 30 {
                break 'faces;
            }
        }
    }
    assert!(tested > 10);
}

/// Map a parameter point of face `f` through one subdivision: the containing
/// quadrant of the refined mesh (faces are emitted corner-by-corner) and the
/// local coordinates within it.
fn subdivided_param(face: usize, t1: f64, t2: f64) -> (usize, f64, f64) {
    let (corner, u1, u2) = match (t1 < 0.5, t2 < 0.5) {
        (true, true) => (0, 2.0 * t1, 2.0 * t2),
        (false, true) => (1, 2.0 * t2, 2.0 * (1.0 - t1)),
        (false, false) => (2, 2.0 * (1.0 - t1), 2.0 * (1.0 - t2)),
        (true, false) => (3, 2.0 * (1.0 - t2), 2.0 * t1),
    };
    (4 * face + corner, u1, u2)
}

#[test]
fn subdivision_limit_consistency() {
    // The limit surface must be invariant under refinement, including ghost
    // completion at boundaries.
    for mesh in [
        wavy_torus(),
        open_grid(3, 4, |i, j| {
            Vec3::new(i as f64 * 0.9, j as f64 * 1.1, 0.07 * ((i + 2 * j) as f64).sin())
        }),
    ] {
        let fine = mesh.subdivide();
        for f in (0..mesh.n_faces()).step_by(3) {
            let st = mesh.patch_stencil(f).unwrap();
            for &(t1, t2) in &[(0.23, 0.71), (0.9, 0.12), (0.5, 0.5)] {
                let (p, _, _) = eval_surface(&mesh, &st, t1, t2);
                let (ff, u1, u2) = subdivided_param(f, t1, t2);
                let stf = fine.patch_stencil(ff).unwrap();
                let (q, _, _) = eval_surface(&fine, &stf, u1, u2);
                assert!(
                    (p - q).norm() <= 1e-10,
                    "face {f} at ({t1},{t2}): {}",
                    (p - q).norm()
                );
            }
        }
    }
}

#[test]
fn irregular_evaluation_matches_subdivision_oracle() {
    // Evaluate near a valence-3 vertex of the fitted cube-sphere, then
    // compare against explicit global subdivisions (k = 4) with the mapped
    // parameter landing in regular patches.
    let mesh = bench::full_sphere(2.0, 4);
    let f = (0..mesh.n_faces())
        .find(|&f| mesh.face(f).iter().any(|&v| mesh.is_extraordinary(v)))
        .unwrap();
    let st = mesh.patch_stencil(f).unwrap();

    for &(t1, t2) in &[(0.3, 0.2), (0.12, 0.4), (0.6, 0.07)] {
        let (p, _, _) = eval_surface(&mesh, &st, t1, t2);
        let mut m = mesh.clone();
        let (mut ff, mut u1, mut u2) = (f, t1, t2);
        for _ in 0..4 {
            let (nf, n1, n2) = subdivided_param(ff, u1, u2);
            m = m.subdivide();
            ff = nf;
            u1 = n1;
            u2 = n2;
        }
        let stf = m.patch_stencil(ff).unwrap();
        let (q, _, _) = eval_surface(&m, &stf, u1, u2);
        assert!((p - q).norm() <= 1e-8, "{}", (p - q).norm());
    }

    // Error of the subdivided control polygon (bilinear corner blend)
    // against the evaluator decreases monotonically with refinement depth.
    let probe = (0.3, 0.2);
    let (p_exact, _, _) = eval_surface(&mesh, &st, probe.0, probe.1);
    let mut errs = Vec::new();
    let mut m = mesh.clone();
    let (mut ff, mut u1, mut u2) = (f, probe.0, probe.1);
    for _ in 0..4 {
        let (nf, n1, n2) = subdivided_param(ff, u1, u2);
        m = m.subdivide();
        ff = nf;
        u1 = n1;
        u2 = n2;
        let quad = m.face(ff);
        let v = m.vertices();
        let bl = v[quad[0]] * (1.0 - u1) * (1.0 - u2)
            + v[quad[1]] * u1 * (1.0 - u2)
            + v[quad[2]] * u1 * u2
            + v[quad[3]] * (1.0 - u1) * u2;
        errs.push((bl - p_exact).norm());
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "control polygon error must shrink: {errs:?}");
    }
}

#[test]
fn octant_mirror_matches_glued_full_sphere() {
    // The mirror-ghost octant surface must be the restriction of a closed
    // sphere built by gluing the reflected copies.
    let b = bench::sphere_octant(0, 1).unwrap();
    let octant = &b.mesh;
    // Build the closed mesh from the eight sign-flipped copies.
    let mut glue_vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 4]> = Vec::new();
    let mut lookup = std::collections::HashMap::new();
    let mut vid = |p: Vec3, verts: &mut Vec<Vec3>| -> usize {
        let key = (
            (p.x * 1e8).round() as i64,
            (p.y * 1e8).round() as i64,
            (p.z * 1e8).round() as i64,
        );
        *lookup.entry(key).or_insert_with(|| {
            verts.push(p);
            verts.len() - 1
        })
    };
    for sx in [1.0f64, -1.0] {
        for sy in [1.0f64, -1.0] {
            for sz in [1.0f64, -1.0] {
                let flip = sx * sy * sz < 0.0;
                for f in octant.faces() {
                    let mut quad = [0usize; 4];
                    for (k, &v) in f.iter().enumerate() {
                        let p = octant.vertices()[v];
                        quad[k] = vid(Vec3::new(sx * p.x, sy * p.y, sz * p.z), &mut glue_vertices);
                    }
                    if flip {
                        quad.swap(1, 3);
                    }
                    faces.push(quad);
                }
            }
        }
    }
    let closed = ControlMesh::new(glue_vertices, faces).unwrap();
    assert!(closed.is_closed());

    // Compare surface points on a boundary-adjacent octant face against the
    // same face of the glued mesh (face 0 of the positive octant copy).
    for f in [0usize, 3, 40] {
        let st_o = octant.patch_stencil(f).unwrap();
        let st_c = closed.patch_stencil(f).unwrap();
        for &(t1, t2) in &[(0.1, 0.1), (0.02, 0.8), (0.5, 0.03)] {
            let (po, _, _) = eval_surface(octant, &st_o, t1, t2);
            let (pc, _, _) = eval_surface(&closed, &st_c, t1, t2);
            assert!(
                (po - pc).norm() <= 1e-10,
                "face {f} ({t1},{t2}): {}",
                (po - pc).norm()
            );
        }
    }
}

#[test]
fn global_tangent_matches_fd_including_follower() {
    // Curved patch with mirror constraints and pressure: K vs central FD.
    let mesh = open_grid(2, 2, |i, j| {
        Vec3::new(
            i as f64 * 0.6,
            j as f64 * 0.5,
            0.05 * (i as f64 - 1.0) * (j as f64),
        )
    });
    let material = MaterialParams {
        model: MaterialModel::MooneyRivlin { c1: 3.0, c2: 0.8 },
        thickness: 0.04,
    };
    let model = ShellModel::new(mesh, material, &[(0, 2, 0.0), (1, 2, 0.0)], 2).unwrap();
    let u = DVector::from_fn(model.dofs.n_total(), |k, _| {
        0.03 * ((k as f64 * 0.83).sin() + 0.4 * (k as f64 * 0.31).cos())
    });
    let (kappa, p_ref) = (0.8, 0.25);
    let sys = model.assemble(&u, kappa, p_ref).unwrap();
    let k = TangentMatrix::Sparse {
        n: model.dofs.n_total(),
        triplets: sys.k_triplets.clone(),
    };
    let h = 1e-6;
    for dof in (0..model.dofs.n_total()).step_by(7) {
        let mut up = u.clone();
        up[dof] += h;
        let mut um = u.clone();
        um[dof] -= h;
        let rp = model.assemble(&up, kappa, p_ref).unwrap().residual;
        let rm = model.assemble(&um, kappa, p_ref).unwrap().residual;
        let mut unit = DVector::zeros(model.dofs.n_total());
        unit[dof] = 1.0;
        let col = k.matvec(&unit);
        for r in 0..model.dofs.n_total() {
            let fd = (rp[r] - rm[r]) / (2.0 * h);
            assert!(
                (fd - col[r]).abs() <= 1e-5 * fd.abs().max(1e-3),
                "K[{r}][{dof}] fd {fd} vs {}",
                col[r]
            );
        }
    }
}

#[test]
fn membrane_limit_bending_fraction() {
    // Bending energy fraction scales as h^2 relative to membrane energy:
    // shrinking h by 10 must cut the fraction by at least 100.
    let strain = shellpath::shell_core::StrainState {
        membrane: Sym2([0.02, 0.015, 0.004]),
        bending: Sym2([0.3, 0.2, 0.1]),
    };
    let mut ratios = Vec::new();
    for h in [0.1, 0.01] {
        let rule = shellpath::basis::ThicknessRule::gauss(h, 2);
        let d1 = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let d2 = [Vec3::zeros(), Vec3::zeros(), Vec3::zeros()];
        let zero1 = [Vec3::zeros(), Vec3::zeros()];
        let (r, _) = surface_frames(
            &d1,
            &d2,
            &zero1,
            &d2,
            h,
            &rule.points,
            ThicknessLaw::Unit,
            "t",
        )
        .unwrap();
        let params = MaterialParams {
            model: MaterialModel::StVenantKirchhoff {
                youngs: 100.0,
                poisson: 0.3,
            },
            thickness: h,
        };
        let res = shellpath::shell_core::stress_resultants(&params, &r, &strain, "t").unwrap();
        let e_m = 0.5 * res.n.ddot(&strain.membrane);
        let e_b = 0.5 * res.m.ddot(&strain.bending);
        ratios.push(e_b / e_m);
    }
    assert!(
        ratios[0] >= 99.99 * ratios[1],
        "bending share must drop by >= 100x: {ratios:?}"
    );
}

#[test]
fn sphere_volume_quadrature_convergence() {
    let exact = 4.0 / 3.0 * std::f64::consts::PI * 1000.0;
    let mut errors = Vec::new();
    for k in [8usize, 16] {
        let mesh = bench::full_sphere(10.0, k);
        let material = MaterialParams {
            model: MaterialModel::MooneyRivlin { c1: 1.0, c2: 0.0 },
            thickness: 0.1,
        };
        let model = ShellModel::new(mesh, material, &[], 2).unwrap();
        let u = DVector::zeros(model.dofs.n_total());
        let v = model.enclosed_volume(&u).unwrap();
        errors.push((v - exact).abs() / exact);
    }
    assert!(errors[0] <= 5e-3, "refine-0 volume error {:.2e}", errors[0]);
    assert!(
        errors[1] * 4.0 <= errors[0],
        "volume error must drop by >= 4x per refinement: {errors:?}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Rotating reference and deformed configurations together leaves
    /// strains and resultants invariant.
    #[test]
    fn objectivity_under_rotations(
        angle1 in -3.0f64..3.0,
        angle2 in -1.5f64..1.5,
        angle3 in -3.0f64..3.0,
        s in 0.8f64..1.3,
    ) {
        let rot = Rotation3::from_euler_angles(angle1, angle2, angle3);
        let d1 = [Vec3::new(1.0, 0.05, 0.1), Vec3::new(-0.1, 0.9, 0.2)];
        let d2 = [
            Vec3::new(0.02, 0.0, 0.3),
            Vec3::new(0.0, 0.01, 0.25),
            Vec3::new(0.01, 0.0, 0.1),
        ];
        // A deformation: stretch plus extra curvature.
        let ud1 = [(s - 1.0) * d1[0] + Vec3::new(0.0, 0.02, 0.05), (s - 1.0) * d1[1]];
        let ud2 = [Vec3::new(0.0, 0.0, 0.12), Vec3::new(0.0, 0.0, 0.07), Vec3::new(0.0, 0.0, 0.04)];
        let rule = shellpath::basis::ThicknessRule::gauss(0.05, 2);
        let params = MaterialParams {
            model: MaterialModel::MooneyRivlin { c1: 1.0, c2: 0.3 },
            thickness: 0.05,
        };

        let (r0, f0) = surface_frames(&d1, &d2, &ud1, &ud2, 0.05, &rule.points,
            ThicknessLaw::Incompressible, "t").unwrap();
        let s0 = strain_state(&r0, &f0);
        let res0 = shellpath::shell_core::stress_resultants(&params, &r0, &s0, "t").unwrap();

        // Rotate both configurations.
        let rd1 = [rot * d1[0], rot * d1[1]];
        let rd2 = [rot * d2[0], rot * d2[1], rot * d2[2]];
        let rud1 = [rot * (d1[0] + ud1[0]) - rot * d1[0], rot * (d1[1] + ud1[1]) - rot * d1[1]];
        let rud2 = [
            rot * (d2[0] + ud2[0]) - rot * d2[0],
            rot * (d2[1] + ud2[1]) - rot * d2[1],
            rot * (d2[2] + ud2[2]) - rot * d2[2],
        ];
        let (r1, f1) = surface_frames(&rd1, &rd2, &rud1, &rud2, 0.05, &rule.points,
            ThicknessLaw::Incompressible, "t").unwrap();
        let s1 = strain_state(&r1, &f1);
        let res1 = shellpath::shell_core::stress_resultants(&params, &r1, &s1, "t").unwrap();

        for v in 0..3 {
            prop_assert!((s0.membrane.0[v] - s1.membrane.0[v]).abs() <= 1e-10);
            prop_assert!((s0.bending.0[v] - s1.bending.0[v]).abs() <= 1e-10);
            prop_assert!((res0.n.0[v] - res1.n.0[v]).abs() <= 1e-10 * res0.n.0[v].abs().max(1.0));
            prop_assert!((res0.m.0[v] - res1.m.0[v]).abs() <= 1e-10 * res0.m.0[v].abs().max(1.0));
        }
    }

    /// The reconstructed transverse stress vanishes for arbitrary admissible
    /// Mooney-Rivlin states.
    #[test]
    fn plane_stress_identity_random_states(
        c11 in 0.8f64..2.2,
        c22 in 0.8f64..2.2,
        c12 in -0.3f64..0.3,
        c1 in 0.2f64..1.0,
        c2 in 0.0f64..0.5,
    ) {
        prop_assume!(c11 * c22 - c12 * c12 > 0.1);
        let gbar = Sym2([1.0, 1.0, 0.0]);
        let c_cov = Sym2([c11, c22, c12]);
        let lambda3 = (gbar.det() / c_cov.det()).sqrt();
        let resp = material_response(
            MaterialModel::MooneyRivlin { c1, c2 },
            &gbar,
            &gbar,
            &c_cov,
            lambda3,
            "t",
        ).unwrap();
        let tr_p = gbar.ddot(&c_cov);
        let dw_dc33 = c1 + c2 * tr_p;
        prop_assert!(resp.s33_residual(dw_dc33, lambda3).abs() <= 1e-10);
    }
}
