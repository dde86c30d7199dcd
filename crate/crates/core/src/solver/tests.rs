use super::*;
use crate::dg::lgl_nodes_weights;
use crate::mesh::{build_mesh, MeshConfig};
use crate::partition::{nested_partition, splice, FractionBalancer};
use crate::physics::{constitutive, flux};

fn acoustic() -> Material {
    Material::acoustic(1.0, 1.0).unwrap()
}

fn elastic() -> Material {
    Material::from_speeds(1.0, 3.0, 2.0).unwrap()
}

fn disc(config: MeshConfig, order: usize, mats: &[Material], boundary: Boundary, p: Option<&NestedPartition>) -> Discretization {
    Discretization::new(build_mesh(&config).unwrap(), order, mats, boundary, p).unwrap()
}

fn eval_rate(d: &Discretization, t: f64, q: &[f64]) -> Vec<f64> {
    let mut rate = vec![f64::NAN; q.len()];
    d.rhs(t, q, &mut rate, &mut Workspace::default(), &mut KernelTimes::default()).unwrap();
    rate
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn zero_state_has_zero_rate() {
    let d = disc(MeshConfig::row(2, 1, 0.5), 3, &[acoustic(), elastic()], Boundary::free(), None);
    let q = vec![0.0; d.state_len()];
    assert!(eval_rate(&d, 0.0, &q).iter().all(|&x| x == 0.0));
}

#[test]
fn constant_state_in_traction_equilibrium_is_steady() {
    let mat = elastic();
    let sol = ExactSolution::PlaneWave {
        material: mat,
        axis: 1,
        forward: true,
        profile: Profile::Polynomial { coeffs: vec![0.3] },
    };
    let boundary = Boundary { exact: Some(sol.clone()), free_directions: vec![] };
    let d = disc(MeshConfig::brick(1, 0.7), 4, &[mat], boundary, None);
    let q = d.project(|x| sol.state(x, 0.0));
    assert!(max_abs(&eval_rate(&d, 0.0, &q)) < 1e-12);
}

#[test]
fn plane_wave_rate_matches_analytic_derivative() {
    // Degree-6 profile on a 4-element column at N = 6: the nodal field is
    // exact, so the only error left is roundoff.
    let mat = acoustic();
    let coeffs = vec![0.1, -0.4, 0.3, 0.2, -0.05, 0.01, -0.002];
    let profile = Profile::Polynomial { coeffs: coeffs.clone() };
    let sol = ExactSolution::PlaneWave { material: mat, axis: 0, forward: true, profile };
    let boundary = Boundary { exact: Some(sol.clone()), free_directions: vec![] };
    let d = disc(MeshConfig::row(4, 0, 1.0), 6, &[mat; 4], boundary, None);
    let t = 0.3;
    let q = d.project(|x| sol.state(x, t));
    let rate = eval_rate(&d, t, &q);

    let c = mat.cp();
    let dprofile = |s: f64| coeffs.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a * s.powi(k as i32 - 1)).sum::<f64>();
    let expected = d.project(|x| {
        let fp = dprofile(x[0] - c * t);
        let mut s = WaveState::default();
        s.e[0][0] = -c * fp;
        s.v[0] = c * c * fp;
        s
    });
    let err = rate.iter().zip(&expected).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 1e-8, "max rate error {err:e}");
}

/// Derivative of the `m`-th Lagrange basis polynomial at `x` by the product
/// rule.
fn lagrange_derivative(nodes: &[f64], m: usize, x: f64) -> f64 {
    let mut sum = 0.0;
    for j in (0..nodes.len()).filter(|&j| j != m) {
        let mut term = 1.0 / (nodes[m] - nodes[j]);
        for k in (0..nodes.len()).filter(|&k| k != m && k != j) {
            term *= (x - nodes[k]) / (nodes[m] - nodes[k]);
        }
        sum += term;
    }
    sum
}

/// Solve `A x = b` for dense `A` by Gaussian elimination with pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn single_element_mirror_rate_matches_dense_weak_form() {
    let n = 2;
    let m = n + 1;
    let np = m * m * m;
    let h = 0.8;
    let mat = Material::acoustic(1.3, 1.7).unwrap();
    let d = disc(MeshConfig::brick(0, h), n, &[mat], Boundary::free(), None);
    let r = d.reference();
    let q: Vec<f64> = {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut q: Vec<f64> = (0..12 * np).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for node in 0..np {
            for i in 0..3 {
                for j in 0..i {
                    q[(3 * i + j) * np + node] = q[(3 * j + i) * np + node];
                }
            }
        }
        q
    };
    let rate = eval_rate(&d, 0.0, &q);

    let (x, w) = lgl_nodes_weights(n).unwrap();
    let idx = |a: usize| [a % m, (a / m) % m, a / (m * m)];
    let basis = |a: usize, p: [f64; 3]| {
        let i = idx(a);
        (0..3).map(|ax| crate::dg::lagrange(&x, i[ax], p[ax])).product::<f64>()
    };
    let basis_grad = |a: usize, p: [f64; 3], axis: usize| {
        let i = idx(a);
        (0..3)
            .map(|ax| if ax == axis { lagrange_derivative(&x, i[ax], p[ax]) } else { crate::dg::lagrange(&x, i[ax], p[ax]) })
            .product::<f64>()
    };
    let jac = (h / 2.0).powi(3);
    let quad: Vec<([f64; 3], f64)> = (0..np)
        .map(|qn| {
            let i = idx(qn);
            ([x[i[0]], x[i[1]], x[i[2]]], w[i[0]] * w[i[1]] * w[i[2]])
        })
        .collect();

    let mass: Vec<Vec<f64>> = (0..np)
        .map(|a| (0..np).map(|b| quad.iter().map(|(p, wq)| wq * jac * basis(a, *p) * basis(b, *p)).sum()).collect())
        .collect();
    let state = |node: usize| {
        let c: Vec<f64> = (0..12).map(|comp| q[comp * np + node]).collect();
        WaveState::from_components(&c)
    };

    // Nodal fluxes per axis and the boundary bracket at each face node.
    let fluxes: Vec<[[f64; 12]; 3]> =
        (0..np).map(|b| std::array::from_fn(|axis| flux(&state(b), &mat, axis).to_components())).collect();
    let mut load = vec![[0.0; 12]; np];
    for a in 0..np {
        for (p, wq) in &quad {
            for (b, fb) in fluxes.iter().enumerate() {
                for (axis, f) in fb.iter().enumerate() {
                    let g = wq * jac * basis(a, *p) * basis_grad(b, *p, axis) * 2.0 / h;
                    for comp in 0..12 {
                        load[a][comp] -= g * f[comp];
                    }
                }
            }
        }
    }
    let face_jac = (h / 2.0).powi(2);
    for face in 0..6 {
        let normal = crate::mesh::face_normal(face);
        let axis = face / 2;
        let fixed = if face % 2 == 1 { 1.0 } else { -1.0 };
        for (fp, &node) in r.face_nodes[face].iter().enumerate() {
            let bracket = traction_bc(&state(node), &mat, &normal, &[0.0; 3]).to_components();
            let i = idx(node);
            let mut p = [x[i[0]], x[i[1]], x[i[2]]];
            p[axis] = fixed;
            let wf = r.face_weight(fp) * face_jac;
            for a in 0..np {
                let phi = basis(a, p);
                for comp in 0..12 {
                    load[a][comp] -= wf * phi * bracket[comp];
                }
            }
        }
    }
    for comp in 0..12 {
        let b: Vec<f64> = (0..np).map(|a| load[a][comp]).collect();
        let sol = dense_solve(mass.clone(), b);
        let q_inv = if comp < 9 { 1.0 } else { 1.0 / mat.rho };
        for a in 0..np {
            let got = rate[comp * np + a];
            let want = q_inv * sol[a];
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "comp {comp} node {a}: {got} vs {want}");
        }
    }
}

#[test]
fn traces_of_continuous_fields_agree_across_faces() {
    let d = disc(MeshConfig::row(2, 1, 0.5), 3, &[acoustic(), acoustic()], Boundary::free(), None);
    let q = d.project(|x| {
        let mut s = WaveState::default();
        s.v = [x[0] * x[1] - x[2].powi(3), x[0].powi(2), 1.0 + x[1] * x[2]];
        s.e[0][1] = x[0] * x[2];
        s.e[1][0] = x[0] * x[2];
        s
    });
    let r = d.reference();
    let np = r.volume_nodes();
    for e in 0..d.element_count() {
        for f in 0..6 {
            if let Some(nb) = d.mesh().neighbors(e)[f].element() {
                let g = opposite_face(f);
                for (a, b) in r.face_nodes[f].iter().zip(&r.face_nodes[g]) {
                    for c in 0..12 {
                        let own = q[e * 12 * np + c * np + a];
                        let other = q[nb * 12 * np + c * np + b];
                        assert!((own - other).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn interface_faces_use_both_materials() {
    // A velocity field that is continuous but with a stress jump across the
    // material interface produces a non-zero bracket there only.
    let d = disc(MeshConfig::row(2, 0, 1.0), 2, &[acoustic(), elastic()], Boundary::free(), None);
    let q = d.project(|_| WaveState { e: [[0.1, 0.0, 0.0], [0.0; 3], [0.0; 3]], v: [0.0; 3] });
    let rate = eval_rate(&d, 0.0, &q);
    let np = d.reference().volume_nodes();
    let r = d.reference();
    // Element 0's +x face nodes see the acoustic/elastic traction jump.
    let vx = &rate[9 * np..10 * np];
    let on_face: f64 = r.face_nodes[1].iter().map(|&i| vx[i].abs()).sum();
    assert!(on_face > 1e-3);
}

fn random_config(nodes: Option<PartitionConfig>) -> SolveConfig {
    SolveConfig {
        order: 2,
        mesh: MeshConfig::row(2, 2, 0.25),
        materials: vec![
            crate::physics::MaterialSpec { rho: 1.0, cp: 1.0, cs: 0.0 },
            crate::physics::MaterialSpec { rho: 1.0, cp: 3.0, cs: 2.0 },
        ],
        dt: None,
        cfl: 0.5,
        steps: 6,
        initial: InitialCondition::Random { seed: 4, amplitude: 1.0 },
        boundary: BoundaryConfig::default(),
        output_every: 0,
        partition: nodes,
    }
}

#[test]
fn partitions_are_bitwise_transparent() {
    let baseline = run(&random_config(None), None).unwrap().final_state;
    let variants = [
        PartitionConfig { nodes: 1, ratio: None, fraction: None },
        PartitionConfig { nodes: 4, ratio: None, fraction: None },
        PartitionConfig { nodes: 2, ratio: Some(1.6), fraction: None },
        PartitionConfig { nodes: 3, ratio: None, fraction: Some(0.5) },
    ];
    for p in variants {
        let got = run(&random_config(Some(p.clone())), None).unwrap().final_state;
        assert!(got.iter().zip(&baseline).all(|(a, b)| a.to_bits() == b.to_bits()), "{p:?}");
    }
}

#[test]
fn device_split_produces_shared_faces() {
    let mesh = build_mesh(&MeshConfig::brick(2, 1.0)).unwrap();
    let p = nested_partition(&mesh, 1, &FractionBalancer(0.3)).unwrap();
    let d = Discretization::new(mesh.clone(), 2, &[acoustic()], Boundary::free(), Some(&p)).unwrap();
    let dev = p.device_sets[0][0];
    assert_eq!(d.part_of(dev), 1);
    let shared = (0..mesh.len()).flat_map(|e| (0..6).map(move |f| (e, f))).filter(|&(e, f)| d.face_class(e, f) == FaceClass::Shared).count();
    assert_eq!(shared, 2 * p.shared_faces[0].len());

    let wrong = NestedPartition::host_only(splice_small());
    assert!(Discretization::new(mesh, 2, &[acoustic()], Boundary::free(), Some(&wrong)).is_err());
}

fn splice_small() -> crate::partition::NodePartition {
    let mesh = build_mesh(&MeshConfig::brick(1, 1.0)).unwrap();
    splice(&mesh, 2).unwrap()
}

#[test]
fn zero_initial_condition_stays_zero() {
    let mut cfg = random_config(Some(PartitionConfig { nodes: 2, ratio: Some(1.0), fraction: None }));
    cfg.initial = InitialCondition::Zero;
    let out = run(&cfg, None).unwrap();
    assert!(out.final_state.iter().all(|&x| x == 0.0));
    assert!(out.energies.iter().all(|&(_, _, e)| e == 0.0));
}

#[test]
fn gaussian_pulse_energy_never_increases() {
    let cfg = SolveConfig {
        order: 3,
        mesh: MeshConfig::brick(2, 0.25),
        materials: vec![crate::physics::MaterialSpec { rho: 1.0, cp: 1.0, cs: 0.0 }],
        dt: None,
        cfl: 0.5,
        steps: 40,
        initial: InitialCondition::Gaussian { center: [0.5; 3], width: 0.15, amplitude: 1.0, direction: [1.0, 0.5, 0.0] },
        boundary: BoundaryConfig::default(),
        output_every: 0,
        partition: None,
    };
    let out = run(&cfg, None).unwrap();
    for w in out.energies.windows(2) {
        assert!(w[1].2 <= w[0].2 * (1.0 + 1e-12), "{:?} -> {:?}", w[0], w[1]);
    }
    assert!(out.energies.last().unwrap().2 > 0.5 * out.energies[0].2);
}

#[test]
fn non_finite_state_is_reported_with_element() {
    // The centre node of an N = 2 element touches no face, so the NaN stays
    // inside element 5.
    let d = disc(MeshConfig::brick(1, 1.0), 2, &[acoustic()], Boundary::free(), None);
    let mut q = vec![0.0; d.state_len()];
    q[5 * d.element_len() + 9 * 27 + 13] = f64::NAN;
    let mut rate = vec![0.0; q.len()];
    let err = d.rhs(0.0, &q, &mut rate, &mut Workspace::default(), &mut KernelTimes::default());
    assert!(matches!(err, Err(Error::NonFiniteRate { element: 5 })));
}

#[test]
fn config_validation_and_cfl_warning() {
    let mut cfg = random_config(None);
    cfg.steps = 0;
    assert!(Simulation::new(&cfg).is_err());
    let mut cfg = random_config(None);
    cfg.dt = Some(1.0);
    let (_, warnings) = Simulation::new(&cfg).unwrap();
    assert_eq!(warnings.len(), 1);
    let mut cfg = random_config(None);
    cfg.boundary.traction = TractionKind::Exact;
    assert!(Simulation::new(&cfg).is_err());
    let mut cfg = random_config(None);
    cfg.initial = InitialCondition::PlaneWave { axis: 0, forward: true, profile: Profile::Polynomial { coeffs: vec![1.0] } };
    assert!(Simulation::new(&cfg).is_err(), "two materials are not homogeneous");

    let json = r#"{"order": 2, "mesh": {"trees": [{"origin": [0,0,0], "material_id": 0}], "level": 1, "element_size": 1.0},
        "materials": [{"rho": 1, "cp": 1, "cs": 0}], "initial": {"kind": "zero"}}"#;
    let cfg: SolveConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.steps, 118);
    assert_eq!(cfg.cfl, 0.5);
    assert!(serde_json::from_str::<SolveConfig>(&json.replace("\"order\"", "\"ordr\"")).is_err());
}

#[test]
fn kernel_timers_cover_partitioned_runs() {
    let cfg = random_config(Some(PartitionConfig { nodes: 2, ratio: Some(1.0), fraction: None }));
    let out = run(&cfg, None).unwrap();
    for k in Kernel::ALL {
        assert!(out.timers[k] > 0.0, "{k} was never timed");
    }
    let csv = out.kernel_times_csv();
    assert!(csv.starts_with("kernel,N,K,seconds\nvolume_loop,2,128,"));
    assert_eq!(csv.lines().count(), 8);
    assert!(out.energy_csv().starts_with("step,time,energy\n0,0e0,"));
}

#[test]
fn run_writes_outputs() {
    let dir = std::env::temp_dir().join(format!("nestpart-solve-{}", std::process::id()));
    let mut cfg = random_config(None);
    cfg.output_every = 4;
    let out = run(&cfg, Some(&dir)).unwrap();
    assert_eq!(out.snapshots, vec!["snapshot_000004.bin", "snapshot_000006.bin"]);
    let snap = read_snapshot(&dir.join("snapshot_000006.bin")).unwrap();
    assert_eq!(snap.to_element_major(), out.final_state);
    let energy = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 1 + 7);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn free_surface_reflection() {
    let profile = Profile::Gaussian { amplitude: 1.0, center: 0.5, width: 0.1 };
    let cfg = SolveConfig {
        order: 6,
        mesh: MeshConfig::brick(2, 0.25),
        materials: vec![crate::physics::MaterialSpec { rho: 1.0, cp: 1.0, cs: 0.0 }],
        dt: Some(1.0 / 400.0),
        cfl: 0.5,
        steps: 400,
        initial: InitialCondition::FreeSurface { position: 1.0, profile },
        boundary: BoundaryConfig { traction: TractionKind::Exact, free_directions: vec![1] },
        output_every: 0,
        partition: None,
    };
    let (mut sim, warnings) = Simulation::new(&cfg).unwrap();
    assert!(warnings.is_empty());
    for _ in 0..cfg.steps {
        sim.advance().unwrap();
    }
    // After one transit the reflected pulse is centred back at x = 0.5,
    // which is an element vertex.
    let d = &sim.disc;
    let mut peak = None;
    for e in 0..d.element_count() {
        for node in 0..d.reference().volume_nodes() {
            let x = d.node_position(e, node);
            if (x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12 && (x[2] - 0.5).abs() < 1e-12 {
                peak = Some(d.state_at(&sim.q, e, node));
            }
        }
    }
    let peak = peak.unwrap();
    let (_, rv) = velocity_coefficients(&acoustic(), None);
    // Incident velocity peak is -c A = -1; the reflected one is rv times that
    // travelling left, and its strain is v / c.
    let v_expected = -rv;
    let e_expected = v_expected / 1.0;
    assert!((peak.v[0] - v_expected).abs() < 1e-3, "velocity {}", peak.v[0]);
    assert!((peak.e[0][0] - e_expected).abs() < 1e-3, "strain {}", peak.e[0][0]);
    // The strain flips sign on reflection.
    assert!((peak.e[0][0] / 1.0 + 1.0).abs() < 1e-3);
    assert!(sim.l2_error().unwrap() < 1e-3);
    assert!(constitutive(&acoustic(), &peak.e)[0][0] < 0.0);
}
