//! Randomized invariants shared by the property tests and the acceptance run.

#![allow(dead_code)]

use bkgraph_core::extensions::{
    kuchment_decompose, s_matrix_bk, s_matrix_bk2, standard_bc, validate_extension, BoundaryCondition,
    DilationMatrices, ExtensionSpec,
};
use bkgraph_core::graph::{enumerate_orbits, BondPattern, MetricEdge, MetricGraph};
use bkgraph_core::linalg::{self, c64};
use bkgraph_core::spectra::{zero_mode_test, ScanOptions, Scanner, SecularSystem};
use bkgraph_core::{CMatrix, Complex64, OperatorKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0x5eed_b0b0;
const PI: f64 = std::f64::consts::PI;

pub fn config() -> Config {
    Config { cases: 200, rng_seed: RngSeed::Fixed(SEED), failure_persistence: None, ..Config::default() }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary_with_phases(rng: &mut ChaCha8Rng, phases: &[f64]) -> CMatrix {
    let n = phases.len();
    let g = random_matrix(rng, n);
    let (_, q) = linalg::hermitian_eigen(&(&g + g.adjoint()));
    let d = linalg::diag(&phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect::<Vec<_>>());
    &q * d * q.adjoint()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    random_unitary_with_phases(rng, &phases)
}

/// Well-conditioned random gauge matrix.
fn random_gauge(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    loop {
        let c = random_matrix(rng, n) + linalg::identity(n) * c64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let sv = linalg::singular_values(&c);
        if sv[n - 1] > 0.2 * sv[0] {
            return c;
        }
    }
}

/// Random edges `[a, a e^ℓ]` between a pool of vertices.
pub fn random_graph(rng: &mut ChaCha8Rng, edges: usize) -> MetricGraph {
    let pool = rng.gen_range(1..=edges.max(2));
    let list = (0..edges)
        .map(|j| {
            let a = rng.gen_range(0.5..2.0);
            let l: f64 = rng.gen_range(0.3..2.5);
            let from = format!("v{}", rng.gen_range(0..pool));
            let to = format!("v{}", rng.gen_range(0..pool));
            MetricEdge::new(format!("e{j}"), from, to, a, a * l.exp())
        })
        .collect();
    MetricGraph::new(list).unwrap()
}

/// Random BK2 boundary data `A = I - U`, `B = i(I + U)`; some eigenphases of
/// `U` are pinned to `π`, which produces Dirichlet-type directions.
pub fn random_bk2_matrices(rng: &mut ChaCha8Rng, m: usize) -> (CMatrix, CMatrix) {
    let pinned = rng.gen_range(0..=m / 2);
    let phases: Vec<f64> = (0..m).map(|i| if i < pinned { PI } else { rng.gen_range(-3.0..3.0) }).collect();
    let u = random_unitary_with_phases(rng, &phases);
    let id = linalg::identity(m);
    (&id - &u, (&id + &u) * c64(0.0, 1.0))
}

enum Bk2Case {
    Random,
    Named(BoundaryCondition),
}

fn random_bk2_spec(rng: &mut ChaCha8Rng, graph: &MetricGraph) -> ExtensionSpec {
    let m = 2 * graph.edge_count();
    let case = match rng.gen_range(0..6) {
        0 => Bk2Case::Named(BoundaryCondition::Neumann),
        1 => Bk2Case::Named(BoundaryCondition::Kirchhoff),
        2 => Bk2Case::Named(BoundaryCondition::Dirichlet),
        3 => Bk2Case::Named(BoundaryCondition::Robin((0..m).map(|_| rng.gen_range(-2.0..2.0)).collect())),
        _ => Bk2Case::Random,
    };
    match case {
        Bk2Case::Named(bc) => standard_bc(&bc, graph).unwrap(),
        Bk2Case::Random => {
            let (a, b) = random_bk2_matrices(rng, m);
            validate_extension(a, b, OperatorKind::Bk2).unwrap()
        }
    }
}

fn gauged(spec: &ExtensionSpec, c: &CMatrix) -> ExtensionSpec {
    validate_extension(c * &spec.a, c * &spec.b, spec.kind).unwrap()
}

fn wrap(x: f64) -> f64 {
    let t = x.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Eigenphase velocities of `U(k)` by central differences, matched to the
/// eigenvalues at `k`; `None` if two eigenvalues are too close to match.
fn fd_rates(sys: &SecularSystem, k: f64, h: f64) -> Option<(Vec<Complex64>, CMatrix, Vec<f64>)> {
    let (vals, vecs) = linalg::normal_eigen(&sys.evolution(c64(k, 0.0)).unwrap());
    let n = vals.len();
    for i in 0..n {
        for j in 0..i {
            if (vals[i] - vals[j]).norm() < 1e-3 {
                return None;
            }
        }
    }
    let plus = linalg::normal_eigenvalues(&sys.evolution(c64(k + h, 0.0)).unwrap());
    let minus = linalg::normal_eigenvalues(&sys.evolution(c64(k - h, 0.0)).unwrap());
    let nearest = |set: &[Complex64], z: Complex64| {
        *set.iter().min_by(|a, b| (**a - z).norm().total_cmp(&(**b - z).norm())).unwrap()
    };
    let rates = vals.iter().map(|&z| wrap((nearest(&plus, z) / nearest(&minus, z)).arg()) / (2.0 * h)).collect();
    Some((vals, vecs, rates))
}

pub fn bk_s_matrix_unitary(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_unitary(&mut rng, e);
    let spec = ExtensionSpec::from_scattering(&s).unwrap();
    let back = s_matrix_bk(&spec).unwrap();
    prop_assert!(linalg::unitarity_residual(&back) <= 1e-12);
    prop_assert!(linalg::max_abs(&(&back - &s)) <= 1e-12);
    let id = linalg::identity(e);
    let u = random_unitary(&mut rng, e);
    let spec = validate_extension(&id - &u, (&id + &u) * c64(0.0, 1.0), OperatorKind::Bk).unwrap();
    prop_assert!(linalg::unitarity_residual(&s_matrix_bk(&spec).unwrap()) <= 1e-12);
    Ok(())
}

pub fn bk2_s_matrix_unitary(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, e);
    let spec = random_bk2_spec(&mut rng, &graph);
    let dec = kuchment_decompose(&spec, &DilationMatrices::new(&graph)).unwrap();
    for k in [0.1, 1.0, 10.0, 100.0, rng.gen_range(-50.0..50.0)] {
        let s = s_matrix_bk2(&dec, c64(k, 0.0)).unwrap();
        prop_assert!(linalg::unitarity_residual(&s) <= 1e-12, "k = {k}");
    }
    let sys = SecularSystem::new(&graph, &spec).unwrap();
    let k = rng.gen_range(-30.0..30.0);
    for z in linalg::normal_eigenvalues(&sys.evolution(c64(k, 0.0)).unwrap()) {
        prop_assert!((z.norm() - 1.0).abs() <= 1e-10);
    }
    Ok(())
}

pub fn gauge_invariance(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_unitary(&mut rng, e);
    let spec = ExtensionSpec::from_scattering(&s).unwrap();
    let c = random_gauge(&mut rng, e);
    let moved = s_matrix_bk(&gauged(&spec, &c)).unwrap();
    prop_assert!(linalg::max_abs(&(&moved - &s)) <= 1e-10);

    let graph = random_graph(&mut rng, e);
    let spec = random_bk2_spec(&mut rng, &graph);
    let dil = DilationMatrices::new(&graph);
    let c = random_gauge(&mut rng, 2 * e);
    let d0 = kuchment_decompose(&spec, &dil).unwrap();
    let d1 = kuchment_decompose(&gauged(&spec, &c), &dil).unwrap();
    for k in [0.1, 1.0, 10.0, rng.gen_range(0.01..20.0)] {
        let diff = s_matrix_bk2(&d0, c64(k, 0.0)).unwrap() - s_matrix_bk2(&d1, c64(k, 0.0)).unwrap();
        prop_assert!(linalg::max_abs(&diff) <= 1e-10, "k = {k}");
    }
    Ok(())
}

pub fn bk_eigenphase_velocity(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, e);
    let sys = SecularSystem::from_scattering(&graph, random_unitary(&mut rng, e)).unwrap();
    let (lmin, lmax) = (sys.min_length(), sys.max_length());
    let k = rng.gen_range(-20.0..20.0);
    if let Some((_, vecs, rates)) = fd_rates(&sys, k, 1e-6) {
        for (i, fd) in rates.iter().enumerate() {
            let u = vecs.column(i);
            let exact: f64 =
                sys.lengths().iter().enumerate().map(|(j, l)| l * u[j].norm_sqr()).sum::<f64>() / u.norm_squared();
            prop_assert!(exact >= lmin * (1.0 - 1e-12) && exact <= lmax * (1.0 + 1e-12));
            prop_assert!((fd - exact).abs() <= 1e-4 * exact, "fd {fd} exact {exact}");
        }
    }
    Ok(())
}

pub fn bk2_eigenphase_velocity_bounds(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, e);
    let sys = SecularSystem::new(&graph, &random_bk2_spec(&mut rng, &graph)).unwrap();
    let k = rng.gen_range(0.2..20.0);
    let h = 1e-6;
    let (lo, hi) = sys.phase_rate_bounds(k - h, k + h);
    if let Some((_, _, rates)) = fd_rates(&sys, k, h) {
        for fd in rates {
            let slack = 1e-4 * lo.abs().max(hi.abs());
            prop_assert!(fd >= lo - slack && fd <= hi + slack, "fd {fd} bounds ({lo}, {hi})");
        }
    }
    Ok(())
}

pub fn bk2_plus_minus_symmetry(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, e);
    let sys = SecularSystem::new(&graph, &random_bk2_spec(&mut rng, &graph)).unwrap();
    for _ in 0..4 {
        let k = rng.gen_range(0.05..40.0);
        let f = sys.secular(c64(k, 0.0)).unwrap();
        let g = sys.secular(c64(-k, 0.0)).unwrap();
        prop_assert!((g - f.conj()).norm() <= 1e-9 * (1.0 + f.norm()), "k = {k}");
    }
    let kmax = rng.gen_range(3.0..8.0);
    let scanner = Scanner::new(&sys, -kmax, kmax, ScanOptions::default()).unwrap();
    let spec = scanner.assemble(vec![scanner.scan(0..scanner.interval_count()).unwrap()]).unwrap();
    let neg: Vec<_> = spec.levels.iter().filter(|l| l.k < 0.0).collect();
    let pos: Vec<_> = spec.levels.iter().filter(|l| l.k > 0.0).collect();
    prop_assert_eq!(neg.len(), pos.len());
    for (a, b) in neg.iter().rev().zip(&pos) {
        prop_assert!((a.k + b.k).abs() <= 1e-9);
        prop_assert_eq!(a.multiplicity, b.multiplicity);
    }
    Ok(())
}

pub fn zero_mode_probe_independent(seed: u64, e: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(&mut rng, e);
    let neumann = rng.gen_bool(0.25);
    let spec = if neumann {
        standard_bc(&BoundaryCondition::Neumann, &graph).unwrap()
    } else {
        random_bk2_spec(&mut rng, &graph)
    };
    let sys = SecularSystem::new(&graph, &spec).unwrap();
    let zm = zero_mode_test(&sys, 1.0).unwrap();
    prop_assert!(zm.probe_consistent, "{zm:?}");
    if neumann {
        prop_assert!(zm.g0 >= 1);
    }
    Ok(())
}

pub fn orbit_lengths_and_amplitudes(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_unitary(&mut rng, n);
    let keep: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.6)).collect();
    let pattern = BondPattern::from_fn(n, |from, to| keep[to * n + from]);
    let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let orbits = enumerate_orbits(&pattern, &lengths, 4.0).unwrap();
    for o in &orbits {
        let sum: f64 = o.bonds.iter().map(|&b| lengths[b]).sum();
        prop_assert!((o.length - sum).abs() <= 1e-12);
        prop_assert!((o.length - o.repetition as f64 * o.primitive_length).abs() <= 1e-12);
        let p = o.bonds.len() / o.repetition;
        let primitive = bkgraph_core::graph::PeriodicOrbit {
            bonds: o.bonds[..p].to_vec(),
            length: o.primitive_length,
            primitive_length: o.primitive_length,
            repetition: 1,
        };
        let want = primitive.product(&s).powi(o.repetition as i32);
        prop_assert!((o.product(&s) - want).norm() <= 1e-12);
    }
    Ok(())
}

/// A named invariant checked on `(seed, size)` with `size` in `1..=max_size`.
pub struct Suite {
    pub name: &'static str,
    pub max_size: usize,
    pub check: fn(u64, usize) -> Result<(), TestCaseError>,
}

pub const SUITES: [Suite; 8] = [
    Suite { name: "bk_s_matrix_unitary", max_size: 5, check: bk_s_matrix_unitary },
    Suite { name: "bk2_s_matrix_unitary", max_size: 4, check: bk2_s_matrix_unitary },
    Suite { name: "gauge_invariance", max_size: 4, check: gauge_invariance },
    Suite { name: "bk_eigenphase_velocity", max_size: 5, check: bk_eigenphase_velocity },
    Suite { name: "bk2_eigenphase_velocity_bounds", max_size: 3, check: bk2_eigenphase_velocity_bounds },
    Suite { name: "bk2_plus_minus_symmetry", max_size: 3, check: bk2_plus_minus_symmetry },
    Suite { name: "zero_mode_probe_independent", max_size: 4, check: zero_mode_probe_independent },
    Suite { name: "orbit_lengths_and_amplitudes", max_size: 4, check: orbit_lengths_and_amplitudes },
];

/// Run one suite with the fixed configuration; the error names the
/// minimal failing input.
pub fn run_suite(suite: &Suite) -> Result<(), String> {
    let mut runner = TestRunner::new(config());
    runner.run(&(any::<u64>(), 1..=suite.max_size), |(seed, size)| (suite.check)(seed, size)).map_err(|e| match e {
        TestError::Fail(why, (seed, size)) => format!("{}: seed {seed}, size {size}: {why}", suite.name),
        TestError::Abort(why) => format!("{}: aborted: {why}", suite.name),
    })
}

pub fn suite(name: &str) -> &'static Suite {
    SUITES.iter().find(|s| s.name == name).expect("known suite")
}
