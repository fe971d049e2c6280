use krein_shift::findim_oracle::{
    check_r1_1, check_r1_2, orbit_ratio_max, quasi_triangular, random_orthogonal, s_subspace,
    schur_operator, Block, SmallOperator, SubspaceBasis,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OUTSIDE: std::ops::Range<f64> = 1.1..2.5;
/// Roundoff in a computed basis grows like |λ|^60 under the brute-force orbit scan.
const OUTSIDE_MODERATE: std::ops::Range<f64> = 1.2..1.6;

/// Moduli at least 0.05 below `c = 1`, or in `outside`.
fn random_block<R: Rng>(rng: &mut R, inside: bool, outside: std::ops::Range<f64>) -> Block {
    let modulus = if inside { rng.gen_range(0.1..0.95) } else { rng.gen_range(outside) };
    if rng.gen_bool(0.3) {
        Block::Rotation {
            modulus,
            angle: rng.gen_range(0.2..2.9),
        }
    } else if rng.gen_bool(0.5) {
        Block::Real(modulus)
    } else {
        Block::Real(-modulus)
    }
}

fn random_blocks<R: Rng>(rng: &mut R, dim: usize, outside: std::ops::Range<f64>) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut size = 0;
    while size < dim {
        let inside = rng.gen_bool(0.5);
        let mut b = random_block(rng, inside, outside.clone());
        if size + b.size() > dim {
            b = Block::Real(b.modulus());
        }
        size += b.size();
        blocks.push(b);
    }
    blocks
}

fn random_operator<R: Rng>(rng: &mut R, dim: usize, outside: std::ops::Range<f64>) -> (SmallOperator, Vec<Block>) {
    let blocks = random_blocks(rng, dim, outside);
    let u = quasi_triangular(rng, &blocks, 0.5);
    let q = random_orthogonal(rng, dim);
    (schur_operator(&q, &u, 0).unwrap().0, blocks)
}

#[test]
fn r1_2_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..100 {
        let (t1, _) = random_operator(&mut rng, 3, OUTSIDE);
        let (t2, _) = random_operator(&mut rng, 4, OUTSIDE);
        let r = check_r1_2(&t1, &t2, 1.0).unwrap();
        assert!(r.pass, "trial {trial}: {r:?}");
    }
}

#[test]
fn r1_1_random_schur_subspaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut applicable = 0;
    for trial in 0..100 {
        let dim = rng.gen_range(2..=6);
        let mut blocks = random_blocks(&mut rng, dim, OUTSIDE);
        // inside blocks first, so the leading invariant subspace usually has r <= c
        if trial % 2 == 0 {
            blocks.sort_by(|a, b| a.modulus().partial_cmp(&b.modulus()).unwrap());
        }
        let cuts: Vec<usize> = blocks.iter().scan(0, |s, b| { *s += b.size(); Some(*s) }).collect();
        let leading = cuts[rng.gen_range(0..cuts.len())];
        let u = quasi_triangular(&mut rng, &blocks, 0.5);
        let q = random_orthogonal(&mut rng, dim);
        let (t, l) = schur_operator(&q, &u, leading).unwrap();
        let r = check_r1_1(&t, &l, 1.0, 0.01).unwrap();
        assert!(r.pass, "trial {trial}: {r:?}");
        applicable += r.applicable as usize;
    }
    assert!(applicable >= 30, "{applicable}");
}

#[test]
fn r1_1_triangular_example() {
    let u = DMatrix::from_row_slice(3, 3, &[0.5, 0.3, -0.2, 0.0, 0.9, 0.7, 0.0, 0.0, 2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = random_orthogonal(&mut rng, 3);
    let (t, l) = schur_operator(&q, &u, 2).unwrap();
    let r = check_r1_1(&t, &l, 1.0, 0.01).unwrap();
    assert!(r.applicable && r.pass, "{r:?}");
    assert!((r.restricted_spectral_radius - 0.9).abs() < 1e-12);
}

#[test]
fn subspace_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..60 {
        let dim = rng.gen_range(2..=8);
        let (t, _) = random_operator(&mut rng, dim, OUTSIDE_MODERATE);
        let s = s_subspace(&t, 1.0).unwrap();
        assert!(s.orthonormality_defect() <= 1e-12);
        // T-invariance
        let p = s.projector();
        let leak = (DMatrix::identity(dim, dim) - &p) * t.matrix() * &p;
        assert!(leak.norm() <= 1e-9, "{}", leak.norm());
        // monotone in c
        let bigger = s_subspace(&t, 1.07).unwrap();
        assert!(bigger.containment_residual(&s) <= 1e-9);
        // brute force: members stay bounded, a random outsider escapes
        for x in s.basis().column_iter() {
            assert!(orbit_ratio_max(&t, &x.into_owned(), 1.0, 0..=60) <= 1e6);
        }
        if s.dim() < dim {
            let x = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            assert!(orbit_ratio_max(&t, &x, 1.0, 0..=200) > 1e6);
        }
    }
}

#[test]
fn spectral_radius_contrapositive() {
    // all eigenvalues on |λ| = 2: S(T, 2 − δ) = {0}, so every invariant subspace keeps r = 2
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let blocks = [
            Block::Rotation { modulus: 2.0, angle: rng.gen_range(0.2..2.9) },
            Block::Real(-2.0),
            Block::Rotation { modulus: 2.0, angle: rng.gen_range(0.2..2.9) },
            Block::Real(2.0),
        ];
        let u = quasi_triangular(&mut rng, &blocks, 0.4);
        let q = random_orthogonal(&mut rng, 6);
        let (t, _) = schur_operator(&q, &u, 0).unwrap();
        let r = t.spectral_radius();
        for delta in [1e-3, 0.1, 0.5] {
            assert_eq!(s_subspace(&t, r - delta).unwrap().dim(), 0);
        }
        for leading in [2, 3, 5, 6] {
            let (t1, l1) = schur_operator(&q, &u, leading).unwrap();
            let restricted = SmallOperator::new(l1.basis().transpose() * t1.matrix() * l1.basis()).unwrap();
            assert!((restricted.spectral_radius() - r).abs() < 1e-9);
        }
    }
}

#[test]
fn boundary_jordan_block() {
    let t = SmallOperator::from_row_slice(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3]).unwrap();
    let s = s_subspace(&t, 1.0).unwrap();
    assert_eq!(s.dim(), 2);
    let e1 = SubspaceBasis::from_spanning(&DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]), 1e-12);
    assert!(e1.containment_residual(&s) < 1e-9 && s.containment_residual(&e1) < 1e-9);
}
