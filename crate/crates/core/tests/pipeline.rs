use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use syncgames::games::SyncGame;
use syncgames::gf2::BinaryLinearSystem;
use syncgames::matops::{self, CMatrix};
use syncgames::rounding::{orthogonalize_family, RoundingOptions};
use syncgames::solutiongroup::{magic_square_pauli_rep, rep_from_strategy, strategy_from_rep, verify_rep};
use syncgames::strategies::{
    bipartite_from_tracial, correlation_from_bipartite, correlation_from_tracial, decompose_qs,
    is_perfect, losing_mass, BipartiteStrategy, Correlation, OperatorStrategy, QsOptions,
};

fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d);
    for r in 0..d {
        for c in 0..d {
            m[(r, c)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    (&m + &m.adjoint()).scale_re(0.5)
}

#[test]
fn perturbed_magic_square_strategy_rounds_to_near_perfect_pvms() {
    let sys = BinaryLinearSystem::magic_square();
    let game = SyncGame::synbcs(&sys).unwrap();
    let exact = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
    let rng = std::cell::RefCell::new(ChaCha8Rng::seed_from_u64(7));
    let m = exact.n_outputs();
    let noisy = exact.map_matrices(4, |e| {
        let u = matops::expi(&random_hermitian(&mut *rng.borrow_mut(), 4), 1e-4).unwrap();
        let rotated = &(&u * e) * &u.adjoint();
        (&rotated.scale_re(1.0 - 1e-4) + &CMatrix::identity(4).scale_re(0.5e-4)).hermitian_part()
    });
    assert!(noisy.validate(1e-9).is_err());

    let mut fixed = OperatorStrategy::new(4, noisy.n_inputs(), m);
    for x in 0..noisy.n_inputs() {
        let row: Vec<CMatrix> = (0..m).map(|a| noisy.get_or_zero(x, a)).collect();
        let (qs, rep) = orthogonalize_family(&row, true, RoundingOptions::default()).unwrap();
        assert!(rep.within_budget);
        for (a, q) in qs.into_iter().enumerate() {
            fixed.set(x, a, q);
        }
    }
    fixed.validate(1e-12).unwrap();
    let c = correlation_from_tracial(&fixed, 1e-9).unwrap();
    // each input is rounded on its own, so cross-input relations stay approximate
    let lost = losing_mass(&c, &game).unwrap();
    assert!(lost > 0.0 && lost < 1e-6, "losing mass {lost}");
    let rep = rep_from_strategy(&exact, &sys, 1e-9).unwrap();
    assert!(verify_rep(&rep, &sys, 1e-9).unwrap().pass);
}

#[test]
fn mixture_of_two_tracial_strategies_decomposes() {
    let sys = BinaryLinearSystem::magic_square();
    let game = SyncGame::synbcs(&sys).unwrap();
    let quantum = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
    let dq = quantum.dim();
    let classical = OperatorStrategy::deterministic(&vec![0; quantum.n_inputs()], quantum.n_outputs());
    let a = bipartite_from_tracial(&quantum);
    let b = bipartite_from_tracial(&classical);
    let t = 0.7;
    let total = dq + 1;
    let mut alice = OperatorStrategy::new(total, quantum.n_inputs(), quantum.n_outputs());
    let mut bob = OperatorStrategy::new(total, quantum.n_inputs(), quantum.n_outputs());
    for x in 0..quantum.n_inputs() {
        for o in 0..quantum.n_outputs() {
            alice.set(x, o, a.alice.get_or_zero(x, o).direct_sum(&b.alice.get_or_zero(x, o)));
            bob.set(x, o, a.bob.get_or_zero(x, o).direct_sum(&b.bob.get_or_zero(x, o)));
        }
    }
    let mut state = vec![Complex64::new(0.0, 0.0); total * total];
    for k in 0..dq {
        state[k * total + k] = Complex64::from((t / dq as f64).sqrt());
    }
    state[dq * total + dq] = Complex64::from((1.0 - t).sqrt());
    let mixed = BipartiteStrategy::new(alice, bob, state).unwrap();
    let dec = decompose_qs(&mixed, QsOptions::default()).unwrap();
    assert_eq!(dec.blocks.len(), 2);
    let mut weights: Vec<f64> = dec.blocks.iter().map(|b| b.weight).collect();
    weights.sort_by(f64::total_cmp);
    assert!((weights[0] - 0.3).abs() < 1e-10 && (weights[1] - 0.7).abs() < 1e-10);
    let parts: Vec<(f64, Correlation)> = dec.blocks.iter().map(|b| (b.weight, b.correlation.clone())).collect();
    let recombined = Correlation::convex_combination(&parts).unwrap();
    let direct = correlation_from_bipartite(&mixed, 1e-9).unwrap();
    assert!(recombined.max_diff(&direct).unwrap() < 1e-10);
    let quantum_block = dec.blocks.iter().find(|b| b.strategy.dim() == dq).unwrap();
    assert!(is_perfect(&quantum_block.correlation, &game, 1e-9).unwrap());
}
