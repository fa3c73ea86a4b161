//! Generators and structural checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use nca_core::dynamics::{rollout, step, AsyncSampling, UpdateMode};
use nca_core::grid::{Boundary, Grid, GridShape, ResetRule, ALPHA, CHANNELS};
use nca_core::lineage::{read_egg, transplant, DnaVector, EggGeometry};
use nca_core::{RngStream, UpdateNetwork};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn random_grid(seed: u64, h: usize, w: usize, boundary: Boundary, density: f64) -> Grid {
    let mut rng = RngStream::with_stream(seed, 1);
    let mut g = Grid::new(h, w, boundary).unwrap();
    for i in 0..h * w {
        if rng.uniform() < density {
            let cell = g.cell_at_mut(i);
            for v in cell.iter_mut() {
                *v = rng.uniform_range(-1.0, 1.0) as f32;
            }
            cell[ALPHA] = rng.uniform_range(0.1, 1.0) as f32;
        }
    }
    g.with_dead_reset()
}

/// Network with a non-zero output layer so steps actually change the grid.
pub fn random_net(seed: u64, hidden: usize, scale: f64) -> UpdateNetwork {
    let mut rng = RngStream::with_stream(seed, 2);
    let mut net = UpdateNetwork::zeros(hidden).unwrap();
    for t in net.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.uniform_range(-scale, scale) as f32;
        }
    }
    net
}

pub fn mode_strategy() -> impl Strategy<Value = UpdateMode> {
    prop_oneof![
        Just(UpdateMode::synchronous()),
        (0.05f64..=1.0).prop_map(|r| UpdateMode::asynchronous(r).unwrap()),
        (0.05f64..=1.0).prop_map(|r| UpdateMode::asynchronous(r).unwrap().with_sampling(AsyncSampling::ExactFraction)),
    ]
}

fn dead_cells_zeroed(g: &Grid, before: &Grid, rule: ResetRule) -> bool {
    let keep = g.survivors(before, rule);
    g.data()
        .chunks_exact(CHANNELS)
        .zip(keep)
        .all(|(c, k)| k || c.iter().all(|&v| v == 0.0))
}

pub type BoundsCase = (u64, usize, usize, bool, UpdateMode, f64);

pub fn bounds_cases() -> impl Strategy<Value = BoundsCase> {
    (any::<u64>(), 1usize..10, 1usize..10, any::<bool>(), mode_strategy(), 0.05f64..1.5)
}

/// Every step keeps values in [-1, 1] and leaves reset cells all-zero.
pub fn check_bounds_and_dead((seed, h, w, padded, mode, scale): BoundsCase) -> Result<(), TestCaseError> {
    let boundary = if padded { Boundary::ZeroPadded } else { Boundary::Torus };
    let net = random_net(seed, 6, scale);
    let mut rng = RngStream::new(seed);
    for rule in [ResetRule::Cell, ResetRule::Neighborhood] {
        let mode = mode.with_reset(rule);
        let mut g = random_grid(seed, h, w, boundary, 0.5);
        for _ in 0..6 {
            let next = step(&g, &net, &mode, &mut rng);
            prop_assert!(next.data().iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert!(dead_cells_zeroed(&next, &g, rule));
            if rule == ResetRule::Cell {
                prop_assert!(next
                    .data()
                    .chunks_exact(CHANNELS)
                    .all(|c| c[ALPHA] > 0.1 || c.iter().all(|&v| v == 0.0)));
            }
            g = next;
        }
    }
    Ok(())
}

pub type ShiftCase = (u64, usize, usize, isize, isize, bool);

pub fn shift_cases() -> impl Strategy<Value = ShiftCase> {
    (any::<u64>(), 1usize..10, 1usize..10, -12isize..12, -12isize..12, any::<bool>())
}

/// A synchronous step commutes exactly with a torus roll.
pub fn check_shift_equivariance((seed, h, w, dr, dc, neighborhood): ShiftCase) -> Result<(), TestCaseError> {
    let rule = if neighborhood { ResetRule::Neighborhood } else { ResetRule::Cell };
    let mode = UpdateMode::synchronous().with_reset(rule);
    let g = random_grid(seed, h, w, Boundary::Torus, 0.4);
    let net = random_net(seed, 8, 0.5);
    let a = step(&g, &net, &mode, &mut RngStream::new(0)).shifted(dr, dc);
    let b = step(&g.shifted(dr, dc), &net, &mode, &mut RngStream::new(0));
    prop_assert_eq!(a.data(), b.data());
    Ok(())
}

pub type DeadCase = (u64, usize, usize, UpdateMode);

pub fn dead_cases() -> impl Strategy<Value = DeadCase> {
    (any::<u64>(), 1usize..12, 1usize..12, mode_strategy())
}

pub fn check_dead_fixed_point((seed, h, w, mode): DeadCase) -> Result<(), TestCaseError> {
    let g = Grid::new(h, w, Boundary::Torus).unwrap();
    let net = random_net(seed, 4, 2.0);
    let out = rollout(&g, &net, 10, &mode, &mut RngStream::new(seed));
    prop_assert!(out.data().iter().all(|&v| v == 0.0));
    Ok(())
}

pub type DnaCase = (u64, usize, usize, usize, usize);

pub fn dna_cases() -> impl Strategy<Value = DnaCase> {
    (any::<u64>(), 1usize..5, 0usize..8, 0usize..8, 0usize..8)
}

pub fn check_dna_round_trip((seed, side, extra, row_off, col_off): DnaCase) -> Result<(), TestCaseError> {
    let n = side + extra + 1;
    let shape = GridShape::new(n, n, Boundary::Torus).unwrap();
    let canonical = (row_off % (n - side + 1), col_off % (n - side + 1));
    let geo = EggGeometry {
        side,
        canonical,
        division: (0, 0),
    };
    let mut rng = RngStream::new(seed);
    let dna = DnaVector((0..side * side * CHANNELS).map(|_| rng.uniform_range(-1.0, 1.0) as f32).collect());
    let grid = transplant(&dna, shape, &geo).unwrap();
    prop_assert_eq!(read_egg(&grid, canonical, side), dna);
    Ok(())
}

pub type ResetCase = (u64, usize, usize);

pub fn reset_cases() -> impl Strategy<Value = ResetCase> {
    (any::<u64>(), 1usize..10, 1usize..10)
}

pub fn check_reset_idempotent((seed, h, w): ResetCase) -> Result<(), TestCaseError> {
    let mut rng = RngStream::new(seed);
    let data = (0..h * w * CHANNELS).map(|_| rng.uniform_range(-1.0, 1.0) as f32).collect();
    let g = Grid::from_data(GridShape::new(h, w, Boundary::Torus).unwrap(), data).unwrap();
    let once = g.clone().with_dead_reset();
    prop_assert_eq!(once.clone().with_dead_reset(), once);
    Ok(())
}
