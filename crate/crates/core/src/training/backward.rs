//! Reverse-mode gradients through a recorded rollout.
//!
//! The firing masks and aliveness gates are constants of the forward pass.
//! Clamping passes gradient strictly inside `(-1, 1)`; cells zeroed by the
//! dead reset pass none.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{Grid, CHANNELS, PERCEPTION};
use crate::network::UpdateNetwork;
use crate::real::Real;

use super::loss::{mse_loss_grad, LossChannels, TargetImage};

/// Loss at the end of `traj` and its gradient with respect to every network parameter.
pub fn backward<T: Real>(
    traj: &Trajectory<T>,
    net: &UpdateNetwork<T>,
    target: &TargetImage,
    channels: LossChannels,
) -> Result<(f64, UpdateNetwork<T>)> {
    let mut grads = net.zeros_like();
    let loss = accumulate_gradients(traj, net, target, channels, 1.0, &mut grads)?;
    Ok((loss, grads))
}

/// Add `scale * d(loss)/d(params)` into `grads` and return the unscaled loss.
pub fn accumulate_gradients<T: Real>(
    traj: &Trajectory<T>,
    net: &UpdateNetwork<T>,
    target: &TargetImage,
    channels: LossChannels,
    scale: f64,
    grads: &mut UpdateNetwork<T>,
) -> Result<f64> {
    let (loss, grad_final) = mse_loss_grad(&traj.final_grid, target, channels, scale)?;
    backprop(traj, net, grad_final, grads)?;
    Ok(loss)
}

/// Propagate `grad_final` (d/d final grid values) back to the initial grid,
/// accumulating parameter gradients into `grads`. Returns d/d initial grid.
pub fn backprop<T: Real>(
    traj: &Trajectory<T>,
    net: &UpdateNetwork<T>,
    grad_final: Vec<T>,
    grads: &mut UpdateNetwork<T>,
) -> Result<Vec<T>> {
    validate(traj, net, grads)?;
    let h = net.hidden_size();
    let mut g_out = grad_final;
    let mut g_in = vec![T::zero(); g_out.len()];
    let mut inputs: Vec<T> = Vec::new();
    let mut g_delta: Vec<T> = Vec::new();
    let mut g_hidden: Vec<T> = Vec::new();
    let mut g_inputs: Vec<T> = Vec::new();

    for (s, rec) in traj.steps.iter().enumerate().rev() {
        let output: &Grid<T> = traj
            .steps
            .get(s + 1)
            .map(|r| &r.input)
            .unwrap_or(&traj.final_grid);
        let shape = rec.input.shape();

        // dead reset: zeroed cells are constants
        let kept = output.survivors(&rec.input, traj.reset);
        for (g, k) in g_out.chunks_exact_mut(CHANNELS).zip(kept) {
            if !k {
                g.fill(T::zero());
            }
        }

        // identity path for every cell; fired cells overwrite it below
        g_in.copy_from_slice(&g_out);

        let n = rec.cells.len();
        if n == 0 {
            std::mem::swap(&mut g_out, &mut g_in);
            continue;
        }

        g_delta.clear();
        g_delta.resize(n * CHANNELS, T::zero());
        let (lo, hi) = (-T::one(), T::one());
        for ((gd, u), &c) in g_delta
            .chunks_exact_mut(CHANNELS)
            .zip(rec.summed.chunks_exact(CHANNELS))
            .zip(&rec.cells)
        {
            let c = c as usize;
            let go = &g_out[c * CHANNELS..(c + 1) * CHANNELS];
            for ch in 0..CHANNELS {
                gd[ch] = if u[ch] > lo && u[ch] < hi { go[ch] } else { T::zero() };
            }
            // residual: d new / d old equals d new / d delta
            g_in[c * CHANNELS..(c + 1) * CHANNELS].copy_from_slice(gd);
        }

        // layer 2
        T::gemm(
            CHANNELS,
            n,
            h,
            T::one(),
            &g_delta,
            (1, CHANNELS as isize),
            &rec.hidden,
            (h as isize, 1),
            T::one(),
            &mut grads.w2,
            (h as isize, 1),
        );
        for gd in g_delta.chunks_exact(CHANNELS) {
            for (b, &v) in grads.b2.iter_mut().zip(gd) {
                *b += v;
            }
        }
        g_hidden.clear();
        g_hidden.resize(n * h, T::zero());
        T::gemm(
            n,
            CHANNELS,
            h,
            T::one(),
            &g_delta,
            (CHANNELS as isize, 1),
            &net.w2,
            (h as isize, 1),
            T::zero(),
            &mut g_hidden,
            (h as isize, 1),
        );
        for (gh, &a) in g_hidden.iter_mut().zip(&rec.hidden) {
            if a <= T::zero() {
                *gh = T::zero();
            }
        }

        // layer 1
        inputs.clear();
        inputs.resize(n * PERCEPTION, T::zero());
        for (row, &c) in inputs.chunks_exact_mut(PERCEPTION).zip(&rec.cells) {
            rec.input.gather_neighborhood(c as usize, row);
        }
        T::gemm(
            h,
            n,
            PERCEPTION,
            T::one(),
            &g_hidden,
            (1, h as isize),
            &inputs,
            (PERCEPTION as isize, 1),
            T::one(),
            &mut grads.w1,
            (PERCEPTION as isize, 1),
        );
        for gh in g_hidden.chunks_exact(h) {
            for (b, &v) in grads.b1.iter_mut().zip(gh) {
                *b += v;
            }
        }
        g_inputs.clear();
        g_inputs.resize(n * PERCEPTION, T::zero());
        T::gemm(
            n,
            h,
            PERCEPTION,
            T::one(),
            &g_hidden,
            (h as isize, 1),
            &net.w1,
            (PERCEPTION as isize, 1),
            T::zero(),
            &mut g_inputs,
            (PERCEPTION as isize, 1),
        );
        for (gx, &c) in g_inputs.chunks_exact(PERCEPTION).zip(&rec.cells) {
            for (k, idx) in shape.window(c as usize).into_iter().enumerate() {
                if let Some(j) = idx {
                    let dst = &mut g_in[j * CHANNELS..(j + 1) * CHANNELS];
                    for (d, &v) in dst.iter_mut().zip(&gx[k * CHANNELS..(k + 1) * CHANNELS]) {
                        *d += v;
                    }
                }
            }
        }

        std::mem::swap(&mut g_out, &mut g_in);
    }
    Ok(g_out)
}

fn validate<T: Real>(
    traj: &Trajectory<T>,
    net: &UpdateNetwork<T>,
    grads: &UpdateNetwork<T>,
) -> Result<()> {
    let h = net.hidden_size();
    if grads.hidden_size() != h {
        return Err(Error::Dimension(format!(
            "gradient buffer has hidden size {}, network {}",
            grads.hidden_size(),
            h
        )));
    }
    for (s, rec) in traj.steps.iter().enumerate() {
        let n = rec.cells.len();
        if rec.hidden.len() != n * h || rec.summed.len() != n * CHANNELS {
            return Err(Error::InvalidState(format!(
                "step {s} of the trajectory was not recorded for a hidden size of {h}"
            )));
        }
        if rec.input.shape() != traj.final_grid.shape() {
            return Err(Error::InvalidState(format!("step {s} has a different grid shape")));
        }
    }
    Ok(())
}
