//! Evaluate the training objectives on a small hand-made example.
//!
//! cargo run --example loss_kernels

use dualbev::losses::{
    focal_loss, focal_loss_batched, kl_to_standard_normal, vib_loss, FocalParams, LatentGoal, VibBatch,
};

fn main() -> dualbev::Result<()> {
    let latent = LatentGoal::from_eps(vec![0.3, -0.2], vec![-0.5, 0.1], vec![0.7, -1.1])?;
    let batch = VibBatch {
        pred_dist: 6.5,
        target_dist: 8.0,
        pred_waypoints: vec![[0.7, 0.0], [1.5, 0.1], [2.2, 0.3]],
        target_waypoints: vec![[0.75, 0.0], [1.5, 0.0], [2.25, 0.0]],
        pred_offset: [9.0, 1.0],
        target_offset: [10.0, 0.5],
        latent,
        lambda: 1.0,
        beta: 0.01,
    };
    let terms = vib_loss(&batch)?;
    println!(
        "vib: total {:.4} = dist {:.4} + action {:.4} + kl {:.4}",
        terms.total, terms.dist_term, terms.action_term, terms.kl_term
    );
    println!("kl(mu, logvar) = {:.6}", kl_to_standard_normal(&batch.latent.mu, &batch.latent.logvar)?);

    for p in [0.1, 0.5, 0.9] {
        println!("focal(p_t={p}): gamma=0 {:.5}, gamma=2 {:.5}", focal_loss(p, 0.25, 0.0)?, focal_loss(p, 0.25, 2.0)?);
    }
    let probs = [0.9, 0.2, 0.6, 0.05];
    let labels = [true, false, true, false];
    println!("batched focal {:.6}", focal_loss_batched(&probs, &labels, FocalParams::default())?);
    Ok(())
}
