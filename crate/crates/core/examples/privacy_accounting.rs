//! Noise calibration and the moments accountant: one-shot mechanism
//! calibration, the iterative schedule with its variance floor, per-order
//! moment bounds, and the audit that converts a ledger back to an epsilon.

use dp_riemopt::accounting::{
    calibrate_iterative, calibrate_mechanism, moment_full, moment_subsampled, rdp_to_dp,
    MomentBound, MomentsLedger, PrivacyBudget,
};

fn main() {
    // One-shot release of a tangent-space query with sensitivity 0.5.
    let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
    let sigma2 = calibrate_mechanism(0.5, &budget).unwrap();
    println!("one-shot mechanism: sensitivity 0.5, (1, 1e-5)-DP -> sigma^2 = {sigma2:.4}");

    // Iterative calibration for a T-step run; the floor binds for tiny
    // batches.
    let budget = PrivacyBudget::new(0.5, 1e-3).unwrap();
    let roomy = calibrate_iterative(100, 1.0, 5_000, 5_000, &budget).unwrap();
    println!(
        "T=100, n=5000, full batch: sigma^2 = {:.4e} (floor active: {})",
        roomy.sigma2,
        roomy.floor_active()
    );
    let floored = calibrate_iterative(1, 1.0, 4, 2, &budget).unwrap();
    println!(
        "T=1, n=4, b=2:            sigma^2 = {:.4e} (floor active: {})",
        floored.sigma2,
        floored.floor_active()
    );

    // Moment bounds per order: the full-batch bound is quadratic in the
    // order; the subsampled bound refuses orders outside its hypotheses.
    println!("\nper-order moment bounds (L0=1, n=100000, b=10, sigma^2=1):");
    for lambda in [1u32, 2, 4, 16] {
        let full = moment_full(lambda, 1.0, 100_000, 1.0);
        let sub = moment_subsampled(lambda, 1.0, 100_000, 10, 1.0).unwrap();
        match sub {
            MomentBound::Available(v) => {
                println!("  order {lambda:>2}: full {full:.3e}   subsampled {v:.3e}")
            }
            MomentBound::Refused(reason) => {
                println!("  order {lambda:>2}: full {full:.3e}   subsampled refused ({reason:?})")
            }
        }
    }

    // The Renyi-to-DP conversion behind the audit.
    println!(
        "\n(alpha=2, rho=0.5)-RDP at delta=0.01 -> epsilon = {:.4}",
        rdp_to_dp(2.0, 0.5, 0.01).unwrap()
    );

    // Audit a composed run: T ledger entries, minimized over the order grid.
    let delta = 1e-3;
    println!("\naudited epsilon for a 50-step full-batch run (n=2000, L0=1):");
    for c in [1.0, 4.0, 16.0] {
        let budget = PrivacyBudget::with_constant(1.0, delta, c).unwrap();
        let cal = calibrate_iterative(50, 1.0, 2000, 2000, &budget).unwrap();
        let mut ledger = MomentsLedger::new();
        for _ in 0..50 {
            ledger.record_full_batch(1.0, 2000, cal.sigma2);
        }
        let report = ledger.audit(delta).unwrap();
        println!(
            "  c = {c:>4}: sigma^2 = {:.3e}, audited epsilon = {:.4} (order {})",
            cal.sigma2, report.epsilon, report.best_lambda
        );
    }
    println!("larger c buys more noise and the audit certifies a smaller epsilon.");
}
