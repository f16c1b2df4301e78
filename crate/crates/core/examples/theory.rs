//! Build a mean configuration that provably satisfies the separation and
//! effect conditions, check its certificate, and print the theory report for
//! the simulation setting.
//!
//! `cargo run --release --example theory`

use sparse_mclass::covariance::{build_structured_covariance, CovarianceStructure};
use sparse_mclass::theory::{
    certify, construct_satisfying_instance, fano_bound, theory_report, InstanceConditions,
    InstanceRequest, RegimeCutoffs, TheoryParams, DEFAULT_C1,
};

fn main() -> sparse_mclass::Result<()> {
    let cov = build_structured_covariance(CovarianceStructure::Independent, 200, 1.0)?;
    for (p1, l) in [(10, 5), (10, 40)] {
        let req = InstanceRequest {
            p: 200,
            p1,
            n_classes: l,
            n: 20,
            alpha: 0.1,
            margin: 1.2,
            conditions: InstanceConditions::Known,
        };
        let inst = construct_satisfying_instance(&req, &cov)?;
        let c = &inst.certificate;
        println!(
            "p1={p1} L={l}: {:?} geometry, binding {:?}, separation margin {:.3}, effect margin {:.3}",
            c.geometry, c.binding, c.separation_margin, c.effect_margin
        );
        // the certificate is reproducible from the means alone
        let again = certify(&inst.means, &cov, req.n, req.alpha, req.conditions)?;
        assert!(again.separation.satisfied && again.effect.satisfied);
        let f = fano_bound(c.min_delta_sq / 20.0, l)?;
        println!(
            "  at 1/20 of that separation no rule beats worst-case error {:.3}",
            f.lower_bound
        );
    }

    let (conditions, g) = InstanceConditions::estimated_for(
        &build_structured_covariance(CovarianceStructure::Independent, 100, 1.0)?,
        8,
        2,
        500,
        0.05,
        DEFAULT_C1,
    )?;
    println!(
        "estimated covariance: gamma {:.3}, p1 window ({:.2}, {:.2}), {conditions:?}",
        g.gamma, g.p1_lower, g.p1_upper
    );

    let report = theory_report(&TheoryParams {
        p: 500,
        p1: 100,
        n: 20,
        n_classes: 50,
        alpha: 0.05,
        c1: DEFAULT_C1,
        eig_min: 1.0,
        eig_max: 1.0,
        fano_delta_sq: None,
        cutoffs: RegimeCutoffs::default(),
    })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
