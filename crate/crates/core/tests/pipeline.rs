use ergavg_core::averaging::{cesaro_series, AverageSpec, CheckpointSchedule};
use ergavg_core::diagnostics::{k_limit_target, median};
use ergavg_core::lattice::{select_weights, GroupElement};
use ergavg_core::polys::{IntPoly, PolynomialFamily};
use ergavg_core::systems::field::SymbolLaw;
use ergavg_core::systems::{sample_point, BernoulliShift, CylinderObservable, Observable, SystemInstance};
use ergavg_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;

fn ge(c: &[i128]) -> GroupElement {
    GroupElement::new(c.to_vec())
}

fn worked() -> PolynomialFamily {
    PolynomialFamily::from_columns(
        2,
        vec![
            vec![IntPoly::monomial(3, 2), IntPoly::monomial(8, 2)],
            vec![IntPoly::monomial(1, 2), IntPoly::monomial(-1, 2)],
        ],
    )
    .unwrap()
}

fn setup() -> (SystemInstance, Vec<Observable>) {
    let sys = SystemInstance::Bernoulli(BernoulliShift::new(2, SymbolLaw::uniform(2).unwrap(), 3).unwrap());
    let obs = vec![
        Observable::Cylinder(CylinderObservable::indicator(2, 2, vec![ge(&[0, 0])], &[1]).unwrap()),
        Observable::Cylinder(CylinderObservable::indicator(2, 2, vec![ge(&[0, 0]), ge(&[0, 1])], &[1, 1]).unwrap()),
    ];
    (sys, obs)
}

#[test]
fn averages_approach_the_product_of_integrals() {
    let (sys, obs) = setup();
    let fam = worked();
    assert_eq!(select_weights(&fam).unwrap().weights.as_slice(), &[1, 2]);
    let target = k_limit_target(&sys, &obs, &fam).unwrap();
    assert_eq!(target, BigRational::new(BigInt::from(1), BigInt::from(8)));

    let spec = AverageSpec { sys: &sys, obs: &obs, fam: &fam };
    let sched = CheckpointSchedule::new(vec![1_000, 20_000]).unwrap();
    let errs: Vec<Vec<f64>> = (0..16)
        .map(|s| {
            let a = cesaro_series(&spec, &sample_point(&sys, s), &sched).unwrap();
            a.iter().map(|v| (v - 0.125).abs()).collect()
        })
        .collect();
    let early = median(&errs.iter().map(|e| e[0]).collect::<Vec<_>>());
    let late = median(&errs.iter().map(|e| e[1]).collect::<Vec<_>>());
    assert!(late < 0.02, "median error {late}");
    assert!(late < early);
}

#[test]
fn degenerate_family_has_no_limit_formula() {
    let (sys, obs) = setup();
    let col = vec![IntPoly::monomial(1, 1), IntPoly::monomial(1, 2)];
    let fam = PolynomialFamily::from_columns(2, vec![col.clone(), col]).unwrap();
    assert!(matches!(k_limit_target(&sys, &obs, &fam), Err(Error::NondegenerateFamilyRequired(_))));
}
