use fpp_bench::inputs;
use fpp_core::multilinear::{apply_trilinear, Method};
use fpp_core::symbols::lookup;

#[test]
fn fixtures_fit_the_bandwidth_budget() {
    let m = lookup("flag(homog0,homog0)").unwrap();
    for n in [32, 64, 256] {
        let [f1, f2, f3] = inputs(n, 1);
        assert!(apply_trilinear(&m, &f1, &f2, &f3, Method::Separable).is_ok());
    }
    let [a, ..] = inputs(64, 5);
    let [b, ..] = inputs(64, 5);
    assert_eq!(a, b);
}
