use vandconv::ensembles::{ensemble_moment, EnsembleKind};
use vandconv::rational::to_f64;
use vandconv::simulate::ensemble_trial_moments;

const N: usize = 1024;
const TRIALS: usize = 20;

fn agrees_with_exact(kind: EnsembleKind) {
    let r = ensemble_trial_moments(kind, N, 3, TRIALS, 7).unwrap();
    let exact: Vec<f64> = (1..=3).map(|i| to_f64(&ensemble_moment(kind, 2 * i).unwrap())).collect();
    assert!(r.within(&exact, 3.0, 1e-9), "{kind:?}: {:?} ± {:?} vs {exact:?}", r.mean, r.stderr);
}

#[test]
fn toeplitz_traces_match_exact_moments() {
    agrees_with_exact(EnsembleKind::Toeplitz);
}

#[test]
fn hankel_traces_match_exact_moments() {
    agrees_with_exact(EnsembleKind::Hankel);
}
