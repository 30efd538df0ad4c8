use proptest::prelude::*;
use trapwalk_core::mcmc::{InitialPath, MoveKind, MoveMix, MoveSpec};
use trapwalk_core::{ChainState, ModelParams, Point, WalkPath};

fn state(steps: &[u8], stream: u64) -> ChainState {
    let params = ModelParams::new(2, 0.5, steps.len(), 9).unwrap();
    let path = WalkPath::from_steps(Point::xy(0, 0), steps).unwrap();
    ChainState::from_path(params, MoveMix::default(), path, stream).unwrap()
}

proptest! {
    #[test]
    fn proposal_delta_matches_recount(
        steps in prop::collection::vec(0u8..4, 4..120),
        kind in 0usize..4,
        a in 0usize..1000,
        b in 0usize..1000,
        stream in 0u64..50,
    ) {
        let n = steps.len();
        let kind = MoveKind::ALL[kind];
        let (t0, t1) = match kind {
            MoveKind::EndpointRegrow => (a % n, n),
            MoveKind::LocalWiggle => { let t0 = a % (n - 1); (t0, (t0 + 2 + b % 3).min(n)) }
            _ => { let t0 = a % n; (t0, t0 + 1 + b % (n - t0)) }
        };
        let spec = MoveSpec::new(kind, t0, t1, n).unwrap();
        let mut st = state(&steps, stream);
        let before = st.path().range_size() as i64;
        let prop = st.propose(&spec);
        if prop.well_formed {
            prop_assert_eq!(prop.candidate.len(), n);
            prop_assert_eq!(prop.candidate.recount_range() as i64 - before, prop.delta_range);
            prop_assert_eq!(prop.candidate.range_size(), prop.candidate.recount_range());
            // steps outside the window are untouched
            prop_assert_eq!(&prop.candidate.steps()[..t0], &steps[..t0]);
            if kind != MoveKind::SegmentRegrow {
                prop_assert_eq!(&prop.candidate.steps()[t1..], &steps[t1..]);
            }
        }
    }

    #[test]
    fn chain_bookkeeping_stays_exact(steps in prop::collection::vec(0u8..4, 10..60), stream in 0u64..20) {
        let mut st = state(&steps, stream);
        for _ in 0..2000 {
            st.step();
        }
        prop_assert_eq!(st.path().range_size(), st.path().recount_range());
        prop_assert_eq!(st.log_weight(), st.path().range_size() as f64 * 0.5f64.ln());
        let resumed = ChainState::from_checkpoint(&st.checkpoint()).unwrap();
        prop_assert_eq!(resumed.path().steps(), st.path().steps());
    }
}

#[test]
fn confined_start_stays_in_ball() {
    let params = ModelParams::new(2, 0.5, 500, 1).unwrap();
    let st = ChainState::new(params, MoveMix::default(), InitialPath::Confined { radius: 4.0 }, 0).unwrap();
    assert!(st.path().positions().iter().all(|p| p.dist(&Point::xy(0, 0)) <= 4.0));
}
