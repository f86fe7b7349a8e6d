use std::time::Instant;

use folner_core::complexity::Verdict;
use folner_core::metrics::Observable;
use folner_core::spectrum::{ap_vs_complexity_crosscheck, APCrosscheckConfig, APVerdict};
use folner_core::{DynamicalSystem, FolnerSequence, GroupElement, GroupSpec, SubshiftSystem, TorusSystem};

#[test]
fn three_system_suite_agrees() {
    let z = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
    let rotation = DynamicalSystem::Torus(TorusSystem::golden());
    let bernoulli = DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap());
    let cases = [
        (&rotation, Observable::Character { frequencies: vec![1] }, APVerdict::PrecompactConsistent, Verdict::Bounded),
        (
            &bernoulli,
            Observable::Cylinder {
                at: GroupElement::new(&[0]),
                symbol: 1,
            },
            APVerdict::Growing,
            Verdict::Growing,
        ),
        (&bernoulli, Observable::Constant { value: 1.0 }, APVerdict::PrecompactConsistent, Verdict::Bounded),
    ];
    for (sys, h, ap, c) in cases {
        let t = Instant::now();
        let r = ap_vs_complexity_crosscheck(sys, &h, &z, &APCrosscheckConfig::default()).unwrap();
        eprintln!("{:?}: {:?} {:?} {:?} {:.1}s", h, r.ap_verdict, r.complexity.verdict, r.ap.iter().map(|a| &a.net_sizes).collect::<Vec<_>>(), t.elapsed().as_secs_f64());
        for f in &r.complexity.fits {
            eprintln!("   {:?}", f);
        }
        assert_eq!(r.ap_verdict, ap);
        assert_eq!(r.complexity.verdict, c);
        assert!(r.agree && !r.falsification_candidate);
    }
}
