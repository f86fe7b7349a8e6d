use std::time::Instant;

use folner_core::complexity::Verdict;
use folner_core::equicont::{equicontinuity_crosscheck, EquicontConfig, ModulusVerdict};
use folner_core::metrics::SemimetricSpec;
use folner_core::{DynamicalSystem, FiniteSystem, FolnerSequence, GroupSpec, SubshiftSystem, TorusSystem};

#[test]
fn default_budgets_agree() {
    let z = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
    let cfg = EquicontConfig::default();
    let cases = [
        (DynamicalSystem::Torus(TorusSystem::golden()), ModulusVerdict::Vanishing, Verdict::Bounded),
        (
            DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap()),
            ModulusVerdict::Floored,
            Verdict::Growing,
        ),
        (DynamicalSystem::Finite(FiniteSystem::cyclic_shift(8).unwrap()), ModulusVerdict::Vanishing, Verdict::Bounded),
    ];
    for (sys, m, c) in cases {
        let t = Instant::now();
        let r = equicontinuity_crosscheck(&sys, &SemimetricSpec::Base, &z, &cfg).unwrap();
        eprintln!(
            "{:?} {:?} {:?} lim {:?} all {:?} pairs {:?} {:.1}s",
            r.limsup_verdict,
            r.all_n_verdict,
            r.complexity.verdict,
            r.limsup.modulus,
            r.all_n.modulus,
            r.all_n.pairs_used,
            t.elapsed().as_secs_f64()
        );
        assert_eq!((r.limsup_verdict, r.all_n_verdict, r.complexity.verdict), (m, m, c));
        assert!(r.agree && !r.falsification_candidate);
    }
}
