use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use folner_core::cover::neighbor_lists;
use folner_core::features::OrbitFeatures;
use folner_core::metrics::{Partition, SemimetricSpec};
use folner_core::{DynamicalSystem, FolnerSequence, GroupSpec, SubshiftSystem, TorusSystem};

fn features(c: &mut Criterion) {
    let z = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
    let shift = DynamicalSystem::Subshift(SubshiftSystem::bernoulli(GroupSpec::lattice(1), 0.5).unwrap());
    let hamming = SemimetricSpec::PartitionHamming {
        partition: Partition::origin_cylinder(&shift).unwrap(),
    };
    let pts = shift.sample(1, 2000).unwrap();
    let set = z.set(64).unwrap();
    let mut g = c.benchmark_group("orbit_features");
    for (name, parallel) in [("sequential", false), ("parallel", true)] {
        g.bench_with_input(BenchmarkId::new(name, 2000), &parallel, |b, &p| {
            b.iter(|| OrbitFeatures::build_with(&shift, &hamming, &set, &pts, p).unwrap())
        });
    }
    g.finish();
}

fn neighbors(c: &mut Criterion) {
    let z = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
    let rot = DynamicalSystem::Torus(TorusSystem::golden());
    let pts = rot.sample(2, 3000).unwrap();
    let feats = OrbitFeatures::build(&rot, &SemimetricSpec::Base, &z.set(256).unwrap(), &pts).unwrap();
    let mut g = c.benchmark_group("neighbor_lists");
    for (name, parallel) in [("sequential", false), ("parallel", true)] {
        g.bench_with_input(BenchmarkId::new(name, 3000), &parallel, |b, &p| b.iter(|| neighbor_lists(&feats, 0.05, p)));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = features, neighbors
}
criterion_main!(benches);
